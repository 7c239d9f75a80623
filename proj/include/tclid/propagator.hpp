// Piecewise-constant propagation of TCL dynamics and
// synthesis of sampled observable traces.

#pragma once

#include "tclid/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tclid {

/// States rho(k dt), k = 0..K.
struct Trajectory {
    double dt = 0.0;
    std::vector<Operator> states;

    std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
};

/// y_m(k dt) for every pool observable, one row per observable.
struct TraceSet {
    double dt = 0.0;
    std::vector<std::string> names;
    RealMatrix samples; // names.size() x (K+1)
    double noise_std = 0.0;

    std::size_t sample_count() const { return static_cast<std::size_t>(samples.cols()); }
    std::optional<std::size_t> index_of(const std::string& name) const;
    /// Throws std::out_of_range for unknown names.
    double value(const std::string& name, std::size_t k) const;
};

/// Advances states by exp(dt * L(gamma)) with the Liouvillian pieces assembled once.
class Stepper {
public:
    explicit Stepper(const TclModel& model);

    /// dt >= 0; gamma.size() == N.
    Operator step(const Operator& rho, std::span<const double> gamma, double dt) const;

    const AffineLiouvillian& liouvillian() const { return liouvillian_; }

private:
    AffineLiouvillian liouvillian_;
};

Operator step(const TclModel& model, const Operator& rho, std::span<const double> gamma, double dt);

/// dt = T/K, gamma_k = rates(k dt) held on [k dt, (k+1) dt).
/// Throws std::invalid_argument if rho0 is not unit-trace Hermitian (1e-10).
Trajectory simulate(const TclModel& model, std::span<const RateFunction> rates, const Operator& rho0, double big_t,
                    int k_steps);

/// Expectations tr[O rho] over the whole pool plus optional i.i.d. Gaussian
/// noise of standard deviation noise_std, deterministic in seed.
TraceSet measure_traces(const Trajectory& traj, const ObservablePool& pool, double noise_std, std::uint64_t seed);

} // namespace tclid
