// TCL system description, damping-rate functions, observable
// pools and the built-in atom / three-spin-chain systems.
//
// Units: frequencies and rates in GHz-like dimensionless units, time in the
// reciprocal unit, so omega * t is O(10) over the default horizon T = 10.

#pragma once

#include "tclid/qops.hpp"

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace tclid {

/// H plus an ordered list of N >= 1 Lindblad coupling operators.
class TclModel {
public:
    /// Validates: H Hermitian within 1e-10, every channel of the same dim, N >= 1.
    /// Empty labels are replaced by "gamma1", "gamma2", ...
    TclModel(Operator hamiltonian, std::vector<Operator> channels, std::vector<std::string> labels = {});

    int dim() const { return hamiltonian_.dim(); }
    std::size_t channel_count() const { return channels_.size(); }

    const Operator& hamiltonian() const { return hamiltonian_; }
    const std::vector<Operator>& channels() const { return channels_; }
    const Operator& channel(std::size_t n) const { return channels_.at(n); }
    const std::vector<std::string>& labels() const { return labels_; }

private:
    Operator hamiltonian_;
    std::vector<Operator> channels_;
    std::vector<std::string> labels_;
};

Superoperator liouvillian_matrix(const TclModel& model, std::span<const double> gamma);

// ------------------------------ Rate functions -----------------------------

/// 2 g0 lambda sinh(d t/2) / (d cosh(d t/2) + lambda sinh(d t/2)).
/// Saturates at 2 g0 lambda / (d + lambda).
struct HyperbolicRate {
    double gamma0 = 0.0;
    double lambda = 0.0;
    double d = 0.0;
};

/// Damped-oscillatory rate of the second spin-chain channel, with the
/// bracket factor (d/lambda)^2 in the last term (the only regular reading).
struct OscillatoryRate {
    double gamma0 = 0.0;
    double lambda = 0.0;
    double d = 0.0;
};

/// values[k] on [k dt, (k+1) dt); the last value is held past the end.
struct PiecewiseConstantRate {
    std::vector<double> values;
    double dt = 0.0;
};

/// Linear interpolation through (times, values), constant outside the range.
struct TabulatedRate {
    std::vector<double> times;
    std::vector<double> values;
};

using RateFunction = std::variant<HyperbolicRate, OscillatoryRate, PiecewiseConstantRate, TabulatedRate>;

/// Checks the per-variant invariants (sample counts, increasing times, dt > 0).
void validate_rate(const RateFunction& f);

/// Throws std::domain_error for t < 0.
double eval_rate(const RateFunction& f, double t);

std::vector<double> eval_rates(std::span<const RateFunction> rates, double t);

std::string rate_kind(const RateFunction& f);

// ----------------------------- Observable pool -----------------------------

struct NamedObservable {
    std::string name;
    Operator op;
};

/// Named Hermitian observables available for measurement plus the ordered
/// subset currently used by the identifier.
class ObservablePool {
public:
    ObservablePool() = default;
    ObservablePool(std::vector<NamedObservable> observables, std::vector<std::string> active);

    const std::vector<NamedObservable>& observables() const { return observables_; }
    const std::vector<std::string>& active() const { return active_; }
    std::size_t size() const { return observables_.size(); }

    std::optional<std::size_t> index_of(const std::string& name) const;
    const Operator& get(const std::string& name) const;
    std::vector<std::string> names() const;
    std::vector<Operator> operators(std::span<const std::string> names) const;
    std::vector<Operator> active_operators() const { return operators(active_); }

    ObservablePool with_active(std::vector<std::string> active) const;

private:
    std::vector<NamedObservable> observables_;
    std::vector<std::string> active_;
};

// ---------------------------- Built-in systems -----------------------------

struct ExampleSystem {
    TclModel model;
    std::vector<RateFunction> rates;
    Operator initial_state;
    /// Default measurement pool (all single-site Pauli x/y/z).
    ObservablePool pool;
};

/// Two-level atom: H = omega_q/2 sigma_z (omega_q = 1), L = sigma_-,
/// hyperbolic rate (0.5, 0.1, 0.6), rho(0) on the (1,1,1)/sqrt(3) Bloch direction.
/// Pool {sigma_x, sigma_y, sigma_z}, active {sigma_z}.
ExampleSystem build_atom_example();

/// Three spins with XY couplings, one lowering channel per site.
/// Pool {sigma_<a><i>} for a in x,y,z and i in 1..3, active {sigma_z1, sigma_z2, sigma_z3}.
ExampleSystem build_spin_chain_example();

/// 1/2 (I + (sigma_x + sigma_y + sigma_z)/sqrt(3)).
Operator tilted_qubit_state();

/// Single-site Pauli x/y/z observables named "sigma_<axis>" (one site) or
/// "sigma_<axis><site+1>" (several sites).
std::vector<NamedObservable> pauli_observables(int n_sites);

} // namespace tclid
