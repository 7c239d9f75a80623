#include "tclid/propagator.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tclid {

std::optional<std::size_t> TraceSet::index_of(const std::string& name) const
{
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    return std::nullopt;
}

double TraceSet::value(const std::string& name, std::size_t k) const
{
    const auto idx = index_of(name);
    if (!idx) throw std::out_of_range("TraceSet: no trace for '" + name + "'");
    if (k >= sample_count()) throw std::out_of_range("TraceSet: sample index out of range");
    return samples(static_cast<Eigen::Index>(*idx), static_cast<Eigen::Index>(k));
}

Stepper::Stepper(const TclModel& model) : liouvillian_(model.hamiltonian(), model.channels()) {}

Operator Stepper::step(const Operator& rho, std::span<const double> gamma, double dt) const
{
    if (rho.dim() != liouvillian_.dim()) throw DimensionError("step: state dimension does not match model");
    if (!(dt >= 0.0)) throw std::invalid_argument("step: dt must be >= 0");
    const Matrix generator = dt * liouvillian_.at(gamma).matrix();
    const Vector next = expm(generator) * vectorize(rho);
    if (!next.allFinite()) throw NumericalError("step: non-finite state");
    // The exact map preserves Hermiticity; drop the round-off part.
    const Matrix m = unvectorize(next, rho.dim()).matrix();
    return Operator(0.5 * (m + m.adjoint()));
}

Operator step(const TclModel& model, const Operator& rho, std::span<const double> gamma, double dt)
{
    return Stepper(model).step(rho, gamma, dt);
}

Trajectory simulate(const TclModel& model, std::span<const RateFunction> rates, const Operator& rho0, double big_t,
                    int k_steps)
{
    if (k_steps < 1) throw std::invalid_argument("simulate: K must be >= 1");
    if (!(big_t > 0.0)) throw std::invalid_argument("simulate: T must be > 0");
    if (rates.size() != model.channel_count()) throw DimensionError("simulate: one rate function per channel required");
    if (rho0.dim() != model.dim()) throw DimensionError("simulate: initial state dimension does not match model");
    if (std::abs(rho0.trace() - Complex(1.0)) > 1e-10 || !rho0.is_hermitian(1e-10)) {
        throw std::invalid_argument("simulate: initial state must be unit-trace Hermitian");
    }

    const Stepper stepper(model);
    Trajectory traj;
    traj.dt = big_t / k_steps;
    traj.states.reserve(static_cast<std::size_t>(k_steps) + 1);
    traj.states.push_back(rho0);
    for (int k = 0; k < k_steps; ++k) {
        const auto gamma = eval_rates(rates, k * traj.dt);
        traj.states.push_back(stepper.step(traj.states.back(), gamma, traj.dt));
    }
    return traj;
}

TraceSet measure_traces(const Trajectory& traj, const ObservablePool& pool, double noise_std, std::uint64_t seed)
{
    if (!(noise_std >= 0.0)) throw std::invalid_argument("measure_traces: noise_std must be >= 0");
    TraceSet out;
    out.dt = traj.dt;
    out.names = pool.names();
    out.noise_std = noise_std;
    const auto n_obs = static_cast<Eigen::Index>(pool.size());
    const auto n_samples = static_cast<Eigen::Index>(traj.states.size());
    out.samples.resize(n_obs, n_samples);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
    for (Eigen::Index k = 0; k < n_samples; ++k) {
        for (Eigen::Index m = 0; m < n_obs; ++m) {
            const auto& obs = pool.observables()[static_cast<std::size_t>(m)].op;
            double y = expectation(obs, traj.states[static_cast<std::size_t>(k)]).real();
            if (noise_std > 0.0) y += noise(rng);
            out.samples(m, k) = y;
        }
    }
    return out;
}

} // namespace tclid
