#include "tclid/identifier.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace tclid {

namespace {

constexpr double kImagTolerance = 1e-10;

double real_expectation(const Operator& a, const Operator& rho)
{
    const Complex v = expectation(a, rho);
    const double scale = std::max(1.0, a.matrix().norm() * rho.matrix().norm());
    if (std::abs(v.imag()) > kImagTolerance * scale) {
        throw NumericalError("expectation of a Hermitian image has imaginary part " + std::to_string(v.imag()) +
                             " (scale " + std::to_string(scale) + ")");
    }
    return v.real();
}

/// Smallest of the N singular values of an M x N matrix; 0 when M < N.
double sigma_min_of(const RealMatrix& w)
{
    if (w.rows() < w.cols() || w.cols() == 0) return 0.0;
    Eigen::JacobiSVD<RealMatrix> svd(w);
    return svd.singularValues().minCoeff();
}

RealMatrix without_row(const RealMatrix& w, Eigen::Index skip)
{
    RealMatrix out(w.rows() - 1, w.cols());
    for (Eigen::Index r = 0, o = 0; r < w.rows(); ++r) {
        if (r != skip) out.row(o++) = w.row(r);
    }
    return out;
}

/// Row indices ordered from weakest to strongest contribution to sigma_min.
std::vector<std::size_t> weakest_rows(const RealMatrix& w)
{
    const auto m = static_cast<std::size_t>(w.rows());
    std::vector<double> score(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const RealMatrix rest = without_row(w, static_cast<Eigen::Index>(i));
        if (rest.rows() >= w.cols() && rest.rows() > 0) {
            // Removing a weak row leaves a large sigma_min.
            score[i] = -sigma_min_of(rest);
        } else {
            // Distance of row i from the span of the other rows.
            const RealVector target = w.row(static_cast<Eigen::Index>(i)).transpose();
            if (rest.rows() == 0) {
                score[i] = target.norm();
            } else {
                const RealMatrix basis = rest.transpose();
                const RealVector coeff = basis.completeOrthogonalDecomposition().solve(target);
                score[i] = (basis * coeff - target).norm();
            }
        }
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    return order;
}

using RowSource = std::function<RealVector(const std::string&)>;

SubstitutionResult repair(const std::vector<std::string>& pool_names, std::span<const std::string> active,
                          const RowSource& row_of, double threshold, std::optional<double> reference)
{
    SubstitutionResult result;
    result.active.assign(active.begin(), active.end());

    RealMatrix w(static_cast<Eigen::Index>(active.size()), 0);
    for (std::size_t m = 0; m < active.size(); ++m) {
        RealVector row = row_of(active[m]);
        if (m == 0) w.resize(static_cast<Eigen::Index>(active.size()), row.size());
        w.row(static_cast<Eigen::Index>(m)) = row.transpose();
    }
    const double sigma_before = sigma_min_of(w);
    double sigma_max = 0.0;
    if (w.size() > 0) sigma_max = Eigen::JacobiSVD<RealMatrix>(w).singularValues().maxCoeff();
    const double ref = reference.value_or(sigma_max);
    result.sigma_before = sigma_before;
    result.sigma_after = sigma_before;
    if (!is_near_singular(sigma_before, threshold, ref)) return result;

    std::vector<std::string> candidates;
    for (const auto& name : pool_names) {
        if (std::find(active.begin(), active.end(), name) == active.end()) candidates.push_back(name);
    }
    if (candidates.empty()) throw std::invalid_argument("substitute: no inactive observable in the pool");

    std::vector<RealVector> candidate_rows;
    candidate_rows.reserve(candidates.size());
    for (const auto& c : candidates) candidate_rows.push_back(row_of(c));

    double best_sigma = sigma_before;
    std::optional<std::pair<std::size_t, std::size_t>> best; // (row, candidate)
    for (std::size_t row : weakest_rows(w)) {
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            RealMatrix trial = w;
            trial.row(static_cast<Eigen::Index>(row)) = candidate_rows[c].transpose();
            const double s = sigma_min_of(trial);
            if (s > best_sigma) {
                best_sigma = s;
                best = {row, c};
            }
        }
        if (best && !is_near_singular(best_sigma, threshold, ref)) break;
    }

    // A swap that leaves W near-singular must at least buy a material gain;
    // marginal gains only make the active set oscillate between candidates.
    if (best && is_near_singular(best_sigma, threshold, ref) && best_sigma < (1.0 + kMinRepairGain) * sigma_before) {
        best.reset();
    }
    if (!best) {
        result.warning = true;
        return result;
    }
    const auto [row, c] = *best;
    result.changed = true;
    result.row = row;
    result.removed = result.active[row];
    result.added = candidates[c];
    result.active[row] = candidates[c];
    result.sigma_after = best_sigma;
    result.warning = is_near_singular(best_sigma, threshold, ref);
    return result;
}

} // namespace

HeisenbergImages heisenberg_images(const TclModel& model, const Operator& observable)
{
    if (observable.dim() != model.dim()) throw DimensionError("observable dimension does not match model");
    HeisenbergImages out{adjoint_hamiltonian_apply(model.hamiltonian(), observable), {}};
    out.channels.reserve(model.channel_count());
    for (const auto& l : model.channels()) out.channels.push_back(adjoint_dissipator_apply(l, observable));
    return out;
}

RealVector w_row(const HeisenbergImages& images, const Operator& rho)
{
    RealVector row(static_cast<Eigen::Index>(images.channels.size()));
    for (std::size_t n = 0; n < images.channels.size(); ++n) {
        row(static_cast<Eigen::Index>(n)) = real_expectation(images.channels[n], rho);
    }
    return row;
}

double drift_expectation(const HeisenbergImages& images, const Operator& rho)
{
    return real_expectation(images.drift, rho);
}

RealMatrix build_w(const TclModel& model, const Operator& rho, std::span<const Operator> active)
{
    if (active.empty()) throw std::invalid_argument("build_w: at least one observable required");
    if (rho.dim() != model.dim()) throw DimensionError("build_w: state dimension does not match model");
    RealMatrix w(static_cast<Eigen::Index>(active.size()), static_cast<Eigen::Index>(model.channel_count()));
    for (std::size_t m = 0; m < active.size(); ++m) {
        w.row(static_cast<Eigen::Index>(m)) = w_row(heisenberg_images(model, active[m]), rho).transpose();
    }
    return w;
}

RealVector build_b(const TraceSet& traces, std::size_t k, const TclModel& model, const Operator& rho,
                   std::span<const std::string> active_names, std::span<const Operator> active_ops)
{
    if (active_names.size() != active_ops.size()) throw std::invalid_argument("build_b: names and operators differ");
    if (traces.sample_count() < 2 || k + 1 >= traces.sample_count()) {
        throw std::out_of_range("build_b: step index " + std::to_string(k) + " outside [0, " +
                                std::to_string(traces.sample_count() > 0 ? traces.sample_count() - 1 : 0) + ")");
    }
    if (rho.dim() != model.dim()) throw DimensionError("build_b: state dimension does not match model");
    RealVector b(static_cast<Eigen::Index>(active_names.size()));
    for (std::size_t m = 0; m < active_names.size(); ++m) {
        const double diff = (traces.value(active_names[m], k + 1) - traces.value(active_names[m], k)) / traces.dt;
        const Operator drift = adjoint_hamiltonian_apply(model.hamiltonian(), active_ops[m]);
        b(static_cast<Eigen::Index>(m)) = diff - real_expectation(drift, rho);
    }
    return b;
}

RateSolve solve_rates(const RealMatrix& w, const RealVector& b, double sigma_threshold)
{
    if (w.rows() < w.cols()) {
        throw std::invalid_argument("solve_rates: underdetermined system (" + std::to_string(w.rows()) +
                                    " observables < " + std::to_string(w.cols()) + " rates)");
    }
    if (w.rows() != b.size()) throw DimensionError("solve_rates: W and b have different row counts");
    if (w.cols() == 0) throw std::invalid_argument("solve_rates: no rates to solve for");

    Eigen::JacobiSVD<RealMatrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sv = svd.singularValues();

    RateSolve out;
    out.singular_values = sv;
    out.sigma_max = sv(0);
    out.sigma_min = sv(sv.size() - 1);
    out.cond = out.sigma_min > 0.0 ? out.sigma_max / out.sigma_min : std::numeric_limits<double>::infinity();

    const double cutoff = sigma_threshold * out.sigma_max;
    out.gamma = RealVector::Zero(w.cols());
    const RealVector ub = svd.matrixU().transpose() * b;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > 0.0 && sv(i) >= cutoff) {
            out.gamma += svd.matrixV().col(i) * (ub(i) / sv(i));
            ++out.rank;
        }
    }
    out.rank_deficient = out.rank < static_cast<int>(w.cols());
    out.residual = (w * out.gamma - b).norm();
    return out;
}

bool is_near_singular(double sigma_min, double threshold, double reference)
{
    return sigma_min == 0.0 || sigma_min < threshold * reference;
}

SubstitutionResult substitute(const ObservablePool& pool, const TclModel& model, const Operator& rho,
                              std::span<const std::string> active, double sigma_threshold,
                              std::optional<double> reference)
{
    if (active.empty()) throw std::invalid_argument("substitute: empty active set");
    const RowSource row_of = [&](const std::string& name) {
        return w_row(heisenberg_images(model, pool.get(name)), rho);
    };
    return repair(pool.names(), active, row_of, sigma_threshold, reference);
}

DivergenceError::DivergenceError(std::size_t step, IdentificationResult partial, const std::string& what)
    : NumericalError(what), step_(step), partial_(std::move(partial))
{
}

RankDeficiencyError::RankDeficiencyError(std::size_t step, std::vector<double> sigma_history)
    : std::runtime_error("irreparable rank deficiency of W at step " + std::to_string(step) + " (sigma_min " +
                         std::to_string(sigma_history.empty() ? 0.0 : sigma_history.back()) + ")"),
      step_(step), sigma_history_(std::move(sigma_history))
{
}

TraceSet smooth_traces(const TraceSet& traces, int window)
{
    if (window <= 1) return traces;
    TraceSet out = traces;
    const Eigen::Index n = traces.samples.cols();
    const Eigen::Index half = window / 2;
    for (Eigen::Index m = 0; m < traces.samples.rows(); ++m) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const Eigen::Index lo = std::max<Eigen::Index>(0, k - half);
            const Eigen::Index hi = std::min<Eigen::Index>(n - 1, k + half);
            out.samples(m, k) = traces.samples.row(m).segment(lo, hi - lo + 1).mean();
        }
    }
    return out;
}

IdentificationResult identify(const TclModel& model, const TraceSet& raw_traces, const ObservablePool& pool,
                              const Operator& rho0, const IdentifyOptions& options)
{
    const std::size_t n_rates = model.channel_count();
    std::vector<std::string> active = pool.active();
    if (active.size() < n_rates) {
        throw std::invalid_argument("identify: " + std::to_string(active.size()) + " active observables cannot determine " +
                                    std::to_string(n_rates) + " rates");
    }
    if (raw_traces.sample_count() < 2) throw std::invalid_argument("identify: at least two samples are required");
    if (!(raw_traces.dt > 0.0)) throw std::invalid_argument("identify: sampling interval must be > 0");
    if (rho0.dim() != model.dim()) throw DimensionError("identify: initial state dimension does not match model");
    const auto& required = options.substitution ? pool.names() : active;
    for (const auto& name : required) {
        if (!raw_traces.index_of(name)) throw std::invalid_argument("identify: no trace for observable '" + name + "'");
    }

    const TraceSet traces = smooth_traces(raw_traces, options.smoothing_window);
    const std::size_t k_steps = traces.sample_count() - 1;
    const double dt = traces.dt;

    std::vector<HeisenbergImages> images;
    images.reserve(pool.size());
    for (const auto& o : pool.observables()) images.push_back(heisenberg_images(model, o.op));
    const auto image_of = [&](const std::string& name) -> const HeisenbergImages& {
        return images[*pool.index_of(name)];
    };
    const auto trace_row = [&](const std::string& name) { return static_cast<Eigen::Index>(*traces.index_of(name)); };

    const Stepper stepper(model);
    const auto n_obs = static_cast<Eigen::Index>(active.size());

    IdentificationResult result;
    result.dt = dt;
    result.gammas.resize(static_cast<Eigen::Index>(n_rates), static_cast<Eigen::Index>(k_steps));
    result.states.reserve(k_steps + 1);
    result.states.push_back(rho0);
    result.diagnostics.reserve(k_steps);

    std::vector<double> sigma_history;
    sigma_history.reserve(k_steps);
    double reference = 0.0;
    RealMatrix w(n_obs, static_cast<Eigen::Index>(n_rates));
    RealVector b(n_obs);

    for (std::size_t k = 0; k < k_steps; ++k) {
        const Operator& rho = result.states.back();
        for (Eigen::Index m = 0; m < n_obs; ++m) {
            w.row(m) = w_row(image_of(active[static_cast<std::size_t>(m)]), rho).transpose();
        }

        StepDiagnostics diag;
        diag.k = k;
        {
            Eigen::JacobiSVD<RealMatrix> svd(w);
            diag.sigma_min_before = svd.singularValues().minCoeff();
            reference = std::max(reference, svd.singularValues().maxCoeff());
        }

        if (options.substitution && is_near_singular(diag.sigma_min_before, options.sigma_threshold, reference)) {
            const RowSource row_of = [&](const std::string& name) { return w_row(image_of(name), rho); };
            SubstitutionResult sub = repair(pool.names(), active, row_of, options.sigma_threshold, reference);
            diag.repair_warning = sub.warning;
            if (sub.changed) {
                active = std::move(sub.active);
                diag.substituted = true;
                ++result.substitution_count;
                for (Eigen::Index m = 0; m < n_obs; ++m) {
                    w.row(m) = w_row(image_of(active[static_cast<std::size_t>(m)]), rho).transpose();
                }
            }
            const double sigma_now = sub.changed ? sub.sigma_after : diag.sigma_min_before;
            if (sigma_now <= options.rank_floor * reference) {
                sigma_history.push_back(sigma_now);
                throw RankDeficiencyError(k, std::move(sigma_history));
            }
        }

        for (Eigen::Index m = 0; m < n_obs; ++m) {
            const auto& name = active[static_cast<std::size_t>(m)];
            const Eigen::Index row = trace_row(name);
            const double diff = (traces.samples(row, static_cast<Eigen::Index>(k + 1)) -
                                 traces.samples(row, static_cast<Eigen::Index>(k))) / dt;
            b(m) = diff - drift_expectation(image_of(name), rho);
        }

        const RateSolve solve = solve_rates(w, b, options.sigma_threshold);
        result.gammas.col(static_cast<Eigen::Index>(k)) = solve.gamma;

        diag.sigma_min = solve.sigma_min;
        diag.sigma_max = solve.sigma_max;
        diag.cond = solve.cond;
        diag.singular_values = solve.singular_values;
        if (w.rows() == w.cols()) diag.det = w.determinant();
        diag.active_names = active;
        diag.rank_deficient = solve.rank_deficient;
        diag.residual = solve.residual;
        sigma_history.push_back(solve.sigma_min);
        result.diagnostics.push_back(std::move(diag));

        const auto diverged = [&](const std::string& what) {
            result.gammas.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(k + 1));
            return DivergenceError(k, std::move(result), "identify: " + what + " at step " + std::to_string(k));
        };
        if (!solve.gamma.allFinite()) throw diverged("non-finite rate");
        const std::vector<double> gamma(solve.gamma.data(), solve.gamma.data() + solve.gamma.size());
        try {
            result.states.push_back(stepper.step(rho, gamma, dt));
        } catch (const NumericalError& e) {
            throw diverged(e.what());
        }
    }
    return result;
}

} // namespace tclid
