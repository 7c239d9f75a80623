#include "tclid/identifiability.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <tuple>

namespace tclid {

namespace {

constexpr double kZeroOperator = 1e-12;
constexpr double kDependencyResidual = 1e-8;

RealMatrix stack_arrays(const TclModel& model, std::span<const Operator> ops)
{
    const auto len = static_cast<Eigen::Index>(2 * model.channel_count() * static_cast<std::size_t>(model.dim()) *
                                               static_cast<std::size_t>(model.dim()));
    RealMatrix out(static_cast<Eigen::Index>(ops.size()), len);
    for (std::size_t i = 0; i < ops.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = image_array(model, ops[i]).transpose();
    return out;
}

/// Magnitude below which image arrays count as linearly dependent.
double rank_cutoff(const TclModel& model, std::span<const Operator> ops, double sigma_max)
{
    double op_scale = 0.0;
    for (const auto& o : ops) op_scale = std::max(op_scale, o.matrix().norm());
    double channel_scale = 0.0;
    for (const auto& l : model.channels()) channel_scale = std::max(channel_scale, l.matrix().squaredNorm());
    return kRankTolerance * std::max(sigma_max, op_scale * channel_scale);
}

RealVector singular_values(const RealMatrix& m)
{
    if (m.size() == 0) return RealVector(0);
    return Eigen::JacobiSVD<RealMatrix>(m).singularValues();
}

int count_above(const RealVector& sv, double cutoff)
{
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > cutoff ? 1 : 0;
    return r;
}

/// Greedy pivoted Gram-Schmidt over rows in order.
std::vector<std::size_t> independent_rows(const RealMatrix& arrays, double cutoff)
{
    std::vector<RealVector> basis;
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < arrays.rows(); ++i) {
        RealVector r = arrays.row(i).transpose();
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) r -= q.dot(r) * q;
        }
        const double norm = r.norm();
        if (norm > cutoff) {
            basis.push_back(r / norm);
            out.push_back(static_cast<std::size_t>(i));
        }
    }
    return out;
}

bool all_zero(std::span<const Operator> ops)
{
    return std::all_of(ops.begin(), ops.end(), [](const Operator& o) { return o.max_abs() <= kZeroOperator; });
}

} // namespace

RealVector image_array(const TclModel& model, const Operator& observable)
{
    if (observable.dim() != model.dim()) throw DimensionError("image_array: observable dimension does not match model");
    const auto block = static_cast<Eigen::Index>(model.dim()) * model.dim();
    RealVector out(2 * block * static_cast<Eigen::Index>(model.channel_count()));
    for (std::size_t n = 0; n < model.channel_count(); ++n) {
        const Vector v = vectorize(adjoint_dissipator_apply(model.channel(n), observable));
        const auto offset = 2 * block * static_cast<Eigen::Index>(n);
        out.segment(offset, block) = v.real();
        out.segment(offset + block, block) = v.imag();
    }
    return out;
}

RankReport operator_rank(const TclModel& model, std::span<const Operator> observables)
{
    if (observables.empty()) throw std::invalid_argument("operator_rank: no observables");
    const RealMatrix arrays = stack_arrays(model, observables);
    RankReport out;
    out.gram_singular_values = singular_values(arrays);
    const double sigma_max = out.gram_singular_values.size() ? out.gram_singular_values(0) : 0.0;
    const double cutoff = rank_cutoff(model, observables, sigma_max);
    out.rank = count_above(out.gram_singular_values, cutoff);
    out.independent_indices = independent_rows(arrays, cutoff);
    return out;
}

std::string to_string(ExtensionPath path)
{
    switch (path) {
    case ExtensionPath::Terminal: return "terminal";
    case ExtensionPath::Dependency: return "dependency";
    case ExtensionPath::Adjoin: return "adjoin";
    case ExtensionPath::Exhausted: return "exhausted";
    }
    return "?";
}

ExtensionStep extend_observables(const TclModel& model, std::span<const Operator> generation)
{
    if (generation.empty()) throw std::invalid_argument("extend_observables: empty generation");
    ExtensionStep step;
    Generation& g = step.current;
    g.operators.assign(generation.begin(), generation.end());

    const RealMatrix arrays = stack_arrays(model, generation);
    const RealVector sv = singular_values(arrays);
    const double cutoff = rank_cutoff(model, generation, sv.size() ? sv(0) : 0.0);
    g.rank = count_above(sv, cutoff);
    g.cumulative_rank = g.rank;
    g.independent = independent_rows(arrays, cutoff);
    for (std::size_t i = 0; i < generation.size(); ++i) {
        if (std::find(g.independent.begin(), g.independent.end(), i) == g.independent.end()) g.dependent.push_back(i);
    }

    if (all_zero(generation)) {
        g.path = ExtensionPath::Exhausted;
        g.v = RealMatrix::Zero(static_cast<Eigen::Index>(g.dependent.size()), static_cast<Eigen::Index>(g.independent.size()));
        return step;
    }

    const Operator& h = model.hamiltonian();
    if (g.dependent.empty()) {
        g.path = ExtensionPath::Adjoin;
        g.v = RealMatrix(0, static_cast<Eigen::Index>(g.independent.size()));
        for (const auto& o : generation) step.next.push_back(adjoint_hamiltonian_apply(h, o));
        return step;
    }

    g.path = ExtensionPath::Dependency;
    const auto n_ind = static_cast<Eigen::Index>(g.independent.size());
    RealMatrix basis(arrays.cols(), n_ind); // columns = independent arrays
    for (Eigen::Index c = 0; c < n_ind; ++c) basis.col(c) = arrays.row(static_cast<Eigen::Index>(g.independent[c])).transpose();
    g.v.resize(static_cast<Eigen::Index>(g.dependent.size()), n_ind);

    Eigen::CompleteOrthogonalDecomposition<RealMatrix> decomposition;
    if (n_ind > 0) decomposition.compute(basis);
    for (std::size_t r = 0; r < g.dependent.size(); ++r) {
        const RealVector target = arrays.row(static_cast<Eigen::Index>(g.dependent[r])).transpose();
        RealVector coeff = n_ind > 0 ? RealVector(decomposition.solve(target)) : RealVector(0);
        const double residual = n_ind > 0 ? (basis * coeff - target).norm() : target.norm();
        if (residual > kDependencyResidual * std::max(1.0, target.norm())) {
            throw NumericalError("extend_observables: no exact dependency for observable " +
                                 std::to_string(g.dependent[r]) + " (residual " + std::to_string(residual) + ")");
        }
        g.v.row(static_cast<Eigen::Index>(r)) = coeff.transpose();
    }

    for (std::size_t r = 0; r < g.dependent.size(); ++r) {
        Operator next = adjoint_hamiltonian_apply(h, generation[g.dependent[r]]);
        for (std::size_t c = 0; c < g.independent.size(); ++c) {
            const double coeff = g.v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            if (coeff != 0.0) next -= coeff * adjoint_hamiltonian_apply(h, generation[g.independent[c]]);
        }
        step.next.push_back(std::move(next));
    }
    return step;
}

ExtensionCertificate relative_degree(const TclModel& model, std::span<const Operator> observables, int max_generations,
                                     std::vector<std::string> base_names)
{
    if (observables.empty()) throw std::invalid_argument("relative_degree: no observables");
    if (max_generations <= 0) max_generations = model.dim() * model.dim();
    const int n_rates = static_cast<int>(model.channel_count());

    ExtensionCertificate cert;
    if (base_names.empty()) {
        for (std::size_t i = 0; i < observables.size(); ++i) base_names.push_back("O" + std::to_string(i + 1));
    }
    if (base_names.size() != observables.size()) throw std::invalid_argument("relative_degree: name count mismatch");
    cert.base_names = std::move(base_names);

    std::vector<Operator> current(observables.begin(), observables.end());
    std::vector<Operator> all_ops;
    for (int g = 1; g <= max_generations; ++g) {
        ExtensionStep step = extend_observables(model, current);
        all_ops.insert(all_ops.end(), current.begin(), current.end());
        const RealMatrix arrays = stack_arrays(model, all_ops);
        const RealVector sv = singular_values(arrays);
        step.current.cumulative_rank = count_above(sv, rank_cutoff(model, all_ops, sv.size() ? sv(0) : 0.0));

        if (step.current.cumulative_rank >= n_rates) {
            step.current.path = ExtensionPath::Terminal;
            cert.generations.push_back(std::move(step.current));
            cert.alpha = g;
            return cert;
        }
        const bool exhausted = step.current.path == ExtensionPath::Exhausted;
        cert.generations.push_back(std::move(step.current));
        if (exhausted) break;
        current = std::move(step.next);
    }
    return cert;
}

ExtendedSystem extended_w_b(const TclModel& model, const ExtensionCertificate& certificate, const TraceSet& traces,
                            std::size_t k, std::span<const Operator> states, std::span<const double> rate_hint)
{
    const auto& gens = certificate.generations;
    if (gens.empty()) throw std::invalid_argument("extended_w_b: certificate has no generations");
    if (states.empty()) throw std::invalid_argument("extended_w_b: states[0] (rho at step k) is required");
    const std::size_t n_gen = gens.size();
    if (k + n_gen >= traces.sample_count()) {
        throw std::out_of_range("extended_w_b: need samples up to index " + std::to_string(k + n_gen) + " for order-" +
                                std::to_string(n_gen) + " differences, traces have " +
                                std::to_string(traces.sample_count()));
    }
    bool adjoin = false;
    for (std::size_t g = 0; g + 1 < n_gen; ++g) adjoin = adjoin || gens[g].path == ExtensionPath::Adjoin;
    if (adjoin && (states.size() < n_gen || rate_hint.size() != model.channel_count())) {
        throw std::invalid_argument("extended_w_b: adjoin generations need states for " + std::to_string(n_gen) +
                                    " offsets and a rate hint with one entry per channel");
    }
    for (const auto& name : certificate.base_names) {
        if (!traces.index_of(name)) throw std::invalid_argument("extended_w_b: no trace for '" + name + "'");
    }

    const double dt = traces.dt;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> memo;
    std::function<double(std::size_t, std::size_t, std::size_t)> value;
    const auto diff = [&](std::size_t g, std::size_t r, std::size_t j) {
        return (value(g, r, j + 1) - value(g, r, j)) / dt;
    };
    value = [&](std::size_t g, std::size_t r, std::size_t j) -> double {
        if (g == 0) return traces.value(certificate.base_names[r], j);
        const auto key = std::make_tuple(g, r, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        const Generation& prev = gens[g - 1];
        double v = 0.0;
        if (prev.path == ExtensionPath::Dependency) {
            v = diff(g - 1, prev.dependent[r], j);
            for (std::size_t c = 0; c < prev.independent.size(); ++c) {
                v -= prev.v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) *
                     diff(g - 1, prev.independent[c], j);
            }
        } else {
            const RealVector row = w_row(heisenberg_images(model, prev.operators[r]), states[j - k]);
            v = diff(g - 1, r, j) - row.dot(Eigen::Map<const RealVector>(rate_hint.data(),
                                                                        static_cast<Eigen::Index>(rate_hint.size())));
        }
        memo.emplace(key, v);
        return v;
    };

    std::vector<RealVector> w_rows;
    std::vector<double> b_rows;
    ExtendedSystem out;
    for (std::size_t g = 0; g < n_gen; ++g) {
        for (std::size_t r = 0; r < gens[g].operators.size(); ++r) {
            const Operator& op = gens[g].operators[r];
            if (op.max_abs() <= kZeroOperator) continue;
            const HeisenbergImages images = heisenberg_images(model, op);
            w_rows.push_back(w_row(images, states[0]));
            b_rows.push_back(diff(g, r, k) - drift_expectation(images, states[0]));
            out.row_generation.push_back(static_cast<int>(g + 1));
        }
    }
    out.w.resize(static_cast<Eigen::Index>(w_rows.size()), static_cast<Eigen::Index>(model.channel_count()));
    out.b.resize(static_cast<Eigen::Index>(b_rows.size()));
    for (std::size_t i = 0; i < w_rows.size(); ++i) {
        out.w.row(static_cast<Eigen::Index>(i)) = w_rows[i].transpose();
        out.b(static_cast<Eigen::Index>(i)) = b_rows[i];
    }
    return out;
}

} // namespace tclid
