#include "tclid/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tclid {

TclModel::TclModel(Operator hamiltonian, std::vector<Operator> channels, std::vector<std::string> labels)
    : hamiltonian_(std::move(hamiltonian)), channels_(std::move(channels)), labels_(std::move(labels))
{
    if (hamiltonian_.dim() < 1) throw DimensionError("TclModel: empty Hamiltonian");
    if (hamiltonian_.dim() > kMaxDim) {
        throw DimensionError("TclModel: dimension " + std::to_string(hamiltonian_.dim()) + " exceeds cap " +
                             std::to_string(kMaxDim));
    }
    if (!hamiltonian_.is_hermitian(1e-10)) {
        throw std::invalid_argument("TclModel: Hamiltonian is not Hermitian (defect " +
                                    std::to_string(hamiltonian_.hermiticity_defect()) + ")");
    }
    if (channels_.empty()) throw std::invalid_argument("TclModel: at least one channel is required");
    for (std::size_t n = 0; n < channels_.size(); ++n) {
        if (channels_[n].dim() != hamiltonian_.dim()) {
            throw DimensionError("TclModel: channel " + std::to_string(n) + " has dim " +
                                 std::to_string(channels_[n].dim()) + ", Hamiltonian has " +
                                 std::to_string(hamiltonian_.dim()));
        }
    }
    if (labels_.empty()) {
        for (std::size_t n = 0; n < channels_.size(); ++n) labels_.push_back("gamma" + std::to_string(n + 1));
    }
    if (labels_.size() != channels_.size()) {
        throw std::invalid_argument("TclModel: label count does not match channel count");
    }
}

Superoperator liouvillian_matrix(const TclModel& model, std::span<const double> gamma)
{
    return liouvillian_matrix(model.hamiltonian(), model.channels(), gamma);
}

// ------------------------------ Rate functions -----------------------------

namespace {

double eval(const HyperbolicRate& r, double t)
{
    const double s = std::sinh(0.5 * r.d * t);
    const double c = std::cosh(0.5 * r.d * t);
    if (!std::isfinite(s)) {
        // sinh/cosh overflow: use the saturated value.
        return 2.0 * r.gamma0 * r.lambda / (r.d + r.lambda);
    }
    return 2.0 * r.gamma0 * r.lambda * s / (r.d * c + r.lambda * s);
}

double eval(const OscillatoryRate& r, double t)
{
    const double l = r.lambda;
    const double d = r.d;
    const double l2d2 = l * l + d * d;
    const double q = d / l;
    const double q2 = q * q;
    const double decay = std::exp(-l * t);

    const double first = r.gamma0 * l * l / l2d2 * (1.0 - decay * (std::cos(d * t) - q * std::sin(d * t)));

    // e^{-lt} * (e^{lt} - e^{lt} cos 2dt) == 1 - cos 2dt; written out to avoid overflow.
    const double bracket = (1.0 - 3.0 * q2) * (1.0 - std::cos(2.0 * d * t)) +
                           decay * (-2.0 * (1.0 - q2 * q2) * l * t * std::cos(d * t) +
                                    4.0 * (1.0 + q2) * d * t * std::sin(d * t) +
                                    q * (3.0 - q2) * decay * std::sin(2.0 * d * t));
    const double second = r.gamma0 * r.gamma0 * std::pow(l, 5) / (2.0 * std::pow(l2d2, 3)) * bracket;
    return first + second;
}

double eval(const PiecewiseConstantRate& r, double t)
{
    // Boundaries at k dt are assigned to the interval that starts there,
    // with a small relative slack for t computed as k * dt.
    const double pos = t / r.dt;
    auto k = static_cast<std::size_t>(std::max(0.0, std::floor(pos + 1e-9 * std::max(1.0, pos))));
    k = std::min(k, r.values.size() - 1);
    return r.values[k];
}

double eval(const TabulatedRate& r, double t)
{
    if (t <= r.times.front()) return r.values.front();
    if (t >= r.times.back()) return r.values.back();
    const auto it = std::upper_bound(r.times.begin(), r.times.end(), t);
    const auto hi = static_cast<std::size_t>(it - r.times.begin());
    const auto lo = hi - 1;
    const double w = (t - r.times[lo]) / (r.times[hi] - r.times[lo]);
    return (1.0 - w) * r.values[lo] + w * r.values[hi];
}

} // namespace

void validate_rate(const RateFunction& f)
{
    std::visit(
        [](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, HyperbolicRate> || std::is_same_v<T, OscillatoryRate>) {
                if (!std::isfinite(r.gamma0) || !std::isfinite(r.lambda) || !std::isfinite(r.d)) {
                    throw std::invalid_argument("rate parameters must be finite");
                }
                if constexpr (std::is_same_v<T, OscillatoryRate>) {
                    if (r.lambda == 0.0) throw std::invalid_argument("oscillatory rate needs lambda != 0");
                } else {
                    if (r.d == 0.0 && r.lambda == 0.0) throw std::invalid_argument("hyperbolic rate needs d or lambda != 0");
                }
            } else if constexpr (std::is_same_v<T, PiecewiseConstantRate>) {
                if (r.values.empty()) throw std::invalid_argument("piecewise-constant rate needs at least one value");
                if (!(r.dt > 0.0)) throw std::invalid_argument("piecewise-constant rate needs dt > 0");
            } else {
                if (r.times.empty()) throw std::invalid_argument("tabulated rate needs at least one sample");
                if (r.times.size() != r.values.size()) {
                    throw std::invalid_argument("tabulated rate: times and values differ in length");
                }
                for (std::size_t i = 1; i < r.times.size(); ++i) {
                    if (!(r.times[i] > r.times[i - 1])) {
                        throw std::invalid_argument("tabulated rate: times must be strictly increasing");
                    }
                }
            }
        },
        f);
}

double eval_rate(const RateFunction& f, double t)
{
    if (t < 0.0 || std::isnan(t)) throw std::domain_error("eval_rate: t must be >= 0");
    return std::visit([t](const auto& r) { return eval(r, t); }, f);
}

std::vector<double> eval_rates(std::span<const RateFunction> rates, double t)
{
    std::vector<double> out;
    out.reserve(rates.size());
    for (const auto& f : rates) out.push_back(eval_rate(f, t));
    return out;
}

std::string rate_kind(const RateFunction& f)
{
    switch (f.index()) {
    case 0: return "hyperbolic";
    case 1: return "oscillatory";
    case 2: return "piecewise_constant";
    default: return "tabulated";
    }
}

// ----------------------------- Observable pool -----------------------------

ObservablePool::ObservablePool(std::vector<NamedObservable> observables, std::vector<std::string> active)
    : observables_(std::move(observables)), active_(std::move(active))
{
    if (observables_.empty()) throw std::invalid_argument("ObservablePool: pool is empty");
    const int dim = observables_.front().op.dim();
    for (std::size_t i = 0; i < observables_.size(); ++i) {
        const auto& o = observables_[i];
        if (o.name.empty()) throw std::invalid_argument("ObservablePool: observable with empty name");
        for (std::size_t j = 0; j < i; ++j) {
            if (observables_[j].name == o.name) {
                throw std::invalid_argument("ObservablePool: duplicate name '" + o.name + "'");
            }
        }
        if (o.op.dim() != dim) throw DimensionError("ObservablePool: '" + o.name + "' has mismatched dimension");
        if (!o.op.is_hermitian(1e-10)) throw std::invalid_argument("ObservablePool: '" + o.name + "' is not Hermitian");
    }
    for (const auto& a : active_) {
        if (!index_of(a)) throw std::invalid_argument("ObservablePool: active observable '" + a + "' not in pool");
    }
}

std::optional<std::size_t> ObservablePool::index_of(const std::string& name) const
{
    for (std::size_t i = 0; i < observables_.size(); ++i) {
        if (observables_[i].name == name) return i;
    }
    return std::nullopt;
}

const Operator& ObservablePool::get(const std::string& name) const
{
    const auto idx = index_of(name);
    if (!idx) throw std::out_of_range("ObservablePool: no observable named '" + name + "'");
    return observables_[*idx].op;
}

std::vector<std::string> ObservablePool::names() const
{
    std::vector<std::string> out;
    out.reserve(observables_.size());
    for (const auto& o : observables_) out.push_back(o.name);
    return out;
}

std::vector<Operator> ObservablePool::operators(std::span<const std::string> names) const
{
    std::vector<Operator> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(get(n));
    return out;
}

ObservablePool ObservablePool::with_active(std::vector<std::string> active) const
{
    return ObservablePool(observables_, std::move(active));
}

// ---------------------------- Built-in systems -----------------------------

Operator tilted_qubit_state()
{
    const double c = 1.0 / std::sqrt(3.0);
    Operator rho = Operator::identity(2);
    rho += c * pauli(PauliAxis::X);
    rho += c * pauli(PauliAxis::Y);
    rho += c * pauli(PauliAxis::Z);
    return 0.5 * rho;
}

std::vector<NamedObservable> pauli_observables(int n_sites)
{
    std::vector<NamedObservable> out;
    for (int s = 0; s < n_sites; ++s) {
        for (auto axis : {PauliAxis::X, PauliAxis::Y, PauliAxis::Z}) {
            std::string name = "sigma_" + to_string(axis);
            if (n_sites > 1) name += std::to_string(s + 1);
            out.push_back({std::move(name), site_pauli(axis, s, n_sites)});
        }
    }
    return out;
}

ExampleSystem build_atom_example()
{
    constexpr double omega_q = 1.0;
    TclModel model(0.5 * omega_q * pauli(PauliAxis::Z), {pauli(PauliAxis::Minus)}, {"gamma_a"});
    std::vector<RateFunction> rates{HyperbolicRate{0.5, 0.1, 0.6}};
    ObservablePool pool(pauli_observables(1), {"sigma_z"});
    return {std::move(model), std::move(rates), tilted_qubit_state(), std::move(pool)};
}

ExampleSystem build_spin_chain_example()
{
    constexpr int n = 3;
    constexpr double omega[n] = {1.0, 1.5, 1.4};
    constexpr double g1 = 1.0;
    constexpr double g2 = 4.0;

    auto sp = [](PauliAxis a, int site) { return site_pauli(a, site, n); };
    using enum PauliAxis;

    Operator h = Operator::zero(8);
    for (int i = 0; i < n; ++i) h += 0.5 * omega[i] * sp(Z, i);
    h += 0.5 * g1 * (sp(X, 0) * sp(X, 1) + sp(Y, 0) * sp(Y, 1));
    h += 0.5 * g2 * (sp(X, 1) * sp(X, 2) + sp(Y, 1) * sp(Y, 2));

    std::vector<Operator> channels;
    for (int i = 0; i < n; ++i) channels.push_back(sp(Minus, i));

    TclModel model(std::move(h), std::move(channels), {"gamma1", "gamma2", "gamma3"});
    std::vector<RateFunction> rates{HyperbolicRate{0.5, 0.1, 0.6}, OscillatoryRate{0.3, 1.0, 2.4},
                                    HyperbolicRate{0.5, 0.5, 0.5}};

    const Operator q = tilted_qubit_state();
    Operator rho0 = kron(kron(q, q), q);

    ObservablePool pool(pauli_observables(n), {"sigma_z1", "sigma_z2", "sigma_z3"});
    return {std::move(model), std::move(rates), std::move(rho0), std::move(pool)};
}

} // namespace tclid
