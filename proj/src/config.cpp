#include "tclid/config.hpp"

#include <cmath>

namespace tclid {

using nlohmann::json;

namespace {

std::string join_issues(const std::vector<std::string>& issues)
{
    std::string out = "invalid configuration";
    for (const auto& i : issues) out += "\n  " + i;
    return out;
}

struct Issues {
    std::vector<std::string> list;
    void add(const std::string& path, const std::string& msg) { list.push_back(path + ": " + msg); }
    bool empty() const { return list.empty(); }
};

std::optional<double> get_number(const json& obj, const std::string& key, const std::string& path, Issues& issues)
{
    if (!obj.contains(key)) {
        issues.add(path + "." + key, "missing");
        return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        issues.add(path + "." + key, "expected a number");
        return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        issues.add(path + "." + key, "must be finite");
        return std::nullopt;
    }
    return x;
}

std::optional<std::vector<double>> get_numbers(const json& obj, const std::string& key, const std::string& path,
                                               Issues& issues)
{
    if (!obj.contains(key)) {
        issues.add(path + "." + key, "missing");
        return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_array()) {
        issues.add(path + "." + key, "expected an array of numbers");
        return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
            issues.add(path + "." + key + "[" + std::to_string(i) + "]", "expected a finite number");
            return std::nullopt;
        }
        out.push_back(v[i].get<double>());
    }
    return out;
}

int qubit_count(int dim)
{
    int n = 0;
    while ((1 << n) < dim) ++n;
    return (1 << n) == dim ? n : -1;
}

std::optional<Operator> parse_operator(const json& j, int dim, const std::string& path, Issues& issues)
{
    if (!j.is_object()) {
        issues.add(path, "expected an operator object");
        return std::nullopt;
    }
    if (j.contains("identity")) {
        if (dim < 1) {
            issues.add(path, "identity needs a known dimension");
            return std::nullopt;
        }
        return Operator::identity(dim);
    }
    if (j.contains("pauli")) {
        if (!j.at("pauli").is_string()) {
            issues.add(path + ".pauli", "expected one of x, y, z, +, -");
            return std::nullopt;
        }
        const int n_sites = qubit_count(dim);
        if (n_sites < 1) {
            issues.add(path, "Pauli operators need a qubit register (dim a power of two), dim is " +
                                 std::to_string(dim));
            return std::nullopt;
        }
        PauliAxis axis{};
        try {
            axis = parse_pauli_axis(j.at("pauli").get<std::string>());
        } catch (const std::exception& e) {
            issues.add(path + ".pauli", e.what());
            return std::nullopt;
        }
        int site = 0;
        if (j.contains("site")) {
            if (!j.at("site").is_number_integer()) {
                issues.add(path + ".site", "expected an integer");
                return std::nullopt;
            }
            site = j.at("site").get<int>();
        }
        if (site < 0 || site >= n_sites) {
            issues.add(path + ".site", "out of range [0, " + std::to_string(n_sites) + ")");
            return std::nullopt;
        }
        return site_pauli(axis, site, n_sites);
    }

    if (!j.contains("dim") || !j.at("dim").is_number_integer()) {
        issues.add(path + ".dim", "missing or not an integer");
        return std::nullopt;
    }
    const int d = j.at("dim").get<int>();
    if (d < 1 || d > kMaxDim) {
        issues.add(path + ".dim", "must be in [1, " + std::to_string(kMaxDim) + "]");
        return std::nullopt;
    }
    const std::size_t count = static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
    auto re = get_numbers(j, "re", path, issues);
    if (!re) return std::nullopt;
    std::vector<double> im(count, 0.0);
    if (j.contains("im")) {
        auto parsed = get_numbers(j, "im", path, issues);
        if (!parsed) return std::nullopt;
        im = std::move(*parsed);
    }
    if (re->size() != count || im.size() != count) {
        issues.add(path, "expected " + std::to_string(count) + " row-major entries for dim " + std::to_string(d));
        return std::nullopt;
    }
    Matrix m(d, d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            const auto idx = static_cast<std::size_t>(r) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c);
            m(r, c) = Complex((*re)[idx], im[idx]);
        }
    }
    return Operator(std::move(m));
}

std::optional<RateFunction> parse_rate(const json& j, const std::string& path, Issues& issues)
{
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
        issues.add(path + ".type", "missing rate type");
        return std::nullopt;
    }
    const auto type = j.at("type").get<std::string>();
    const std::size_t before = issues.list.size();
    std::optional<RateFunction> out;
    if (type == "hyperbolic" || type == "oscillatory") {
        auto g = get_number(j, "gamma0", path, issues);
        auto l = get_number(j, "lambda", path, issues);
        auto d = get_number(j, "d", path, issues);
        if (issues.list.size() != before) return std::nullopt;
        if (type == "hyperbolic") out = HyperbolicRate{*g, *l, *d};
        else out = OscillatoryRate{*g, *l, *d};
    } else if (type == "piecewise_constant") {
        auto dt = get_number(j, "dt", path, issues);
        auto values = get_numbers(j, "values", path, issues);
        if (issues.list.size() != before) return std::nullopt;
        out = PiecewiseConstantRate{std::move(*values), *dt};
    } else if (type == "tabulated") {
        auto times = get_numbers(j, "times", path, issues);
        auto values = get_numbers(j, "values", path, issues);
        if (issues.list.size() != before) return std::nullopt;
        out = TabulatedRate{std::move(*times), std::move(*values)};
    } else {
        issues.add(path + ".type", "unknown rate type '" + type + "'");
        return std::nullopt;
    }
    try {
        validate_rate(*out);
    } catch (const std::exception& e) {
        issues.add(path, e.what());
        return std::nullopt;
    }
    return out;
}

std::optional<std::vector<std::string>> parse_names(const json& j, const std::string& path, Issues& issues)
{
    if (!j.is_array()) {
        issues.add(path, "expected an array of names");
        return std::nullopt;
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) {
            issues.add(path + "[" + std::to_string(i) + "]", "expected a string");
            return std::nullopt;
        }
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues))
{
}

ModelConfig parse_model(const json& config)
{
    Issues issues;
    if (!config.is_object()) throw ConfigError({"<root>: expected a JSON object"});
    if (!config.contains("model") || !config.at("model").is_object()) {
        throw ConfigError({"model: missing section"});
    }
    const json& mj = config.at("model");

    std::optional<ExampleSystem> preset_system;
    std::optional<std::string> preset;
    if (mj.contains("preset")) {
        const auto& p = mj.at("preset");
        const std::string name = p.is_string() ? p.get<std::string>() : std::string{};
        if (name == "atom") preset_system = build_atom_example();
        else if (name == "spin_chain") preset_system = build_spin_chain_example();
        else throw ConfigError({"model.preset: unknown preset '" + name + "' (expected atom or spin_chain)"});
        preset = name;
    }

    // ---- Hamiltonian and channels
    std::optional<Operator> hamiltonian;
    std::vector<Operator> channels;
    std::vector<std::string> labels;
    int dim = preset_system ? preset_system->model.dim() : -1;

    if (mj.contains("dim")) {
        if (!mj.at("dim").is_number_integer() || mj.at("dim").get<int>() < 1 || mj.at("dim").get<int>() > kMaxDim) {
            issues.add("model.dim", "must be an integer in [1, " + std::to_string(kMaxDim) + "]");
        } else {
            dim = mj.at("dim").get<int>();
        }
    }

    if (mj.contains("hamiltonian")) {
        hamiltonian = parse_operator(mj.at("hamiltonian"), dim, "model.hamiltonian", issues);
        if (hamiltonian) {
            if (dim > 0 && hamiltonian->dim() != dim) {
                issues.add("model.hamiltonian", "dimension " + std::to_string(hamiltonian->dim()) +
                                                    " does not match model.dim " + std::to_string(dim));
            }
            dim = hamiltonian->dim();
            if (!hamiltonian->is_hermitian(1e-10)) {
                issues.add("model.hamiltonian", "not Hermitian (defect " +
                                                    std::to_string(hamiltonian->hermiticity_defect()) + ")");
            }
        }
    } else if (preset_system) {
        hamiltonian = preset_system->model.hamiltonian();
    } else {
        issues.add("model.hamiltonian", "missing (no preset given)");
    }

    if (mj.contains("channels")) {
        const auto& cj = mj.at("channels");
        if (!cj.is_array() || cj.empty()) {
            issues.add("model.channels", "expected a non-empty array");
        } else {
            for (std::size_t n = 0; n < cj.size(); ++n) {
                const std::string path = "model.channels[" + std::to_string(n) + "]";
                const auto& c = cj[n];
                if (!c.is_object() || !c.contains("operator")) {
                    issues.add(path + ".operator", "missing");
                    continue;
                }
                auto op = parse_operator(c.at("operator"), dim, path + ".operator", issues);
                if (!op) continue;
                if (hamiltonian && op->dim() != hamiltonian->dim()) {
                    issues.add(path + ".operator", "dimension " + std::to_string(op->dim()) +
                                                       " does not match model.hamiltonian dimension " +
                                                       std::to_string(hamiltonian->dim()));
                    continue;
                }
                channels.push_back(std::move(*op));
                labels.push_back(c.contains("label") && c.at("label").is_string() ? c.at("label").get<std::string>()
                                                                                  : "gamma" + std::to_string(n + 1));
            }
        }
    } else if (preset_system) {
        channels = preset_system->model.channels();
        labels = preset_system->model.labels();
    } else {
        issues.add("model.channels", "missing (no preset given)");
    }

    // ---- Rates
    std::vector<RateFunction> rates;
    if (config.contains("rates")) {
        const auto& rj = config.at("rates");
        if (!rj.is_array()) {
            issues.add("rates", "expected an array");
        } else {
            for (std::size_t n = 0; n < rj.size(); ++n) {
                if (auto r = parse_rate(rj[n], "rates[" + std::to_string(n) + "]", issues)) rates.push_back(*r);
            }
            if (!channels.empty() && rj.size() != channels.size()) {
                issues.add("rates", "has " + std::to_string(rj.size()) + " entries but the model has " +
                                        std::to_string(channels.size()) + " channels");
            }
        }
    } else if (preset_system) {
        rates = preset_system->rates;
    } else {
        issues.add("rates", "missing (no preset given)");
    }

    // ---- Initial state
    std::optional<Operator> rho0;
    if (config.contains("initial_state")) {
        rho0 = parse_operator(config.at("initial_state"), dim, "initial_state", issues);
        if (rho0) {
            if (hamiltonian && rho0->dim() != hamiltonian->dim()) {
                issues.add("initial_state", "dimension " + std::to_string(rho0->dim()) +
                                                " does not match model.hamiltonian dimension " +
                                                std::to_string(hamiltonian->dim()));
            } else if (std::abs(rho0->trace() - Complex(1.0)) > 1e-10) {
                issues.add("initial_state", "trace must be 1");
            } else if (!rho0->is_hermitian(1e-10)) {
                issues.add("initial_state", "not Hermitian");
            }
        }
    } else if (preset_system) {
        rho0 = preset_system->initial_state;
    } else {
        issues.add("initial_state", "missing (no preset given)");
    }

    // ---- Observables
    std::vector<NamedObservable> pool;
    std::vector<std::string> active;
    const json* oj = config.contains("observables") ? &config.at("observables") : nullptr;
    if (oj && !oj->is_object()) {
        issues.add("observables", "expected an object");
        oj = nullptr;
    }
    if (oj && oj->contains("pool")) {
        const auto& pj = oj->at("pool");
        if (!pj.is_array() || pj.empty()) {
            issues.add("observables.pool", "expected a non-empty array");
        } else {
            for (std::size_t i = 0; i < pj.size(); ++i) {
                const std::string path = "observables.pool[" + std::to_string(i) + "]";
                const auto& e = pj[i];
                if (!e.is_object() || !e.contains("name") || !e.at("name").is_string()) {
                    issues.add(path + ".name", "missing");
                    continue;
                }
                if (!e.contains("operator")) {
                    issues.add(path + ".operator", "missing");
                    continue;
                }
                auto op = parse_operator(e.at("operator"), dim, path + ".operator", issues);
                if (!op) continue;
                if (hamiltonian && op->dim() != hamiltonian->dim()) {
                    issues.add(path + ".operator", "dimension " + std::to_string(op->dim()) +
                                                       " does not match model.hamiltonian dimension " +
                                                       std::to_string(hamiltonian->dim()));
                    continue;
                }
                if (!op->is_hermitian(1e-10)) {
                    issues.add(path + ".operator", "observable is not Hermitian");
                    continue;
                }
                pool.push_back({e.at("name").get<std::string>(), std::move(*op)});
            }
        }
    } else if (preset_system) {
        pool = preset_system->pool.observables();
    } else if (dim > 0 && qubit_count(dim) >= 1) {
        pool = pauli_observables(qubit_count(dim));
    } else {
        issues.add("observables.pool", "missing (no preset given and dimension is not a qubit register)");
    }

    if (oj && oj->contains("active")) {
        if (auto names = parse_names(oj->at("active"), "observables.active", issues)) active = std::move(*names);
    } else if (preset_system) {
        active = preset_system->pool.active();
    } else {
        issues.add("observables.active", "missing (no preset given)");
    }
    for (std::size_t i = 0; i < active.size(); ++i) {
        bool found = false;
        for (const auto& p : pool) found = found || p.name == active[i];
        if (!found && !pool.empty()) {
            issues.add("observables.active[" + std::to_string(i) + "]", "'" + active[i] + "' is not in the pool");
        }
    }
    if (active.empty() && oj && oj->contains("active")) issues.add("observables.active", "must not be empty");

    if (!issues.empty()) throw ConfigError(std::move(issues.list));

    try {
        TclModel model(std::move(*hamiltonian), std::move(channels), std::move(labels));
        ObservablePool obs(std::move(pool), std::move(active));
        return ModelConfig{preset, std::move(model), std::move(rates), std::move(obs), std::move(*rho0)};
    } catch (const std::exception& e) {
        throw ConfigError({std::string("model: ") + e.what()});
    }
}

json operator_to_json(const Operator& op)
{
    const int d = op.dim();
    json re = json::array();
    json im = json::array();
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            re.push_back(op(r, c).real());
            im.push_back(op(r, c).imag());
        }
    }
    return json{{"dim", d}, {"re", std::move(re)}, {"im", std::move(im)}};
}

json rate_to_json(const RateFunction& f)
{
    return std::visit(
        [](const auto& r) -> json {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, HyperbolicRate>) {
                return {{"type", "hyperbolic"}, {"gamma0", r.gamma0}, {"lambda", r.lambda}, {"d", r.d}};
            } else if constexpr (std::is_same_v<T, OscillatoryRate>) {
                return {{"type", "oscillatory"}, {"gamma0", r.gamma0}, {"lambda", r.lambda}, {"d", r.d}};
            } else if constexpr (std::is_same_v<T, PiecewiseConstantRate>) {
                return {{"type", "piecewise_constant"}, {"dt", r.dt}, {"values", r.values}};
            } else {
                return {{"type", "tabulated"}, {"times", r.times}, {"values", r.values}};
            }
        },
        f);
}

RateFunction rate_from_json(const json& j, const std::string& path)
{
    Issues issues;
    auto r = parse_rate(j, path, issues);
    if (!r) throw ConfigError(std::move(issues.list));
    return *r;
}

Operator operator_from_json(const json& j, int dim, const std::string& path)
{
    Issues issues;
    auto op = parse_operator(j, dim, path, issues);
    if (!op) throw ConfigError(std::move(issues.list));
    return *op;
}

} // namespace tclid
