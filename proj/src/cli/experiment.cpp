#include "tclid/cli/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tclid::cli {

using nlohmann::json;

namespace {

void check_number(const json& doc, const char* key, double lo, bool lo_open, std::vector<std::string>& issues,
                  double& out)
{
    if (!doc.contains(key)) return;
    const json& v = doc.at(key);
    if (!v.is_number()) {
        issues.push_back(std::string(key) + ": expected a number");
        return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || (lo_open ? !(x > lo) : !(x >= lo))) {
        issues.push_back(std::string(key) + ": must be " + (lo_open ? "> " : ">= ") + std::to_string(lo));
        return;
    }
    out = x;
}

} // namespace

ExperimentConfig parse_experiment(const json& doc)
{
    if (!doc.is_object()) throw ConfigError({"<root>: expected an object"});

    std::vector<std::string> issues;
    std::optional<ModelConfig> model;
    try {
        model = parse_model(doc);
    } catch (const ConfigError& e) {
        issues = e.issues();
    }

    double big_t = 10.0;
    int k_steps = 10000;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    IdentifyOptions opts;

    check_number(doc, "T", 0.0, true, issues, big_t);
    if (doc.contains("K")) {
        const json& k = doc.at("K");
        if (!k.is_number_integer() || k.get<long long>() < 1 || k.get<long long>() > 100'000'000) {
            issues.push_back("K: expected an integer in [1, 1e8]");
        } else {
            k_steps = static_cast<int>(k.get<long long>());
        }
    }
    check_number(doc, "noise_std", 0.0, false, issues, noise_std);
    if (doc.contains("seed")) {
        const json& s = doc.at("seed");
        if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<long long>() < 0)) {
            issues.push_back("seed: expected a non-negative integer");
        } else {
            seed = s.get<std::uint64_t>();
        }
    }
    if (doc.contains("identify")) {
        const json& id = doc.at("identify");
        if (!id.is_object()) {
            issues.push_back("identify: expected an object");
        } else {
            std::vector<std::string> sub;
            check_number(id, "sigma_threshold", 0.0, true, sub, opts.sigma_threshold);
            if (id.contains("substitution")) {
                if (!id.at("substitution").is_boolean()) {
                    sub.push_back("substitution: expected true or false");
                } else {
                    opts.substitution = id.at("substitution").get<bool>();
                }
            }
            if (id.contains("smoothing_window")) {
                const json& w = id.at("smoothing_window");
                if (!w.is_number_integer() || w.get<long long>() < 0) {
                    sub.push_back("smoothing_window: expected a non-negative integer");
                } else {
                    opts.smoothing_window = static_cast<int>(w.get<long long>());
                }
            }
            for (auto& s : sub) issues.push_back("identify." + s);
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));

    return ExperimentConfig{std::move(*model), big_t, k_steps, noise_std, seed, opts, doc.dump()};
}

ExperimentConfig load_experiment(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError({"config: cannot open " + path.string()});
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({"config: " + std::string(e.what())});
    }
    return parse_experiment(doc);
}

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    return out;
}

json make_manifest(const ExperimentConfig& cfg, const std::string& command)
{
    const auto& m = cfg.model;
    json rates = json::array();
    for (const auto& r : m.rates) rates.push_back(rate_to_json(r));
    return json{
        {"tool", "tclid"},
        {"version", kToolVersion},
        {"command", command},
        {"config_hash", fnv1a_hex(cfg.canonical)},
        {"seed", cfg.seed},
        {"dt", cfg.dt()},
        {"K", cfg.k_steps},
        {"T", cfg.big_t},
        {"noise_std", cfg.noise_std},
        {"model",
         {{"preset", m.preset ? json(*m.preset) : json(nullptr)},
          {"dim", m.model.dim()},
          {"channels", m.model.labels()},
          {"rates", rates}}},
        {"observables", {{"pool", m.pool.names()}, {"active", m.pool.active()}}},
        {"identify",
         {{"sigma_threshold", cfg.identify.sigma_threshold},
          {"substitution", cfg.identify.substitution},
          {"smoothing_window", cfg.identify.smoothing_window},
          {"rank_floor", cfg.identify.rank_floor}}},
    };
}

const std::vector<ReproduceScenario>& reproduce_scenarios()
{
    static const std::vector<ReproduceScenario> scenarios{
        {"atom-z", "atom", {"sigma_z"}, 10000, true, 1e-3},
        {"atom-x", "atom", {"sigma_x"}, 10000, false, 1e-3},
        {"atom-x-substitute", "atom", {"sigma_x"}, 10000, true, 0.3},
        {"chain-z", "spin_chain", {"sigma_z1", "sigma_z2", "sigma_z3"}, 30000, true, 1e-3},
        {"chain-x-substitute", "spin_chain", {"sigma_x1", "sigma_x2", "sigma_x3"}, 30000, true, 0.3},
    };
    return scenarios;
}

const ReproduceScenario& find_scenario(const std::string& name)
{
    for (const auto& s : reproduce_scenarios()) {
        if (s.name == name) return s;
    }
    throw std::out_of_range("unknown example '" + name + "'");
}

json scenario_document(const ReproduceScenario& s)
{
    return json{
        {"model", {{"preset", s.preset}}},
        {"observables", {{"active", s.active}}},
        {"T", 10.0},
        {"K", s.k_steps},
        {"noise_std", 0.0},
        {"seed", 0},
        {"identify", {{"sigma_threshold", s.sigma_threshold}, {"substitution", s.substitution}}},
    };
}

ErrorSummary summarize(const ExperimentConfig& cfg, const TraceSet& traces, const IdentificationResult& result)
{
    const auto& rates = cfg.model.rates;
    const auto n_ch = static_cast<std::size_t>(result.gammas.rows());
    const auto k_count = static_cast<std::size_t>(result.gammas.cols());

    ErrorSummary out;
    out.max_error.assign(n_ch, 0.0);
    out.max_error_time.assign(n_ch, 0.0);
    std::vector<double> peak(n_ch, 0.0);
    for (std::size_t k = 0; k < k_count; ++k) {
        const double t = static_cast<double>(k) * result.dt;
        for (std::size_t n = 0; n < n_ch; ++n) {
            const double truth = eval_rate(rates[n], t);
            peak[n] = std::max(peak[n], std::abs(truth));
            if (t < kInteriorStart) continue;
            const double err = std::abs(result.gammas(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) - truth);
            if (!(err <= out.max_error[n])) {
                out.max_error[n] = err;
                out.max_error_time[n] = t;
            }
        }
    }

    const auto& pool = cfg.model.pool;
    for (std::size_t k = 0; k < result.states.size(); ++k) {
        for (const auto& ob : pool.observables()) {
            const double dev = std::abs(expectation(ob.op, result.states[k]).real() - traces.value(ob.name, k));
            if (!(dev <= out.max_trace_deviation)) out.max_trace_deviation = dev;
        }
    }

    double sigma_peak = 0.0;
    std::optional<std::size_t> open;
    for (std::size_t k = 0; k < k_count; ++k) {
        sigma_peak = std::max(sigma_peak, result.diagnostics[k].sigma_min);
        bool flagged = result.diagnostics[k].sigma_min < 1e-3 * sigma_peak;
        for (std::size_t n = 0; n < n_ch && !flagged; ++n) {
            const double g = std::abs(result.gammas(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)));
            flagged = !(g <= 10.0 * peak[n]);
        }
        if (flagged && !open) open = k;
        if (!flagged && open) {
            out.divergence_intervals.emplace_back(*open, k - 1);
            open.reset();
        }
    }
    if (open) out.divergence_intervals.emplace_back(*open, k_count - 1);
    return out;
}

} // namespace tclid::cli
