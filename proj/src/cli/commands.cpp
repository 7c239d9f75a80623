#include "tclid/cli/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace tclid::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_k(std::size_t k) { return std::to_string(k); }

std::string join(const std::vector<std::string>& names, char sep)
{
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += sep;
        out += names[i];
    }
    return out;
}

double time_of(std::size_t k, double dt) { return static_cast<double>(k) * dt; }

struct OutputFile {
    std::string name;
    std::string contents;
};

void write_outputs(const fs::path& dir, const std::vector<OutputFile>& files)
{
    fs::create_directories(dir);
    for (const auto& f : files) write_file_atomic(dir / f.name, f.contents);
}

/// Logs to stderr; TCLID_LOG selects the level (default info).
void configure_logging()
{
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_color_mt("tclid");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
        spdlog::set_level(spdlog::level::info);
        if (const char* env = std::getenv("TCLID_LOG")) {
            const auto level = spdlog::level::from_str(env);
            // from_str maps unknown names to off; only honour recognised ones.
            if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
        }
    });
}

/// Runs `body`, mapping the library's exceptions onto exit codes.
template <class F>
int guarded(const std::string& what, F&& body)
{
    configure_logging();
    try {
        return body();
    } catch (const ConfigError& e) {
        spdlog::error("{}: configuration error:{}", what, e.what());
        return kExitConfig;
    } catch (const RankDeficiencyError& e) {
        spdlog::error("{}: {}", what, e.what());
        return kExitRankDeficiency;
    } catch (const NumericalError& e) {
        spdlog::error("{}: numerical failure: {}", what, e.what());
        return kExitNumerical;
    } catch (const fs::filesystem_error& e) {
        spdlog::error("{}: {}", what, e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        spdlog::error("{}: {}", what, e.what());
        return kExitNumerical;
    }
}

std::vector<std::string> missing_traces(const TraceSet& traces, const std::vector<std::string>& needed)
{
    std::vector<std::string> missing;
    for (const auto& n : needed) {
        if (!traces.index_of(n)) missing.push_back(n);
    }
    return missing;
}

json substitution_events(const IdentificationResult& result)
{
    json events = json::array();
    for (const auto& d : result.diagnostics) {
        if (!d.substituted) continue;
        const auto& now = d.active_names;
        const std::vector<std::string>& before =
            d.k > 0 ? result.diagnostics[d.k - 1].active_names : now;
        std::string removed, added;
        for (const auto& n : before) {
            if (std::find(now.begin(), now.end(), n) == now.end()) removed = n;
        }
        for (const auto& n : now) {
            if (std::find(before.begin(), before.end(), n) == before.end()) added = n;
        }
        events.push_back({{"k", d.k},
                          {"t", time_of(d.k, result.dt)},
                          {"removed", removed},
                          {"added", added},
                          {"sigma_min_before", d.sigma_min_before},
                          {"sigma_min_after", d.sigma_min},
                          {"warning", d.repair_warning}});
    }
    return events;
}

IdentificationResult run_identify(const ExperimentConfig& cfg, const TraceSet& traces)
{
    const auto& m = cfg.model;
    const auto needed = cfg.identify.substitution ? m.pool.names() : m.pool.active();
    if (auto missing = missing_traces(traces, needed); !missing.empty()) {
        std::vector<std::string> issues;
        for (const auto& n : missing) issues.push_back("traces: no column for observable '" + n + "'");
        throw ConfigError(std::move(issues));
    }
    return identify(m.model, traces, m.pool, m.initial_state, cfg.identify);
}

std::vector<OutputFile> identify_outputs(const ExperimentConfig& cfg, const IdentificationResult& result,
                                         const std::string& command)
{
    const auto& m = cfg.model;
    return {{"gammas.csv", gammas_table(result, m.model.labels()).str()},
            {"states.csv", states_table(result, m.pool).str()},
            {"manifest.json", make_manifest(cfg, command).dump(2) + "\n"}};
}

json analyze_json(const ExperimentConfig& cfg)
{
    const auto& m = cfg.model;
    const auto ops = m.pool.active_operators();
    const auto cert = relative_degree(m.model, ops, 0, m.pool.active());
    const auto rank = operator_rank(m.model, ops);
    return certificate_json(cert, rank);
}

int reproduce_one(const ReproduceScenario& s, const fs::path& dir)
{
    return guarded(s.name, [&] {
        using clock = std::chrono::steady_clock;
        const ExperimentConfig cfg = parse_experiment(scenario_document(s));
        const auto& m = cfg.model;
        spdlog::info("{}: simulating K={} (d={})", s.name, cfg.k_steps, m.model.dim());

        const auto t0 = clock::now();
        const auto traj = simulate(m.model, m.rates, m.initial_state, cfg.big_t, cfg.k_steps);
        const auto traces = measure_traces(traj, m.pool, cfg.noise_std, cfg.seed);
        const auto t1 = clock::now();
        spdlog::info("{}: identifying with {{{}}}", s.name, join(m.pool.active(), ','));
        const auto result = run_identify(cfg, traces);
        const auto t2 = clock::now();

        const auto summary = summarize(cfg, traces, result);
        json intervals = json::array();
        for (const auto& [a, b] : summary.divergence_intervals) {
            intervals.push_back({{"k_begin", a}, {"k_end", b}, {"t_begin", time_of(a, cfg.dt())},
                                 {"t_end", time_of(b, cfg.dt())}});
        }
        double sigma_lo = INFINITY, sigma_hi = 0.0;
        for (const auto& d : result.diagnostics) {
            sigma_lo = std::min(sigma_lo, d.sigma_min);
            sigma_hi = std::max(sigma_hi, d.sigma_min);
        }
        const json summary_doc{
            {"example", s.name},
            {"K", cfg.k_steps},
            {"T", cfg.big_t},
            {"dt", cfg.dt()},
            {"channels", m.model.labels()},
            {"interior_start", kInteriorStart},
            {"max_interior_error", summary.max_error},
            {"max_interior_error_time", summary.max_error_time},
            {"max_error", *std::max_element(summary.max_error.begin(), summary.max_error.end())},
            {"max_trace_deviation", summary.max_trace_deviation},
            {"substitution_count", result.substitution_count},
            {"substitutions", substitution_events(result)},
            {"sigma_min_range", {sigma_lo, sigma_hi}},
            {"divergence_intervals", intervals},
            {"runtime_seconds",
             {{"simulate", std::chrono::duration<double>(t1 - t0).count()},
              {"identify", std::chrono::duration<double>(t2 - t1).count()}}},
        };

        auto files = identify_outputs(cfg, result, "reproduce " + s.name);
        files.push_back({"traces.csv", traces_table(traces).str()});
        files.push_back({"rates.csv", rates_table(result, m.rates, m.model.labels()).str()});
        files.push_back({"w_diagnostics.csv", w_diagnostics_table(result, m.model.channel_count()).str()});
        files.push_back({"identifiability.json", analyze_json(cfg).dump(2) + "\n"});
        files.push_back({"summary.json", summary_doc.dump(2) + "\n"});
        write_outputs(dir, files);
        spdlog::info("{}: max interior error {:.3e}, {} substitution(s)", s.name,
                     summary_doc.at("max_error").get<double>(), result.substitution_count);
        return static_cast<int>(kExitOk);
    });
}

} // namespace

CsvTable traces_table(const TraceSet& traces)
{
    std::vector<std::string> header{"k", "t"};
    header.insert(header.end(), traces.names.begin(), traces.names.end());
    CsvTable table(std::move(header));
    for (std::size_t k = 0; k < traces.sample_count(); ++k) {
        std::vector<std::string> row{fmt_k(k), format_double(time_of(k, traces.dt))};
        for (Eigen::Index m = 0; m < traces.samples.rows(); ++m) {
            row.push_back(format_double(traces.samples(m, static_cast<Eigen::Index>(k))));
        }
        table.add_row(std::move(row));
    }
    return table;
}

CsvTable gammas_table(const IdentificationResult& result, const std::vector<std::string>& labels)
{
    std::vector<std::string> header{"k", "t"};
    header.insert(header.end(), labels.begin(), labels.end());
    for (const char* c : {"sigma_min", "cond", "substituted", "active_names"}) header.emplace_back(c);
    CsvTable table(std::move(header));
    for (std::size_t k = 0; k < result.diagnostics.size(); ++k) {
        const auto& d = result.diagnostics[k];
        std::vector<std::string> row{fmt_k(k), format_double(time_of(k, result.dt))};
        for (Eigen::Index n = 0; n < result.gammas.rows(); ++n) {
            row.push_back(format_double(result.gammas(n, static_cast<Eigen::Index>(k))));
        }
        row.push_back(format_double(d.sigma_min));
        row.push_back(format_double(d.cond));
        row.emplace_back(d.substituted ? "true" : "false");
        row.push_back(join(d.active_names, ';'));
        table.add_row(std::move(row));
    }
    return table;
}

CsvTable states_table(const IdentificationResult& result, const ObservablePool& pool)
{
    std::vector<std::string> header{"k", "t"};
    for (const auto& ob : pool.observables()) header.push_back(ob.name);
    CsvTable table(std::move(header));
    for (std::size_t k = 0; k < result.states.size(); ++k) {
        std::vector<std::string> row{fmt_k(k), format_double(time_of(k, result.dt))};
        for (const auto& ob : pool.observables()) {
            row.push_back(format_double(expectation(ob.op, result.states[k]).real()));
        }
        table.add_row(std::move(row));
    }
    return table;
}

CsvTable rates_table(const IdentificationResult& result, const std::vector<RateFunction>& rates,
                     const std::vector<std::string>& labels)
{
    std::vector<std::string> header{"k", "t"};
    for (const auto& l : labels) {
        header.push_back("true_" + l);
        header.push_back("identified_" + l);
    }
    CsvTable table(std::move(header));
    for (Eigen::Index k = 0; k < result.gammas.cols(); ++k) {
        const double t = time_of(static_cast<std::size_t>(k), result.dt);
        std::vector<std::string> row{fmt_k(static_cast<std::size_t>(k)), format_double(t)};
        for (std::size_t n = 0; n < labels.size(); ++n) {
            row.push_back(format_double(eval_rate(rates[n], t)));
            row.push_back(format_double(result.gammas(static_cast<Eigen::Index>(n), k)));
        }
        table.add_row(std::move(row));
    }
    return table;
}

CsvTable w_diagnostics_table(const IdentificationResult& result, std::size_t channel_count)
{
    std::vector<std::string> header{"k", "t", "det", "sigma_min", "sigma_max", "cond"};
    for (std::size_t i = 1; i <= channel_count; ++i) header.push_back("sv" + std::to_string(i));
    header.emplace_back("active_names");
    CsvTable table(std::move(header));
    for (const auto& d : result.diagnostics) {
        std::vector<std::string> row{fmt_k(d.k), format_double(time_of(d.k, result.dt)),
                                     d.det ? format_double(*d.det) : "nan", format_double(d.sigma_min),
                                     format_double(d.sigma_max), format_double(d.cond)};
        for (std::size_t i = 0; i < channel_count; ++i) {
            const auto idx = static_cast<Eigen::Index>(i);
            row.push_back(format_double(idx < d.singular_values.size() ? d.singular_values(idx) : 0.0));
        }
        row.push_back(join(d.active_names, ';'));
        table.add_row(std::move(row));
    }
    return table;
}

json certificate_json(const ExtensionCertificate& certificate, const RankReport& rank)
{
    json generations = json::array();
    for (std::size_t g = 0; g < certificate.generations.size(); ++g) {
        const auto& gen = certificate.generations[g];
        json v = json::array();
        for (Eigen::Index r = 0; r < gen.v.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < gen.v.cols(); ++c) row.push_back(gen.v(r, c));
            v.push_back(row);
        }
        json norms = json::array();
        for (const auto& op : gen.operators) norms.push_back(op.matrix().norm());
        generations.push_back({{"index", g + 1},
                               {"size", gen.operators.size()},
                               {"rank", gen.rank},
                               {"cumulative_rank", gen.cumulative_rank},
                               {"independent", gen.independent},
                               {"dependent", gen.dependent},
                               {"v", v},
                               {"operator_norms", norms},
                               {"path", to_string(gen.path)}});
    }
    json sv = json::array();
    for (Eigen::Index i = 0; i < rank.gram_singular_values.size(); ++i) sv.push_back(rank.gram_singular_values(i));
    return json{{"observables", certificate.base_names},
                {"rank", rank.rank},
                {"independent", rank.independent_indices},
                {"image_singular_values", sv},
                {"invertible", certificate.invertible()},
                {"alpha", certificate.alpha ? json(*certificate.alpha) : json("NotInvertible")},
                {"generations", generations}};
}

TraceSet read_traces(const fs::path& path, std::size_t k_steps, double dt)
{
    NumericCsv csv;
    try {
        csv = read_numeric_csv(path);
    } catch (const std::runtime_error& e) {
        throw ConfigError({"traces: " + std::string(e.what())});
    }
    if (csv.header.size() < 3 || csv.header[0] != "k" || csv.header[1] != "t") {
        throw ConfigError({"traces: header must start with k,t followed by observable columns"});
    }
    if (csv.rows.size() != k_steps + 1) {
        throw ConfigError({"traces: " + std::to_string(csv.rows.size()) + " samples, configuration expects K + 1 = " +
                           std::to_string(k_steps + 1)});
    }
    TraceSet traces;
    traces.dt = dt;
    traces.names.assign(csv.header.begin() + 2, csv.header.end());
    traces.samples.resize(static_cast<Eigen::Index>(traces.names.size()), static_cast<Eigen::Index>(k_steps + 1));
    for (std::size_t k = 0; k < csv.rows.size(); ++k) {
        const auto& row = csv.rows[k];
        const double t = time_of(k, dt);
        if (row[0] != static_cast<double>(k) || std::abs(row[1] - t) > 1e-9 * std::max(1.0, std::abs(t))) {
            throw ConfigError({"traces: row " + std::to_string(k) + " has k/t inconsistent with dt = " +
                               format_double(dt)});
        }
        for (std::size_t m = 0; m < traces.names.size(); ++m) {
            traces.samples(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = row[m + 2];
        }
    }
    return traces;
}

int cmd_simulate(const fs::path& config, const fs::path& out, std::optional<std::uint64_t> seed)
{
    return guarded("simulate", [&] {
        ExperimentConfig cfg = load_experiment(config);
        if (seed) cfg.seed = *seed;
        const auto& m = cfg.model;
        spdlog::info("simulate: K={}, T={}, d={}", cfg.k_steps, cfg.big_t, m.model.dim());
        const auto traj = simulate(m.model, m.rates, m.initial_state, cfg.big_t, cfg.k_steps);
        const auto traces = measure_traces(traj, m.pool, cfg.noise_std, cfg.seed);
        write_outputs(out, {{"traces.csv", traces_table(traces).str()},
                            {"manifest.json", make_manifest(cfg, "simulate").dump(2) + "\n"}});
        return static_cast<int>(kExitOk);
    });
}

int cmd_identify(const fs::path& config, const fs::path& traces_path, const fs::path& out)
{
    return guarded("identify", [&] {
        const ExperimentConfig cfg = load_experiment(config);
        const auto traces = read_traces(traces_path, static_cast<std::size_t>(cfg.k_steps), cfg.dt());
        const auto result = run_identify(cfg, traces);
        if (result.substitution_count > 0) {
            spdlog::info("identify: {} substitution(s)", result.substitution_count);
        }
        write_outputs(out, identify_outputs(cfg, result, "identify"));
        return static_cast<int>(kExitOk);
    });
}

int cmd_analyze(const fs::path& config, const fs::path& out)
{
    return guarded("analyze", [&] {
        const ExperimentConfig cfg = load_experiment(config);
        const json doc = analyze_json(cfg);
        write_outputs(out, {{"identifiability.json", doc.dump(2) + "\n"}});
        spdlog::info("analyze: alpha = {}", doc.at("alpha").dump());
        return static_cast<int>(kExitOk);
    });
}

int cmd_reproduce(const std::vector<std::string>& examples, const fs::path& out, int jobs)
{
    configure_logging();
    std::vector<const ReproduceScenario*> todo;
    for (const auto& name : examples) {
        if (name == "all") {
            for (const auto& s : reproduce_scenarios()) todo.push_back(&s);
            continue;
        }
        try {
            todo.push_back(&find_scenario(name));
        } catch (const std::out_of_range& e) {
            spdlog::error("reproduce: {}", e.what());
            return kExitUsage;
        }
    }
    std::vector<int> codes(todo.size(), kExitOk);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            codes[i] = reproduce_one(*todo[i], out / todo[i]->name);
        }
    };
    const auto n_threads = static_cast<std::size_t>(std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(todo.size(), 1))));
    std::vector<std::thread> threads;
    for (std::size_t i = 1; i < n_threads; ++i) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    for (int c : codes) {
        if (c != kExitOk) return c;
    }
    return kExitOk;
}

int run_cli(int argc, char** argv)
{
    configure_logging();
    CLI::App app{"Identification of damping-rate functions in TCL master equations", "tclid"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string config, out = ".", traces_path;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::vector<std::string> examples;

    auto* sim = app.add_subcommand("simulate", "simulate a configured model and write traces.csv");
    sim->add_option("--config", config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", out, "output directory");
    sim->add_option("--seed", seed, "override the measurement-noise seed");

    auto* ident = app.add_subcommand("identify", "identify damping rates from traces.csv");
    ident->add_option("--config", config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    ident->add_option("--traces", traces_path, "traces.csv from simulate")->required()->check(CLI::ExistingFile);
    ident->add_option("--out", out, "output directory");

    auto* analyze = app.add_subcommand("analyze", "rank and relative-degree analysis of the active observables");
    analyze->add_option("--config", config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    analyze->add_option("--out", out, "output directory");

    auto* repro = app.add_subcommand("reproduce", "run a built-in example end to end");
    repro->add_option("example", examples, "atom-z, atom-x, atom-x-substitute, chain-z, chain-x-substitute or all")
        ->required();
    repro->add_option("--out", out, "output directory (one subdirectory per example)");
    repro->add_option("--jobs", jobs, "examples run concurrently")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*sim) return cmd_simulate(config, out, seed);
    if (*ident) return cmd_identify(config, traces_path, out);
    if (*analyze) return cmd_analyze(config, out);
    return cmd_reproduce(examples, out, jobs);
}

} // namespace tclid::cli
