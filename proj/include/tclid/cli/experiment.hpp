// Experiment configuration, run manifests and the built-in
// reproduction scenarios.

#pragma once

#include "tclid/config.hpp"
#include "tclid/identifier.hpp"
#include "tclid/propagator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tclid::cli {

inline constexpr const char* kToolVersion = "1.0.0";

struct ExperimentConfig {
    ModelConfig model;
    double big_t = 10.0;
    int k_steps = 10000;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
    IdentifyOptions identify;
    /// Canonical serialization of the input document; hashed into manifests.
    std::string canonical;

    double dt() const { return big_t / k_steps; }
};

/// Parses the full experiment document: the model sections of parse_model
/// plus "T", "K", "noise_std", "seed" and an optional "identify" section
/// {"sigma_threshold", "substitution", "smoothing_window"}. Throws ConfigError.
ExperimentConfig parse_experiment(const nlohmann::json& doc);

/// Reads and parses a JSON file; syntax errors become ConfigError.
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

nlohmann::json make_manifest(const ExperimentConfig& cfg, const std::string& command);

struct ReproduceScenario {
    std::string name;
    std::string preset;              // "atom" or "spin_chain"
    std::vector<std::string> active;
    int k_steps = 0;
    bool substitution = false;
    double sigma_threshold = 1e-3;
};

const std::vector<ReproduceScenario>& reproduce_scenarios();
const ReproduceScenario& find_scenario(const std::string& name); // throws std::out_of_range

/// Experiment document of a scenario, suitable for parse_experiment.
nlohmann::json scenario_document(const ReproduceScenario& scenario);

/// Interior window used by every error summary: t >= kInteriorStart.
inline constexpr double kInteriorStart = 0.01;

struct ErrorSummary {
    std::vector<double> max_error;      // per channel, over the interior window
    std::vector<double> max_error_time;
    double max_trace_deviation = 0.0;   // reconstructed vs measured, all pool observables, all samples
    /// Maximal runs [k_begin, k_end] of steps where sigma_min < 1e-3 max_{j<=k} sigma_min
    /// or |gamma_hat| > 10 max_t |gamma(t)|.
    std::vector<std::pair<std::size_t, std::size_t>> divergence_intervals;
};

ErrorSummary summarize(const ExperimentConfig& cfg, const TraceSet& traces, const IdentificationResult& result);

} // namespace tclid::cli
