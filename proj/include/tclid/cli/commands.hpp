// Subcommands of the tclid tool. Every command validates and
// computes everything before it creates the output directory, so a failed
// run leaves no partial files behind.

#pragma once

#include "tclid/cli/csv.hpp"
#include "tclid/cli/experiment.hpp"
#include "tclid/identifiability.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tclid::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitRankDeficiency = 4,
};

// Table builders; column names and order are part of the file contract.

/// k, t, one column per traced observable.
CsvTable traces_table(const TraceSet& traces);
/// k, t, one column per channel label, sigma_min, cond, substituted, active_names.
CsvTable gammas_table(const IdentificationResult& result, const std::vector<std::string>& labels);
/// k, t, expectation of every pool observable under the reconstructed state.
CsvTable states_table(const IdentificationResult& result, const ObservablePool& pool);
/// k, t, then true_<label> and identified_<label> per channel.
CsvTable rates_table(const IdentificationResult& result, const std::vector<RateFunction>& rates,
                     const std::vector<std::string>& labels);
/// k, t, det, sigma_min, sigma_max, cond, sv1..svN, active_names.
CsvTable w_diagnostics_table(const IdentificationResult& result, std::size_t channel_count);

nlohmann::json certificate_json(const ExtensionCertificate& certificate, const RankReport& rank);

/// Loads traces.csv written by the simulate command. Throws ConfigError when
/// the file is malformed, its sample count is not K + 1 or its time column
/// disagrees with dt.
TraceSet read_traces(const std::filesystem::path& path, std::size_t k_steps, double dt);

int cmd_simulate(const std::filesystem::path& config, const std::filesystem::path& out,
                 std::optional<std::uint64_t> seed = std::nullopt);
int cmd_identify(const std::filesystem::path& config, const std::filesystem::path& traces,
                 const std::filesystem::path& out);
int cmd_analyze(const std::filesystem::path& config, const std::filesystem::path& out);
/// `examples` may contain "all". Each example writes into out/<name>/.
int cmd_reproduce(const std::vector<std::string>& examples, const std::filesystem::path& out, int jobs = 1);

/// Argument parsing and dispatch; returns the process exit code.
int run_cli(int argc, char** argv);

} // namespace tclid::cli
