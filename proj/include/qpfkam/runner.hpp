#pragma once

#include "qpfkam/io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qpfkam {

enum class RunMode { paper, engineering };

/// Resolved experiment description. `params` keeps the run-specific block.
struct ExperimentConfig {
    std::string run;
    RunMode mode = RunMode::engineering;
    std::uint64_t seed = 1;
    std::string output;  ///< empty: no artifacts are written
    int max_degree = 64;
    int threads = 1;
    Json frequency = "golden";
    Json system = Json::object();
    Json schedule = Json::object();
    Json params = Json::object();
};

/// Names accepted in the "run" field.
[[nodiscard]] const std::vector<std::string>& run_names();

/// Validates the schema. Relative file references in the system block are
/// resolved against base_dir. Errors: cli.config-invalid.
[[nodiscard]] ExperimentConfig parse_config(const Json& j, const std::string& base_dir = ".");

/// The resolved configuration as written into the manifest.
[[nodiscard]] Json to_json(const ExperimentConfig& c);

struct RunOutcome {
    int exit_status = 0;  ///< 0 iff every certified bound or measured contract passed
    Json result;
    std::vector<std::pair<std::string, CsvTable>> tables;  ///< file name, table
    std::vector<std::pair<std::string, Json>> documents;   ///< extra JSON files such as chain.json
    Json timing;
    std::string error;  ///< module-qualified error name when the run failed
};

/// Dispatches to the named run. Library errors are caught and reported in
/// the outcome with exit status 2; nothing is written to disk here.
[[nodiscard]] RunOutcome run_experiment(const ExperimentConfig& cfg);

/// Writes manifest.json, result.json, timing.json, the documents and the CSV tables into
/// cfg.output. Errors: cli.io-error.
void write_artifacts(const ExperimentConfig& cfg, const RunOutcome& out);

}  // namespace qpfkam
