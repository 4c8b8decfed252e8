#pragma once

#include "qpfkam/arithmetic.hpp"
#include "qpfkam/kamflow.hpp"
#include "qpfkam/spectral.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace qpfkam {

using Json = nlohmann::ordered_json;

/// {"s":..,"r":..,"modes":[[l,k1,k2,re,im],...]} in canonical mode order.
[[nodiscard]] Json to_json(const TorusFunction& f);

/// Accepts the form written by to_json, or a bare list of mode entries. An
/// entry is [l,k1,k2,re] or [l,k1,k2,re,im], or an object
/// {"sin":[l,k1,k2],"amp":a} / {"cos":[l,k1,k2],"amp":a} / {"const":c}.
/// Errors: cli.config-invalid.
[[nodiscard]] TorusFunction torus_from_json(const Json& j);

[[nodiscard]] Json to_json(const ConjugationChain& chain);
[[nodiscard]] ConjugationChain chain_from_json(const Json& j);

/// "golden", "silver", or {"kind":"quadratic","a":..,"b":..,"c":..,"d":..},
/// {"kind":"quotients","quotients":[..]}, {"kind":"decimal","value":"..","uncertainty":".."},
/// {"kind":"rational","num":..,"den":..}. Integers may be JSON numbers or strings.
[[nodiscard]] FrequencySpec frequency_from_json(const Json& j);
[[nodiscard]] Json to_json(const FrequencySpec& spec);

[[nodiscard]] Json to_json(const CdSequence& cd);
[[nodiscard]] Json to_json(const ScheduleAudit& audit);
[[nodiscard]] Json to_json(const StepReport& step);

[[nodiscard]] Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// Plain CSV table; cells are written verbatim, so callers format numbers.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

/// Shortest decimal that round-trips the double.
[[nodiscard]] std::string fmt(double x);

void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace qpfkam
