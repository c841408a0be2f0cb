#pragma once

#include <string>
#include <vector>

#include "ivselect/selection.hpp"
#include "ivselect/simulation.hpp"

namespace ivselect::report {

inline constexpr int kSchemaVersion = 1;

std::string to_json(const selection::SelectionReport& report);
/// Inverse of to_json. Throws InputError on malformed documents or an
/// unsupported schema version.
selection::SelectionReport from_json(const std::string& text);

/// Human-readable summary; every number is printed with the same value
/// as in the JSON report.
std::string summary_text(const selection::SelectionReport& report);

std::string metrics_csv(const std::vector<simulation::McMetrics>& metrics);
std::string metrics_json(const std::vector<simulation::McMetrics>& metrics);
std::vector<simulation::McMetrics> metrics_from_json(const std::string& text);
/// Table with columns N, est, std, mean se, det.Z, det.X per scenario block.
std::string metrics_table(const std::vector<simulation::McMetrics>& metrics);

}  // namespace ivselect::report
