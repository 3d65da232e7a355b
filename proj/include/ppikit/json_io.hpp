#pragma once

#include <string>

#include <json.hpp>

#include "ppikit/data_model.hpp"
#include "ppikit/diagnostics.hpp"
#include "ppikit/simlab.hpp"

namespace ppikit {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

nlohmann::ordered_json estimate_to_json(const Estimate& e, const ConfidenceInterval& ci);

nlohmann::ordered_json report_to_json(const DiagnosticReport& report,
                                      const Recommendation& rec);

// Human-readable rendering of the diagnostic report (for stderr).
std::string render_report_table(const DiagnosticReport& report,
                                const Recommendation& rec);

struct ScenarioConfig {
    DGPSpec dgp;
    LabelMechanism mechanism;
    ScenarioSpec scenario;
};

ScenarioConfig parse_scenario_config(const nlohmann::json& j);
ScenarioConfig load_scenario_config(const std::string& path);

nlohmann::ordered_json replication_to_json(const ReplicationRecord& rec);

} // namespace ppikit
