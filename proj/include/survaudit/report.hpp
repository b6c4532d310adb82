#pragma once

#include <json.hpp>
#include <string>

namespace survaudit {

/// Markdown summary of a metrics.json document: the overall test table,
/// subgroup fairness blocks, subgroup bootstrap intervals, masking stress
/// rows and the ablation table. Sections without data are replaced by a
/// short notice. Regeneration from the same metrics is byte-identical.
std::string render_report(const nlohmann::json& metrics);

}  // namespace survaudit
