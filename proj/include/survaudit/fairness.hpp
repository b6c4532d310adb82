#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survaudit/csv.hpp"
#include "survaudit/discrimination.hpp"

namespace survaudit {

struct SubgroupSpec {
    std::string variable;
    enum class Kind { kCategorical, kAgeBins } kind = Kind::kCategorical;
    std::vector<double> age_edges = {40.0, 50.0, 60.0, 70.0};  // left-closed bins
};

/// patient_id -> level. Categorical values pass through verbatim, numeric
/// ages map through the edges, missing values map to "unknown".
std::map<std::string, std::string> assign_subgroups(const CsvTable& clinical, const SubgroupSpec& spec);

std::string age_level(double age, const std::vector<double>& edges);

struct SubgroupResult {
    std::string level;
    std::size_t n = 0;
    bool withheld = false;
    std::string withheld_reason;
    // Metric values are only present when the level passed gating.
    std::optional<double> prevalence;
    std::optional<double> auroc;
    std::optional<double> auprc;
    std::optional<double> brier;
    std::optional<double> ece;
    std::optional<double> slope;
    bool slope_flagged = false;
    std::optional<ConfusionAtThreshold> confusion;
};

/// Conditional metrics per level, lexicographically ordered. Levels below
/// min_size or with a single outcome class are withheld with a reason and
/// expose no metric values.
std::vector<SubgroupResult> subgroup_metrics(std::span<const int> y, std::span<const double> p,
                                             std::span<const std::string> groups, std::size_t min_size,
                                             double tau, std::size_t ece_bins = 10);

struct ParityGap {
    double gap = 0.0;
    std::string max_level;
    std::string min_level;
};

struct ParitySummary {
    std::map<std::string, ParityGap> gaps;  // auroc/tpr/fpr/ppv/ppr
    std::string unavailable_reason;         // set when < 2 usable levels
};

ParitySummary parity_summary(const std::vector<SubgroupResult>& results);

}  // namespace survaudit
