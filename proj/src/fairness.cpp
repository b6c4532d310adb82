#include "survaudit/fairness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "survaudit/calibration.hpp"

namespace survaudit {

std::string age_level(double age, const std::vector<double>& edges) {
    if (edges.empty()) throw ConfigError("age bins need at least one edge");
    if (age < edges.front()) return "<" + format_double(edges.front());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (age >= edges[i] && age < edges[i + 1]) {
            return format_double(edges[i]) + "-" + format_double(edges[i + 1]);
        }
    }
    return ">=" + format_double(edges.back());
}

std::map<std::string, std::string> assign_subgroups(const CsvTable& clinical, const SubgroupSpec& spec) {
    const std::size_t id_col = clinical.column_index("patient_id");
    const std::size_t var_col = clinical.column_index(spec.variable);

    std::map<std::string, std::string> out;
    for (const auto& row : clinical.rows) {
        const std::string& id = row[id_col];
        if (out.count(id)) continue;
        const std::string& token = row[var_col];
        if (is_missing_token(token)) {
            out[id] = "unknown";
            continue;
        }
        if (spec.kind == SubgroupSpec::Kind::kAgeBins) {
            double age = 0.0;
            auto res = std::from_chars(token.data(), token.data() + token.size(), age);
            if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(age)) {
                throw DataError("non-numeric age '" + token + "' for patient " + id);
            }
            out[id] = age_level(age, spec.age_edges);
        } else {
            out[id] = token;
        }
    }
    return out;
}

std::vector<SubgroupResult> subgroup_metrics(std::span<const int> y, std::span<const double> p,
                                             std::span<const std::string> groups, std::size_t min_size,
                                             double tau, std::size_t ece_bins) {
    if (y.size() != p.size() || y.size() != groups.size()) throw DataError("subgroup input size mismatch");

    std::map<std::string, std::vector<std::size_t>> by_level;
    for (std::size_t i = 0; i < groups.size(); ++i) by_level[groups[i]].push_back(i);

    std::vector<SubgroupResult> out;
    for (const auto& [level, idx] : by_level) {
        SubgroupResult res;
        res.level = level;
        res.n = idx.size();
        if (idx.size() < min_size) {
            res.withheld = true;
            res.withheld_reason = "n<min_size";
            out.push_back(std::move(res));
            continue;
        }
        std::vector<int> yy(idx.size());
        std::vector<double> pp(idx.size());
        std::size_t pos = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            yy[k] = y[idx[k]];
            pp[k] = p[idx[k]];
            pos += static_cast<std::size_t>(yy[k]);
        }
        if (pos == 0 || pos == idx.size()) {
            res.withheld = true;
            res.withheld_reason = "single-class";
            out.push_back(std::move(res));
            continue;
        }
        res.prevalence = static_cast<double>(pos) / static_cast<double>(idx.size());
        res.auroc = auroc(yy, pp);
        res.auprc = average_precision(yy, pp);
        res.brier = brier_score(yy, pp);
        res.ece = ece(yy, pp, ece_bins);
        auto fit = fit_logistic_recalibration(yy, pp);
        res.slope = fit.slope;
        res.slope_flagged = fit.separation || !fit.converged;
        res.confusion = confusion_at_threshold(yy, pp, tau);
        out.push_back(std::move(res));
    }
    return out;  // std::map iteration is already lexicographic
}

namespace {

void add_gap(ParitySummary& summary, const std::string& metric,
             const std::vector<std::pair<std::string, double>>& values) {
    if (values.size() < 2) return;
    auto max_it = values.begin(), min_it = values.begin();
    for (auto it = values.begin(); it != values.end(); ++it) {
        if (it->second > max_it->second) max_it = it;
        if (it->second < min_it->second) min_it = it;
    }
    summary.gaps[metric] = ParityGap{max_it->second - min_it->second, max_it->first, min_it->first};
}

}  // namespace

ParitySummary parity_summary(const std::vector<SubgroupResult>& results) {
    ParitySummary summary;
    std::size_t usable = 0;
    std::vector<std::pair<std::string, double>> auroc_v, tpr_v, fpr_v, ppv_v, ppr_v;
    for (const auto& r : results) {
        if (r.withheld) continue;
        ++usable;
        if (r.auroc) auroc_v.emplace_back(r.level, *r.auroc);
        if (r.confusion) {
            if (r.confusion->tpr) tpr_v.emplace_back(r.level, *r.confusion->tpr);
            if (r.confusion->fpr) fpr_v.emplace_back(r.level, *r.confusion->fpr);
            if (r.confusion->ppv) ppv_v.emplace_back(r.level, *r.confusion->ppv);
            ppr_v.emplace_back(r.level, r.confusion->predicted_positive_rate);
        }
    }
    if (usable < 2) {
        summary.unavailable_reason = "fewer than two usable levels";
        return summary;
    }
    add_gap(summary, "auroc", auroc_v);
    add_gap(summary, "tpr", tpr_v);
    add_gap(summary, "fpr", fpr_v);
    add_gap(summary, "ppv", ppv_v);
    add_gap(summary, "predicted_positive_rate", ppr_v);
    return summary;
}

}  // namespace survaudit
