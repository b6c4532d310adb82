#include "survaudit/report.hpp"

#include <cstdio>

namespace survaudit {

namespace {

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string fmt3(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return "—";
    return fmt3(j.at(key).get<double>());
}

std::string ci_of(const nlohmann::json& metrics, const std::string& metric) {
    if (!metrics.contains("bootstrap")) return "—";
    for (const auto& row : metrics.at("bootstrap").at("metrics")) {
        if (row.at("metric").get<std::string>() == metric) {
            return fmt3(row.at("ci_low").get<double>()) + " – " +
                   fmt3(row.at("ci_high").get<double>());
        }
    }
    return "—";
}

}  // namespace

std::string render_report(const nlohmann::json& metrics) {
    std::string out;
    out += "# Survival audit report\n\n";
    out += "Configuration hash: `" + metrics.value("config_hash", std::string("?")) + "`\n\n";

    if (metrics.contains("test")) {
        const auto& t = metrics.at("test");
        out += "## Overall test performance";
        if (metrics.contains("model")) {
            out += " (" + metrics.at("model").get<std::string>();
            if (t.value("calibrated", false)) out += ", calibrated probabilities";
            out += ")";
        }
        out += "\n\n";
        out += "n = " + std::to_string(t.at("n").get<std::size_t>()) +
               " patients with defined 60-month outcomes\n\n";
        out += "| Metric | Point estimate | 95% CI (bootstrap) |\n";
        out += "|---|---|---|\n";
        out += "| AUROC | " + fmt3(t, "auroc") + " | " + ci_of(metrics, "auroc") + " |\n";
        out += "| AUPRC | " + fmt3(t, "average_precision") + " | " +
               ci_of(metrics, "average_precision") + " |\n";
        out += "| Brier score | " + fmt3(t, "brier") + " | " + ci_of(metrics, "brier") + " |\n";
        out += "| Expected calibration error (ECE) | " + fmt3(t, "ece") + " | " +
               ci_of(metrics, "ece") + " |\n";
        out += "| Calibration intercept | " + fmt3(t, "intercept") + " | — |\n";
        out += "| Calibration slope | " + fmt3(t, "slope") + " | — |\n";
        out += "| Outcome prevalence | " + fmt3(t, "prevalence") + " | — |\n";
        out += "| Mean predicted risk | " + fmt3(t, "mean_predicted") + " | — |\n\n";
    } else {
        out += "_No test metrics available; run the evaluate stage._\n\n";
    }

    if (metrics.contains("fairness")) {
        const auto& fairness = metrics.at("fairness");
        out += "## Subgroup fairness\n\n";
        const double tau = fairness.at("threshold").get<double>();
        for (const auto& [variable, entry] : fairness.at("variables").items()) {
            out += "### " + variable + " (threshold-free)\n\n";
            out += "| Group | n | Prev | AUROC | AUPRC | Brier | ECE | Slope |\n";
            out += "|---|---|---|---|---|---|---|---|\n";
            for (const auto& r : entry.at("results")) {
                out += "| " + r.at("level").get<std::string>() + " | " +
                       std::to_string(r.at("n").get<std::size_t>()) + " | ";
                if (r.at("withheld").get<bool>()) {
                    out += "withheld (" + r.at("reason").get<std::string>() + ") | | | | | |\n";
                } else {
                    out += fmt3(r, "prevalence") + " | " + fmt3(r, "auroc") + " | " +
                           fmt3(r, "auprc") + " | " + fmt3(r, "brier") + " | " + fmt3(r, "ece") +
                           " | " + fmt3(r, "slope") + " |\n";
                }
            }
            out += "\n### " + variable + " (risk threshold = " + fmt3(tau) + ")\n\n";
            out += "| Group | TPR | FPR | PPV | Predicted positive rate |\n";
            out += "|---|---|---|---|---|\n";
            for (const auto& r : entry.at("results")) {
                if (r.at("withheld").get<bool>()) continue;
                const auto& c = r.at("confusion");
                out += "| " + r.at("level").get<std::string>() + " | " + fmt3(c, "tpr") + " | " +
                       fmt3(c, "fpr") + " | " + fmt3(c, "ppv") + " | " +
                       fmt3(c, "predicted_positive_rate") + " |\n";
            }
            out += "\n";
            const auto& parity = entry.at("parity");
            if (parity.contains("unavailable")) {
                out += "_Parity gaps unavailable: " + parity.at("unavailable").get<std::string>() +
                       "._\n\n";
            } else {
                out += "Parity gaps (max − min): ";
                bool first = true;
                for (const auto& [metric, gap] : parity.items()) {
                    if (!first) out += ", ";
                    out += metric + " " + fmt3(gap.at("gap").get<double>());
                    first = false;
                }
                out += "\n\n";
            }
        }
    } else {
        out += "_Fairness audit not run._\n\n";
    }

    if (metrics.contains("bootstrap") && metrics.at("bootstrap").contains("subgroups")) {
        out += "## Bootstrap robustness by subgroup\n\n";
        for (const auto& [variable, rows] : metrics.at("bootstrap").at("subgroups").items()) {
            if (rows.empty()) continue;
            out += "### " + variable + "\n\n";
            out += "| Group | Metric | Point | 95% CI |\n";
            out += "|---|---|---|---|\n";
            for (const auto& r : rows) {
                out += "| " + r.at("level").get<std::string>() + " | " +
                       r.at("metric").get<std::string>() + " | " + fmt3(r, "point") + " | " +
                       fmt3(r.at("ci_low").get<double>()) + " – " +
                       fmt3(r.at("ci_high").get<double>()) + " |\n";
            }
            out += "\n";
        }
    } else {
        out += "_Bootstrap intervals not computed._\n\n";
    }

    if (metrics.contains("stress")) {
        const auto& stress = metrics.at("stress");
        out += "## Missing-modality stress tests (rho = " +
               fmt3(stress.at("rho").get<double>()) + ")\n\n";
        out += "| Masked modalities | AUROC | ΔAUROC | Brier | ΔBrier | ECE | ΔECE |\n";
        out += "|---|---|---|---|---|---|---|\n";
        for (const auto& s : stress.at("scenarios")) {
            out += "| " + s.at("modalities").get<std::string>() + " | " + fmt3(s, "auroc") + " | " +
                   fmt3(s, "delta_auroc") + " | " + fmt3(s, "brier") + " | " +
                   fmt3(s, "delta_brier") + " | " + fmt3(s, "ece") + " | " + fmt3(s, "delta_ece") +
                   " |\n";
        }
        out += "\n";
    } else {
        out += "_Stress tests not run._\n\n";
    }

    if (metrics.contains("ablation")) {
        out += "## Multimodal ablation\n\n";
        out += "| Configuration | Features | AUROC | AUPRC | Brier | ECE |\n";
        out += "|---|---|---|---|---|---|\n";
        for (const auto& r : metrics.at("ablation")) {
            out += "| " + r.at("config").get<std::string>() + " | " +
                   std::to_string(r.at("n_features").get<std::size_t>()) + " | " +
                   fmt3(r, "auroc") + " | " + fmt3(r, "average_precision") + " | " +
                   fmt3(r, "brier") + " | " + fmt3(r, "ece") + " |\n";
        }
        out += "\n";
    } else {
        out += "_Ablation not run._\n\n";
    }

    return out;
}

}  // namespace survaudit
