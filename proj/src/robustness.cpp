#include "survaudit/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "survaudit/rng.hpp"

namespace survaudit {

double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw DataError("quantile of empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - std::floor(h);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

BootstrapResult bootstrap_ci(std::span<const int> y, std::span<const double> p,
                             const std::string& metric_name, const MetricFn& metric,
                             std::size_t b, std::uint64_t seed, int threads) {
    if (y.size() != p.size() || y.empty()) throw DataError("bootstrap input size mismatch");
    if (b == 0) throw ConfigError("bootstrap needs B >= 1");
    const auto point = metric(y, p);
    if (!point) throw DataError("metric '" + metric_name + "' undefined on the full data");

    const std::size_t n = y.size();
    std::vector<std::optional<double>> values(b);
    parallel_for(b, threads, [&](std::size_t rep) {
        SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
        std::vector<int> yy(n);
        std::vector<double> pp(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = static_cast<std::size_t>(rng.next_below(n));
            yy[i] = y[j];
            pp[i] = p[j];
        }
        values[rep] = metric(yy, pp);
    });

    BootstrapResult result;
    result.metric = metric_name;
    result.point = *point;
    result.b = b;
    result.seed = seed;
    for (const auto& v : values) {
        if (v) {
            result.replicates.push_back(*v);
        } else {
            ++result.skipped;
        }
    }
    result.flagged = static_cast<double>(result.skipped) > 0.2 * static_cast<double>(b);
    if (result.replicates.empty()) {
        throw DataError("all bootstrap replicates undefined for '" + metric_name + "'");
    }
    std::vector<double> sorted(result.replicates);
    std::sort(sorted.begin(), sorted.end());
    result.ci_low = quantile_sorted(sorted, 0.025);
    result.ci_high = quantile_sorted(sorted, 0.975);
    return result;
}

FeatureMatrix mask_modality(const FeatureMatrix& X, const MaskingScenario& scenario) {
    if (scenario.rho < 0.0 || scenario.rho > 1.0) throw ConfigError("rho must lie in [0,1]");
    for (FeatureBlock b : scenario.modalities) {
        if (b == FeatureBlock::kClinical) {
            throw ConfigError("masking applies to omics modalities only");
        }
    }
    FeatureMatrix out = X;
    if (scenario.rho == 0.0) return out;  // strict no-op

    // Fixed processing order so scenario {expr,cna} means the same draw
    // regardless of how the set was written down.
    const FeatureBlock order[2] = {FeatureBlock::kExpr, FeatureBlock::kCna};
    for (FeatureBlock block : order) {
        if (std::find(scenario.modalities.begin(), scenario.modalities.end(), block) ==
            scenario.modalities.end()) {
            continue;
        }
        const auto cols = X.block_columns(block);
        if (cols.empty()) throw DataError(std::string("no columns tagged ") + block_name(block));
        const auto n_mask =
            static_cast<std::size_t>(scenario.rho * static_cast<double>(cols.size()));
        if (n_mask == 0) continue;
        std::vector<std::size_t> pick(cols.size());
        for (std::size_t i = 0; i < cols.size(); ++i) pick[i] = i;
        SplitMix64 rng(derive_seed(scenario.seed, block_name(block)));
        deterministic_shuffle(pick, rng);
        for (std::size_t k = 0; k < n_mask; ++k) {
            out.values.col(cols[pick[k]]).setZero();
        }
    }
    return out;
}

std::vector<AblationConfig> standard_ablation_configs() {
    return {
        {"clinical", {FeatureBlock::kClinical}},
        {"clinical+expr", {FeatureBlock::kClinical, FeatureBlock::kExpr}},
        {"clinical+cna", {FeatureBlock::kClinical, FeatureBlock::kCna}},
        {"all", {FeatureBlock::kClinical, FeatureBlock::kExpr, FeatureBlock::kCna}},
    };
}

}  // namespace survaudit
