#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survaudit/features.hpp"

namespace survaudit {

struct BootstrapResult {
    std::string metric;
    double point = 0.0;               // metric on the full data
    std::vector<double> replicates;   // length B minus skipped
    double ci_low = 0.0;              // 2.5th percentile
    double ci_high = 0.0;             // 97.5th percentile
    std::size_t b = 0;
    std::size_t skipped = 0;          // undefined-metric resamples
    bool flagged = false;             // more than 20% skipped
    std::uint64_t seed = 0;
};

/// Returns nullopt when undefined on the resample (e.g. single class).
using MetricFn =
    std::function<std::optional<double>(std::span<const int>, std::span<const double>)>;

/// Patient-level resampling with per-replicate generators seeded from
/// (seed, replicate), so the replicate vector is identical under any
/// thread count or scheduling.
BootstrapResult bootstrap_ci(std::span<const int> y, std::span<const double> p,
                             const std::string& metric_name, const MetricFn& metric,
                             std::size_t b, std::uint64_t seed, int threads = 1);

/// Linear-interpolation quantile of a sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);

struct MaskingScenario {
    std::vector<FeatureBlock> modalities;
    double rho = 0.0;
    std::uint64_t seed = 0;
};

/// Sets floor(rho * m) columns of each chosen modality to 0 (the
/// standardized training-mean baseline), identically for all rows.
/// Column draws use an independent subseed per modality.
FeatureMatrix mask_modality(const FeatureMatrix& X, const MaskingScenario& scenario);

struct AblationConfig {
    std::string name;
    std::vector<FeatureBlock> blocks;
};

std::vector<AblationConfig> standard_ablation_configs();

/// Runs `protocol` once per config on the config's column subset. The
/// protocol retrains and evaluates; this harness owns block resolution,
/// validation and stable row ordering.
template <typename Row>
std::vector<Row> ablation_run(
    const std::vector<AblationConfig>& configs, const FeatureMatrix& features,
    const std::function<Row(const AblationConfig&, const std::vector<Eigen::Index>&)>& protocol) {
    std::vector<Row> rows;
    rows.reserve(configs.size());
    for (const auto& config : configs) {
        std::vector<Eigen::Index> cols;
        for (FeatureBlock b : config.blocks) {
            auto block_cols = features.block_columns(b);
            if (block_cols.empty()) {
                throw DataError("ablation config '" + config.name + "' references absent block " +
                                block_name(b));
            }
            cols.insert(cols.end(), block_cols.begin(), block_cols.end());
        }
        std::sort(cols.begin(), cols.end());
        rows.push_back(protocol(config, cols));
    }
    return rows;
}

}  // namespace survaudit
