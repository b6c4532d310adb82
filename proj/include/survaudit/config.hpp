#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "survaudit/cohort.hpp"
#include "survaudit/fairness.hpp"
#include "survaudit/features.hpp"
#include "survaudit/gbcox.hpp"

namespace survaudit {

struct ModalityConfig {
    FilterConfig filter;
    int tsvd_k = 50;  // 0 disables the reduction
};

struct CoxnetGridConfig {
    std::vector<double> lambda = {0.1, 0.01};
    std::vector<double> alpha = {0.5};
    double tol = 1e-7;
    int max_iter = 10000;
};

struct GbcoxGridConfig {
    std::vector<int> max_depth = {3};
    std::vector<double> learning_rate = {0.1};
    std::vector<int> rounds = {300};
    std::vector<double> lambda_tree = {1.0};
    std::vector<double> subsample = {0.8};
    double gamma = 0.0;
    double min_child_weight = 1.0;
};

struct FairnessVariableConfig {
    std::string name;
    SubgroupSpec::Kind kind = SubgroupSpec::Kind::kCategorical;
};

struct PipelineConfig {
    // paths (excluded from the config hash; data drift is caught by the
    // manifest's input content hashes)
    std::string clinical_path;
    std::string expr_path;
    std::string cna_path;
    std::string sample_map_path;
    std::string output_dir = "out";

    std::uint64_t seed = 0;  // mandatory, no wall-clock default
    SplitFractions fractions;
    double horizon_months = 60.0;
    AggregationPolicy aggregation = AggregationPolicy::kMean;
    std::optional<std::vector<std::string>> clinical_features;  // absent = all extra columns

    ModalityConfig expr;
    ModalityConfig cna;

    std::string model_kind = "coxnet";  // or "gbcox"
    CoxnetGridConfig coxnet;
    GbcoxGridConfig gbcox;

    std::size_t ece_bins = 10;
    std::size_t curve_bins = 10;
    bool isotonic = true;

    std::vector<FairnessVariableConfig> fairness_variables;
    std::size_t min_subgroup_size = 30;
    double decision_threshold = 0.20;

    std::size_t bootstrap_b = 1000;
    std::vector<std::string> bootstrap_metrics = {"auroc", "average_precision", "brier", "ece"};
    double mask_rho = 0.2;
    std::vector<std::vector<FeatureBlock>> mask_scenarios = {
        {FeatureBlock::kExpr}, {FeatureBlock::kCna}, {FeatureBlock::kExpr, FeatureBlock::kCna}};
    bool run_ablation = true;

    std::string config_hash;  // of the canonical semantic config
};

PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& config);

/// Loads, validates (existence of input files), and hashes.
PipelineConfig load_config(const std::string& path);

/// Hash of the canonical config with the paths section stripped.
std::string compute_config_hash(const PipelineConfig& config);

}  // namespace survaudit
