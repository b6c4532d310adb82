#pragma once

#include <json.hpp>
#include <optional>

#include "survaudit/calibration.hpp"
#include "survaudit/coxnet.hpp"
#include "survaudit/features.hpp"
#include "survaudit/gbcox.hpp"

namespace survaudit {

/// Everything `prepare` fits; persisting this (and nothing about the
/// non-training rows) is what makes the leakage gate checkable.
struct PipelineState {
    ClinicalEncoder clinical;
    OmicsBlockState expr;
    OmicsBlockState cna;
    std::vector<std::string> columns;
    std::vector<FeatureBlock> blocks;
};

std::string pipeline_state_to_json(const PipelineState& state, const std::string& config_hash);
PipelineState pipeline_state_from_json(const nlohmann::json& j);

/// A fitted survival model of either kind plus optional isotonic map.
struct TrainedModel {
    std::string kind;  // "coxnet" or "gbcox"
    std::vector<std::string> columns;
    std::optional<CoxNetModel> coxnet;
    std::optional<GbcoxModel> gbcox;
    std::optional<IsotonicMap> isotonic;
    nlohmann::json selection;  // grid trace and the chosen parameters

    const BreslowTable& baseline() const;
    Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X) const;
    /// Fixed-horizon probabilities; applies the isotonic map when present
    /// and `calibrated` is requested.
    std::vector<double> risk60(const Eigen::MatrixXd& X, double horizon, bool calibrated) const;
};

std::string model_to_json(const TrainedModel& model, const std::string& config_hash);
TrainedModel model_from_json(const nlohmann::json& j);

nlohmann::json breslow_to_json(const BreslowTable& table);
BreslowTable breslow_from_json(const nlohmann::json& j);

/// Reads a JSON artifact and enforces the embedded config hash.
nlohmann::json load_artifact_json(const std::string& path, const std::string& expected_hash);

/// Reads a CSV artifact, checking its "# config_hash=..." comment line.
CsvTable load_artifact_csv(const std::string& path, const std::string& expected_hash);

}  // namespace survaudit
