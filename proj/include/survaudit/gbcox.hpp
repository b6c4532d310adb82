#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "survaudit/cox.hpp"

namespace survaudit {

struct GbcoxParams {
    int rounds = 300;
    int max_depth = 3;
    double learning_rate = 0.1;
    double lambda_tree = 1.0;
    double gamma = 0.0;
    double min_child_weight = 1.0;  // minimum hessian mass per child
    double subsample = 0.8;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x <= threshold goes left
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root

    double predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const;
};

struct GbcoxModel {
    std::vector<std::string> columns;
    std::vector<RegressionTree> trees;
    GbcoxParams params;
    std::uint64_t seed = 0;
    BreslowTable baseline;
    std::vector<double> train_loss_trace;  // loss after each round
    std::vector<double> train_eta;         // final training predictor (not persisted)

    /// eta accumulated tree by tree, matching the training update order.
    Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X) const;
};

/// Second-order boosting on the Cox partial likelihood: per round the
/// gradient/hessian at the current eta feed an exact greedy depth-limited
/// tree; leaf weight is -G/(H+lambda_tree). Row subsampling draws from a
/// generator seeded per (seed, round). Split search may fan out across
/// features; ties resolve to the lowest feature index, lowest threshold.
GbcoxModel fit_gbcox(const Eigen::MatrixXd& X, std::span<const double> times,
                     std::span<const int> events, const GbcoxParams& params, std::uint64_t seed,
                     int threads = 1);

}  // namespace survaudit
