#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "survaudit/cox.hpp"

namespace survaudit {

struct CoxNetOptions {
    double lambda = 0.1;
    double alpha = 0.5;  // L1 share of the penalty
    double tol = 1e-7;   // relative objective decrease
    int max_iter = 10000;
};

struct CoxNetModel {
    std::vector<std::string> columns;
    Eigen::VectorXd beta;
    double lambda = 0.0;
    double alpha = 0.0;
    bool converged = false;
    int iterations = 0;
    BreslowTable baseline;

    Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X) const;
};

/// Minimizes (1/n) negloglik(X beta) + lambda (alpha |beta|_1 + (1-alpha) |beta|_2^2)
/// by proximal gradient with backtracking halving. X must be standardized.
/// The fit starts at beta = 0, so a dominating penalty returns exact zeros.
CoxNetModel fit_coxnet(const Eigen::MatrixXd& X, std::span<const double> times,
                       std::span<const int> events, const CoxNetOptions& opts,
                       std::vector<std::string> columns = {});

/// Gradient of the smooth part (1/n) negloglik(X beta) at beta.
Eigen::VectorXd coxnet_smooth_gradient(const Eigen::MatrixXd& X, const CoxLossState& state,
                                       const Eigen::VectorXd& beta);

/// Max-norm KKT stationarity residual of a fitted model (0 at the optimum).
double coxnet_kkt_residual(const Eigen::MatrixXd& X, std::span<const double> times,
                           std::span<const int> events, const CoxNetModel& model);

}  // namespace survaudit
