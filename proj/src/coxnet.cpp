#include "survaudit/coxnet.hpp"

#include <cmath>
#include <iostream>

namespace survaudit {

Eigen::VectorXd CoxNetModel::linear_predictor(const Eigen::MatrixXd& X) const {
    if (X.cols() != beta.size()) throw DataError("feature count mismatch in CoxNet prediction");
    return X * beta;
}

Eigen::VectorXd coxnet_smooth_gradient(const Eigen::MatrixXd& X, const CoxLossState& state,
                                       const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = X * beta;
    const std::vector<double> g = state.gradient({eta.data(), static_cast<std::size_t>(eta.size())});
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
    return (X.transpose() * gv) / static_cast<double>(X.rows());
}

namespace {

struct Objective {
    const Eigen::MatrixXd& X;
    const CoxLossState& state;
    double lambda;
    double alpha;

    double smooth(const Eigen::VectorXd& beta) const {
        const Eigen::VectorXd eta = X * beta;
        const double pl =
            state.neg_log_partial_likelihood({eta.data(), static_cast<std::size_t>(eta.size())});
        return pl / static_cast<double>(X.rows()) + lambda * (1.0 - alpha) * beta.squaredNorm();
    }

    Eigen::VectorXd smooth_grad(const Eigen::VectorXd& beta) const {
        return coxnet_smooth_gradient(X, state, beta) + 2.0 * lambda * (1.0 - alpha) * beta;
    }

    double penalty(const Eigen::VectorXd& beta) const {
        return lambda * alpha * beta.lpNorm<1>();
    }

    double full(const Eigen::VectorXd& beta) const { return smooth(beta) + penalty(beta); }
};

Eigen::VectorXd prox_l1(const Eigen::VectorXd& v, double t) {
    Eigen::VectorXd out(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) out[j] = soft_threshold(v[j], t);
    return out;
}

}  // namespace

CoxNetModel fit_coxnet(const Eigen::MatrixXd& X, std::span<const double> times,
                       std::span<const int> events, const CoxNetOptions& opts,
                       std::vector<std::string> columns) {
    if (static_cast<std::size_t>(X.rows()) != times.size()) throw DataError("X/outcome size mismatch");
    if (opts.lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (opts.alpha < 0.0 || opts.alpha > 1.0) throw ConfigError("alpha must lie in [0,1]");
    if (!columns.empty() && columns.size() != static_cast<std::size_t>(X.cols())) {
        throw ConfigError("column name count mismatch");
    }

    const CoxLossState state = CoxLossState::build(times, events);
    const Objective obj{X, state, opts.lambda, opts.alpha};

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
    double f_val = obj.full(beta);
    if (!std::isfinite(f_val)) throw NumericError("non-finite CoxNet objective at start");

    constexpr double kArmijo = 1e-4;
    double step = 1.0;
    bool converged = false;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const double smooth_val = obj.smooth(beta);
        const Eigen::VectorXd grad = obj.smooth_grad(beta);
        Eigen::VectorXd candidate;
        double f_new = f_val;
        bool accepted = false;
        // Backtracking by halving: the step must satisfy the quadratic
        // majorization bound of the smooth part (which implies the Armijo
        // sufficient decrease on the composite objective).
        for (double s = step; s > 1e-18; s *= 0.5) {
            candidate = prox_l1(beta - s * grad, s * opts.lambda * opts.alpha);
            const Eigen::VectorXd delta = candidate - beta;
            const double delta_sq = delta.squaredNorm();
            if (delta_sq == 0.0) {  // fixed point of the prox map
                accepted = true;
                f_new = f_val;
                step = s;
                break;
            }
            const double smooth_new = obj.smooth(candidate);
            if (std::isnan(smooth_new)) throw NumericError("NaN in CoxNet objective");
            const bool majorized =
                smooth_new <= smooth_val + grad.dot(delta) + delta_sq / (2.0 * s);
            f_new = smooth_new + obj.penalty(candidate);
            const bool armijo = f_new <= f_val - kArmijo * delta_sq / s;
            if (majorized && armijo) {
                accepted = true;
                step = s * 2.0;  // allow the step to grow back
                break;
            }
        }
        if (!accepted) {  // objective cannot be decreased further at fp precision
            converged = true;
            break;
        }
        const double decrease = f_val - f_new;
        beta = candidate;
        const bool done = decrease <= opts.tol * std::max(1.0, std::fabs(f_val));
        f_val = f_new;
        if (done) {
            converged = true;
            ++iter;
            break;
        }
    }

    CoxNetModel model;
    model.columns = std::move(columns);
    model.beta = std::move(beta);
    model.lambda = opts.lambda;
    model.alpha = opts.alpha;
    model.converged = converged;
    model.iterations = iter;

    const Eigen::VectorXd eta = X * model.beta;
    std::size_t capped = 0;
    model.baseline =
        breslow_cumhaz(times, events, {eta.data(), static_cast<std::size_t>(eta.size())}, &capped);
    if (capped > 0) {
        std::cerr << "warning: Breslow estimator capped exp(eta) for " << capped << " patients\n";
    }
    return model;
}

double coxnet_kkt_residual(const Eigen::MatrixXd& X, std::span<const double> times,
                           std::span<const int> events, const CoxNetModel& model) {
    const CoxLossState state = CoxLossState::build(times, events);
    const Eigen::VectorXd grad = coxnet_smooth_gradient(X, state, model.beta);
    const double l1 = model.lambda * model.alpha;
    const double l2 = 2.0 * model.lambda * (1.0 - model.alpha);
    double residual = 0.0;
    for (Eigen::Index j = 0; j < model.beta.size(); ++j) {
        const double b = model.beta[j];
        double r;
        if (b != 0.0) {
            r = std::fabs(grad[j] + l2 * b + l1 * (b > 0 ? 1.0 : -1.0));
        } else {
            r = std::max(0.0, std::fabs(grad[j]) - l1);
        }
        residual = std::max(residual, r);
    }
    return residual;
}

}  // namespace survaudit
