#pragma once

#include <span>
#include <vector>

#include "survaudit/common.hpp"

namespace survaudit {

/// Risk-set structure shared by the partial-likelihood loss, its
/// derivatives and the Breslow estimator. Tied event times use the
/// Breslow approximation (one shared denominator per unique time).
///
/// Indices are sorted by time descending, so risk sets are prefixes and
/// all denominators come from one cumulative sweep.
class CoxLossState {
  public:
    static CoxLossState build(std::span<const double> times, std::span<const int> events);

    std::size_t size() const { return times_.size(); }
    std::size_t event_count() const { return n_events_; }
    std::span<const double> times() const { return times_; }
    std::span<const int> events() const { return events_; }

    /// -sum over events of [eta_i - log sum_{j in R(T_i)} exp(eta_j)].
    double neg_log_partial_likelihood(std::span<const double> eta) const;

    /// d/d eta_i of the loss; sums to zero.
    std::vector<double> gradient(std::span<const double> eta) const;

    /// Diagonal of the Hessian; all entries non-negative.
    std::vector<double> hessian_diag(std::span<const double> eta) const;

    void gradient_and_hessian(std::span<const double> eta, std::vector<double>& grad,
                              std::vector<double>& hess) const;

  private:
    std::vector<double> times_;
    std::vector<int> events_;
    std::vector<std::size_t> order_;       // indices sorted by time descending
    std::vector<std::size_t> group_end_;   // per unique time (descending), end offset in order_
    std::vector<std::size_t> group_events_;
    std::size_t n_events_ = 0;

    // log denominators per unique time, descending; plus per-patient group.
    struct Sweep {
        std::vector<double> log_denom;      // aligned with unique times (descending)
        std::vector<std::size_t> group_of;  // patient -> unique-time group containing it
    };
    Sweep sweep(std::span<const double> eta) const;
};

struct BreslowTable {
    std::vector<double> times;    // strictly increasing event times
    std::vector<double> cumhaz;   // non-decreasing H0 at those times

    /// Step-function value, 0 before the first event time.
    double cumulative_hazard(double t) const;
};

/// Baseline cumulative hazard on training data given linear predictors.
/// exp(eta) is capped at exp(30); the cap counter reports how often.
BreslowTable breslow_cumhaz(std::span<const double> times, std::span<const int> events,
                            std::span<const double> eta, std::size_t* capped = nullptr);

/// p = 1 - exp(-H0(horizon) * exp(eta)).
double fixed_horizon_risk(double eta, const BreslowTable& table, double horizon = 60.0);

std::vector<double> fixed_horizon_risk(std::span<const double> eta, const BreslowTable& table,
                                       double horizon = 60.0);

/// Proximal map of t * |.|: sign(z) * max(|z| - t, 0).
double soft_threshold(double z, double t);

/// Second-order split gain with L2 leaf penalty and gain floor gamma.
double tree_split_gain(double g_left, double h_left, double g_right, double h_right,
                       double lambda_tree, double gamma);

}  // namespace survaudit
