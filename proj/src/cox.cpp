#include "survaudit/cox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace survaudit {

CoxLossState CoxLossState::build(std::span<const double> times, std::span<const int> events) {
    if (times.size() != events.size() || times.empty()) throw DataError("bad survival inputs");
    CoxLossState st;
    st.times_.assign(times.begin(), times.end());
    st.events_.assign(events.begin(), events.end());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < 0.0) throw DataError("invalid survival time");
        if (events[i] != 0 && events[i] != 1) throw DataError("event indicator must be 0/1");
        st.n_events_ += static_cast<std::size_t>(events[i]);
    }
    if (st.n_events_ == 0) throw DataError("partial likelihood undefined with zero events");

    st.order_.resize(times.size());
    std::iota(st.order_.begin(), st.order_.end(), 0);
    std::sort(st.order_.begin(), st.order_.end(), [&](std::size_t a, std::size_t b) {
        if (times[a] != times[b]) return times[a] > times[b];
        return a < b;
    });
    std::size_t i = 0;
    while (i < st.order_.size()) {
        std::size_t j = i;
        std::size_t ev = 0;
        while (j < st.order_.size() && times[st.order_[j]] == times[st.order_[i]]) {
            ev += static_cast<std::size_t>(events[st.order_[j]]);
            ++j;
        }
        st.group_end_.push_back(j);
        st.group_events_.push_back(ev);
        i = j;
    }
    return st;
}

CoxLossState::Sweep CoxLossState::sweep(std::span<const double> eta) const {
    if (eta.size() != times_.size()) throw DataError("eta length mismatch");
    Sweep sw;
    sw.log_denom.resize(group_end_.size());
    sw.group_of.resize(times_.size());
    // Running log-sum-exp over the descending-time prefix.
    double running_max = -std::numeric_limits<double>::infinity();
    double scaled_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t g = 0; g < group_end_.size(); ++g) {
        for (; pos < group_end_[g]; ++pos) {
            const double e = eta[order_[pos]];
            sw.group_of[order_[pos]] = g;
            if (e > running_max) {
                scaled_sum = running_max == -std::numeric_limits<double>::infinity()
                                 ? 0.0
                                 : scaled_sum * std::exp(running_max - e);
                running_max = e;
            }
            scaled_sum += std::exp(e - running_max);
        }
        sw.log_denom[g] = running_max + std::log(scaled_sum);
    }
    return sw;
}

double CoxLossState::neg_log_partial_likelihood(std::span<const double> eta) const {
    const Sweep sw = sweep(eta);
    double loss = 0.0;
    std::size_t start = 0;
    for (std::size_t g = 0; g < group_end_.size(); ++g) {
        if (group_events_[g] > 0) {
            double eta_sum = 0.0;
            for (std::size_t p = start; p < group_end_[g]; ++p) {
                const std::size_t i = order_[p];
                if (events_[i] == 1) eta_sum += eta[i];
            }
            loss -= eta_sum - static_cast<double>(group_events_[g]) * sw.log_denom[g];
        }
        start = group_end_[g];
    }
    return loss;
}

void CoxLossState::gradient_and_hessian(std::span<const double> eta, std::vector<double>& grad,
                                        std::vector<double>& hess) const {
    const Sweep sw = sweep(eta);
    const std::size_t n_groups = group_end_.size();

    // Suffix accumulators scaled by the local denominator so every term
    // stays in [0, total events]:
    //   a[g] = sum_{v >= g} d_v * exp(log_denom[g] - log_denom[v])
    //   b[g] = sum_{v >= g} d_v * exp(2 (log_denom[g] - log_denom[v]))
    std::vector<double> a(n_groups), b(n_groups);
    double a_next = 0.0, b_next = 0.0;
    for (std::size_t g = n_groups; g-- > 0;) {
        if (g + 1 < n_groups) {
            const double shift = sw.log_denom[g] - sw.log_denom[g + 1];  // <= 0
            a_next *= std::exp(shift);
            b_next *= std::exp(2.0 * shift);
        }
        a_next += static_cast<double>(group_events_[g]);
        b_next += static_cast<double>(group_events_[g]);
        a[g] = a_next;
        b[g] = b_next;
    }

    grad.assign(times_.size(), 0.0);
    hess.assign(times_.size(), 0.0);
    for (std::size_t i = 0; i < times_.size(); ++i) {
        const std::size_t g = sw.group_of[i];
        const double w = std::exp(eta[i] - sw.log_denom[g]);  // <= 1 by construction
        grad[i] = -static_cast<double>(events_[i]) + w * a[g];
        hess[i] = std::max(0.0, w * a[g] - w * w * b[g]);
    }
}

std::vector<double> CoxLossState::gradient(std::span<const double> eta) const {
    std::vector<double> g, h;
    gradient_and_hessian(eta, g, h);
    return g;
}

std::vector<double> CoxLossState::hessian_diag(std::span<const double> eta) const {
    std::vector<double> g, h;
    gradient_and_hessian(eta, g, h);
    return h;
}

double BreslowTable::cumulative_hazard(double t) const {
    // Step function: value of the latest event time <= t.
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0.0;
    return cumhaz[static_cast<std::size_t>(it - times.begin()) - 1];
}

BreslowTable breslow_cumhaz(std::span<const double> times, std::span<const int> events,
                            std::span<const double> eta, std::size_t* capped) {
    if (times.size() != events.size() || times.size() != eta.size() || times.empty()) {
        throw DataError("bad Breslow inputs");
    }
    std::size_t n_events = 0;
    for (int e : events) n_events += static_cast<std::size_t>(e == 1);
    if (n_events == 0) throw DataError("Breslow estimator undefined with zero events");

    std::size_t n_capped = 0;
    std::vector<double> risk(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        double e = eta[i];
        if (e > 30.0) {
            e = 30.0;
            ++n_capped;
        }
        risk[i] = std::exp(e);
    }
    if (capped) *capped = n_capped;

    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return times[x] > times[y]; });

    BreslowTable table;
    double denom = 0.0;
    std::size_t pos = 0;
    std::vector<std::pair<double, double>> increments;  // (time, d / denom), descending time
    while (pos < order.size()) {
        const double t = times[order[pos]];
        std::size_t d = 0;
        while (pos < order.size() && times[order[pos]] == t) {
            denom += risk[order[pos]];
            d += static_cast<std::size_t>(events[order[pos]] == 1);
            ++pos;
        }
        if (d > 0) increments.emplace_back(t, static_cast<double>(d) / denom);
    }
    std::reverse(increments.begin(), increments.end());  // ascending time
    double h = 0.0;
    for (const auto& [t, inc] : increments) {
        h += inc;
        table.times.push_back(t);
        table.cumhaz.push_back(h);
    }
    return table;
}

double fixed_horizon_risk(double eta, const BreslowTable& table, double horizon) {
    const double h0 = table.cumulative_hazard(horizon);
    if (h0 <= 0.0) return 0.0;
    const double x = h0 * std::exp(eta);
    if (!std::isfinite(x)) return 1.0;
    return -std::expm1(-x);
}

std::vector<double> fixed_horizon_risk(std::span<const double> eta, const BreslowTable& table,
                                       double horizon) {
    std::vector<double> out(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) out[i] = fixed_horizon_risk(eta[i], table, horizon);
    return out;
}

double soft_threshold(double z, double t) {
    if (t < 0.0) throw NumericError("soft_threshold needs t >= 0");
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double tree_split_gain(double g_left, double h_left, double g_right, double h_right,
                       double lambda_tree, double gamma) {
    const double parent_g = g_left + g_right;
    const double parent_h = h_left + h_right;
    return 0.5 * (g_left * g_left / (h_left + lambda_tree) + g_right * g_right / (h_right + lambda_tree) -
                  parent_g * parent_g / (parent_h + lambda_tree)) -
           gamma;
}

}  // namespace survaudit
