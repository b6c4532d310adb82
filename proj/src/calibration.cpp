#include "survaudit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace survaudit {

namespace {

constexpr double kProbClip = 1e-6;

void check_pair(std::span<const int> y, std::span<const double> p) {
    if (y.size() != p.size()) throw DataError("label/probability length mismatch");
    if (y.empty()) throw DataError("empty input");
}

double logit(double p) {
    const double q = std::clamp(p, kProbClip, 1.0 - kProbClip);
    return std::log(q / (1.0 - q));
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double brier_score(std::span<const int> y, std::span<const double> p) {
    check_pair(y, p);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = static_cast<double>(y[i]) - p[i];
        acc += d * d;
    }
    return acc / static_cast<double>(y.size());
}

double ece(std::span<const int> y, std::span<const double> p, std::size_t bins) {
    check_pair(y, p);
    if (bins < 1) throw ConfigError("ece needs at least one bin");
    std::vector<double> sum_p(bins, 0.0), sum_y(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        auto b = static_cast<std::size_t>(p[i] * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;  // probability 1.0 joins the last bin
        sum_p[b] += p[i];
        sum_y[b] += static_cast<double>(y[i]);
        ++count[b];
    }
    double out = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double nb = static_cast<double>(count[b]);
        out += nb / static_cast<double>(y.size()) * std::fabs(sum_p[b] / nb - sum_y[b] / nb);
    }
    return out;
}

std::vector<CurvePoint> calibration_curve_quantile(std::span<const int> y, std::span<const double> p,
                                                   std::size_t bins) {
    check_pair(y, p);
    if (bins < 1) throw ConfigError("curve needs at least one bin");
    if (y.size() < bins) throw DataError("quantile curve needs n >= bins");
    std::vector<std::size_t> idx(y.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

    const std::size_t base = y.size() / bins;
    const std::size_t remainder = y.size() % bins;
    std::vector<CurvePoint> curve;
    curve.reserve(bins);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t take = base + (b < remainder ? 1 : 0);
        CurvePoint pt;
        pt.count = take;
        for (std::size_t k = 0; k < take; ++k, ++pos) {
            pt.mean_predicted += p[idx[pos]];
            pt.observed_rate += static_cast<double>(y[idx[pos]]);
        }
        pt.mean_predicted /= static_cast<double>(take);
        pt.observed_rate /= static_cast<double>(take);
        curve.push_back(pt);
    }
    return curve;
}

LogisticRecalibration fit_logistic_recalibration(std::span<const int> y, std::span<const double> p) {
    check_pair(y, p);
    const auto n = y.size();
    std::size_t pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == n) throw DataError("logistic recalibration needs both classes");

    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = logit(p[i]);

    auto log_likelihood = [&](double a, double b) {
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double zi = a + b * z[i];
            // log sigma(z) = -log(1 + exp(-z)), stable in both tails
            ll += y[i] == 1 ? -std::log1p(std::exp(-zi)) : -std::log1p(std::exp(zi));
        }
        return ll;
    };

    LogisticRecalibration fit;
    double a = 0.0, b = 1.0;
    double ll = log_likelihood(a, b);
    for (int iter = 0; iter < 100; ++iter) {
        double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mu = sigmoid(a + b * z[i]);
            const double r = static_cast<double>(y[i]) - mu;
            const double w = mu * (1.0 - mu);
            g0 += r;
            g1 += r * z[i];
            h00 += w;
            h01 += w * z[i];
            h11 += w * z[i] * z[i];
        }
        const double det = h00 * h11 - h01 * h01;
        if (std::fabs(det) < 1e-300) break;
        double da = (h11 * g0 - h01 * g1) / det;
        double db = (h00 * g1 - h01 * g0) / det;
        // step halving keeps the likelihood monotone on near-separated data
        double ll_new = log_likelihood(a + da, b + db);
        int halvings = 0;
        while (ll_new < ll && halvings < 40) {
            da *= 0.5;
            db *= 0.5;
            ll_new = log_likelihood(a + da, b + db);
            ++halvings;
        }
        a += da;
        b += db;
        ll = ll_new;
        if (std::fabs(a) > 50.0 || std::fabs(b) > 50.0) {
            fit.separation = true;
            break;
        }
        if (std::max(std::fabs(da), std::fabs(db)) < 1e-10) {
            fit.converged = true;
            break;
        }
    }
    // Perfect separation can also stall below the coefficient bound once
    // the likelihood saturates at machine precision.
    double max_residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_residual = std::max(max_residual, std::fabs(static_cast<double>(y[i]) - sigmoid(a + b * z[i])));
    }
    if (max_residual < 1e-9) fit.separation = true;
    fit.intercept = a;
    fit.slope = b;
    return fit;
}

double calibration_in_the_large(std::span<const int> y, std::span<const double> p) {
    check_pair(y, p);
    std::vector<double> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) z[i] = logit(p[i]);
    auto log_likelihood = [&](double a) {
        double ll = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double zi = a + z[i];
            ll += y[i] == 1 ? -std::log1p(std::exp(-zi)) : -std::log1p(std::exp(zi));
        }
        return ll;
    };
    double a = 0.0;
    double ll = log_likelihood(a);
    for (int iter = 0; iter < 100; ++iter) {
        double g = 0, h = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double mu = sigmoid(a + z[i]);
            g += static_cast<double>(y[i]) - mu;
            h += mu * (1.0 - mu);
        }
        if (h < 1e-300) break;
        double da = g / h;
        double ll_new = log_likelihood(a + da);
        int halvings = 0;
        while (ll_new < ll && halvings < 40) {
            da *= 0.5;
            ll_new = log_likelihood(a + da);
            ++halvings;
        }
        a += da;
        ll = ll_new;
        if (std::fabs(a) > 50.0) break;
        if (std::fabs(da) < 1e-10) break;
    }
    return a;
}

CalibrationReport calibration_report(std::span<const int> y, std::span<const double> p,
                                     std::size_t ece_bins, std::size_t curve_bins) {
    check_pair(y, p);
    CalibrationReport rep;
    rep.n = y.size();
    rep.prevalence =
        static_cast<double>(std::count(y.begin(), y.end(), 1)) / static_cast<double>(y.size());
    rep.mean_predicted = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
    rep.brier = brier_score(y, p);
    rep.ece = ece(y, p, ece_bins);
    auto fit = fit_logistic_recalibration(y, p);
    rep.intercept = fit.intercept;
    rep.slope = fit.slope;
    rep.slope_flagged = fit.separation || !fit.converged;
    rep.intercept_fixed_slope = calibration_in_the_large(y, p);
    if (y.size() >= curve_bins) rep.curve = calibration_curve_quantile(y, p, curve_bins);
    return rep;
}

IsotonicMap fit_isotonic(std::span<const double> scores, std::span<const double> targets) {
    if (scores.size() != targets.size()) throw DataError("score/target length mismatch");
    if (scores.size() < 2) throw DataError("isotonic fit needs at least two points");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Pre-average tied scores into single weighted points.
    std::vector<double> xs, ys, ws;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            sum += targets[idx[j]];
            ++j;
        }
        xs.push_back(scores[idx[i]]);
        ys.push_back(sum / static_cast<double>(j - i));
        ws.push_back(static_cast<double>(j - i));
        i = j;
    }

    if (xs.size() == 1) {
        // Single distinct score: constant map at the target mean.
        return IsotonicMap{{xs[0]}, {ys[0]}};
    }

    // PAVA over blocks: (value, weight, span of breakpoints).
    std::vector<double> val, wt;
    std::vector<std::size_t> span_end;  // exclusive index into xs
    for (std::size_t k = 0; k < xs.size(); ++k) {
        val.push_back(ys[k]);
        wt.push_back(ws[k]);
        span_end.push_back(k + 1);
        while (val.size() > 1 && val[val.size() - 2] > val.back()) {
            const double w = wt[wt.size() - 2] + wt.back();
            const double v = (val[val.size() - 2] * wt[wt.size() - 2] + val.back() * wt.back()) / w;
            val.pop_back();
            wt.pop_back();
            span_end.pop_back();
            val.back() = v;
            wt.back() = w;
            span_end.back() = k + 1;
        }
    }

    IsotonicMap map;
    map.breakpoints = xs;
    map.values.resize(xs.size());
    std::size_t start = 0;
    for (std::size_t b = 0; b < val.size(); ++b) {
        for (std::size_t k = start; k < span_end[b]; ++k) map.values[k] = val[b];
        start = span_end[b];
    }
    return map;
}

double apply_isotonic(const IsotonicMap& map, double score, IsotonicEval mode) {
    if (map.breakpoints.empty()) throw DataError("isotonic map is empty");
    const auto& xs = map.breakpoints;
    const auto& vs = map.values;
    if (score <= xs.front()) return vs.front();
    if (score >= xs.back()) return vs.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), score);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    if (xs[lo] == score) return vs[lo];
    if (mode == IsotonicEval::kStep) return vs[lo];
    const double t = (score - xs[lo]) / (xs[hi] - xs[lo]);
    return vs[lo] + t * (vs[hi] - vs[lo]);
}

std::vector<double> apply_isotonic(const IsotonicMap& map, std::span<const double> scores,
                                   IsotonicEval mode) {
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = apply_isotonic(map, scores[i], mode);
    return out;
}

IsotonicMap isotonic_block_centroids(const IsotonicMap& map, std::span<const double> scores) {
    if (map.breakpoints.empty()) throw DataError("isotonic map is empty");
    std::map<double, std::size_t> multiplicity;
    for (double s : scores) ++multiplicity[s];

    IsotonicMap out;
    std::size_t i = 0;
    while (i < map.breakpoints.size()) {
        std::size_t j = i;
        double weighted_score = 0.0;
        double weight = 0.0;
        while (j < map.breakpoints.size() && map.values[j] == map.values[i]) {
            auto it = multiplicity.find(map.breakpoints[j]);
            const double w = it == multiplicity.end() ? 1.0 : static_cast<double>(it->second);
            weighted_score += w * map.breakpoints[j];
            weight += w;
            ++j;
        }
        out.breakpoints.push_back(weighted_score / weight);
        out.values.push_back(map.values[i]);
        i = j;
    }
    return out;
}

}  // namespace survaudit
