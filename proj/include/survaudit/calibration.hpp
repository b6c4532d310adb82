#pragma once

#include <span>
#include <vector>

#include "survaudit/common.hpp"

namespace survaudit {

struct CurvePoint {
    double mean_predicted = 0.0;
    double observed_rate = 0.0;
    std::size_t count = 0;
};

struct LogisticRecalibration {
    double intercept = 0.0;
    double slope = 1.0;
    bool converged = false;
    bool separation = false;  // |intercept| or |slope| ran past 50
};

struct CalibrationReport {
    double brier = 0.0;
    double ece = 0.0;
    double intercept = 0.0;
    double slope = 1.0;
    double intercept_fixed_slope = 0.0;  // calibration-in-the-large companion fit
    bool slope_flagged = false;
    std::vector<CurvePoint> curve;
    std::size_t n = 0;
    double prevalence = 0.0;
    double mean_predicted = 0.0;
};

/// Mean squared error of probabilistic forecasts.
double brier_score(std::span<const int> y, std::span<const double> p);

/// Expected calibration error over equal-width bins of [0,1];
/// p = 1.0 lands in the last bin, empty bins contribute zero.
double ece(std::span<const int> y, std::span<const double> p, std::size_t bins = 10);

/// Quantile-binned reliability curve: near-equal bin counts with the
/// remainder spread over the first bins.
std::vector<CurvePoint> calibration_curve_quantile(std::span<const int> y, std::span<const double> p,
                                                   std::size_t bins = 10);

/// ML fit of logit P(y=1) = a + b * logit(p) by Newton-Raphson.
LogisticRecalibration fit_logistic_recalibration(std::span<const int> y, std::span<const double> p);

/// Intercept-only fit with the slope pinned at 1.
double calibration_in_the_large(std::span<const int> y, std::span<const double> p);

CalibrationReport calibration_report(std::span<const int> y, std::span<const double> p,
                                     std::size_t ece_bins = 10, std::size_t curve_bins = 10);

struct IsotonicMap {
    std::vector<double> breakpoints;  // strictly increasing scores
    std::vector<double> values;       // non-decreasing fitted probabilities
};

enum class IsotonicEval { kInterpolate, kStep };

/// Pool-adjacent-violators over score-sorted targets, tie groups pre-averaged.
IsotonicMap fit_isotonic(std::span<const double> scores, std::span<const double> targets);

double apply_isotonic(const IsotonicMap& map, double score,
                      IsotonicEval mode = IsotonicEval::kInterpolate);
std::vector<double> apply_isotonic(const IsotonicMap& map, std::span<const double> scores,
                                   IsotonicEval mode = IsotonicEval::kInterpolate);

/// Compresses a fitted map to one breakpoint per constant block, placed at
/// the block's multiplicity-weighted mean score. Interpolated evaluation of
/// the result is strictly increasing between block centers (centered
/// isotonic regression), which avoids the flat-step artifacts of the raw
/// PAVA solution when used as a probability calibrator. `scores` must be
/// the scores the map was fitted on.
IsotonicMap isotonic_block_centroids(const IsotonicMap& map, std::span<const double> scores);

}  // namespace survaudit
