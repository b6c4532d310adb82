#pragma once

#include <optional>
#include <span>
#include <vector>

#include "survaudit/common.hpp"

namespace survaudit {

struct RocCurve {
    std::vector<double> thresholds;  // decreasing
    std::vector<double> fpr;
    std::vector<double> tpr;
};

struct PrCurve {
    std::vector<double> thresholds;  // decreasing
    std::vector<double> recall;
    std::vector<double> precision;
    double average_precision = 0.0;
};

struct ConfusionAtThreshold {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> tpr;  // absent when the denominator is zero
    std::optional<double> fpr;
    std::optional<double> ppv;
    double predicted_positive_rate = 0.0;
};

/// Probability a positive outranks a negative, ties counted 1/2.
/// Rank-statistic implementation, O(n log n). Hard error on one class.
double auroc(std::span<const int> y, std::span<const double> scores);

RocCurve roc_curve(std::span<const int> y, std::span<const double> scores);

/// Step-wise average precision; tied scores processed as one block.
PrCurve pr_curve(std::span<const int> y, std::span<const double> scores);

double average_precision(std::span<const int> y, std::span<const double> scores);

/// Classification rule: score >= tau is positive.
ConfusionAtThreshold confusion_at_threshold(std::span<const int> y, std::span<const double> scores,
                                            double tau);

}  // namespace survaudit
