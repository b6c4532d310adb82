#include "survaudit/discrimination.hpp"

#include <algorithm>
#include <numeric>

namespace survaudit {

namespace {

void check_inputs(std::span<const int> y, std::span<const double> scores, bool need_both_classes,
                  bool need_positive) {
    if (y.size() != scores.size()) throw DataError("label/score length mismatch");
    if (y.empty()) throw DataError("empty input");
    std::size_t pos = 0;
    for (int v : y) {
        if (v != 0 && v != 1) throw DataError("labels must be 0/1");
        pos += static_cast<std::size_t>(v);
    }
    if (need_positive && pos == 0) throw DataError("no positive labels");
    if (need_both_classes && (pos == 0 || pos == y.size())) {
        throw DataError("metric undefined on single-class input");
    }
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace

double auroc(std::span<const int> y, std::span<const double> scores) {
    check_inputs(y, scores, /*need_both_classes=*/true, /*need_positive=*/false);
    const std::size_t n = y.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups, then the Mann-Whitney identity.
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            if (y[idx[k]] == 1) {
                rank_sum_pos += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    return (rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1)) /
           (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

RocCurve roc_curve(std::span<const int> y, std::span<const double> scores) {
    check_inputs(y, scores, true, false);
    auto idx = order_by_score_desc(scores);
    const double n_pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    const double n_neg = static_cast<double>(y.size()) - n_pos;

    RocCurve curve;
    curve.thresholds.push_back(scores[idx[0]] + 1.0);  // sentinel above every score
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double s = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == s) {
            if (y[idx[i]] == 1) ++tp;
            else ++fp;
            ++i;
        }
        curve.thresholds.push_back(s);
        curve.fpr.push_back(static_cast<double>(fp) / n_neg);
        curve.tpr.push_back(static_cast<double>(tp) / n_pos);
    }
    return curve;
}

PrCurve pr_curve(std::span<const int> y, std::span<const double> scores) {
    check_inputs(y, scores, false, /*need_positive=*/true);
    auto idx = order_by_score_desc(scores);
    const double n_pos = static_cast<double>(std::count(y.begin(), y.end(), 1));

    PrCurve curve;
    std::size_t tp = 0, seen = 0;
    double ap = 0.0;
    double prev_recall = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double s = scores[idx[i]];
        while (i < idx.size() && scores[idx[i]] == s) {
            tp += static_cast<std::size_t>(y[idx[i]] == 1);
            ++seen;
            ++i;
        }
        const double recall = static_cast<double>(tp) / n_pos;
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        curve.thresholds.push_back(s);
        curve.recall.push_back(recall);
        curve.precision.push_back(precision);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    curve.average_precision = ap;
    return curve;
}

double average_precision(std::span<const int> y, std::span<const double> scores) {
    return pr_curve(y, scores).average_precision;
}

ConfusionAtThreshold confusion_at_threshold(std::span<const int> y, std::span<const double> scores,
                                            double tau) {
    if (y.size() != scores.size() || y.empty()) throw DataError("bad confusion input");
    ConfusionAtThreshold c;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const bool pred = scores[i] >= tau;
        if (y[i] == 1) {
            pred ? ++c.tp : ++c.fn;
        } else {
            pred ? ++c.fp : ++c.tn;
        }
    }
    const std::size_t pos = c.tp + c.fn, neg = c.fp + c.tn, pred_pos = c.tp + c.fp;
    if (pos > 0) c.tpr = static_cast<double>(c.tp) / static_cast<double>(pos);
    if (neg > 0) c.fpr = static_cast<double>(c.fp) / static_cast<double>(neg);
    if (pred_pos > 0) c.ppv = static_cast<double>(c.tp) / static_cast<double>(pred_pos);
    c.predicted_positive_rate = static_cast<double>(pred_pos) / static_cast<double>(y.size());
    return c;
}

}  // namespace survaudit
