#include "survaudit/gbcox.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "survaudit/rng.hpp"

namespace survaudit {

double RegressionTree::predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        node = X(row, nodes[node].feature) <= nodes[node].threshold ? nodes[node].left
                                                                    : nodes[node].right;
    }
    return nodes[node].leaf_value;
}

Eigen::VectorXd GbcoxModel::linear_predictor(const Eigen::MatrixXd& X) const {
    if (!columns.empty() && X.cols() != static_cast<Eigen::Index>(columns.size())) {
        throw DataError("feature count mismatch in GBCox prediction");
    }
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(X.rows());
    for (const auto& tree : trees) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            eta[i] += params.learning_rate * tree.predict_row(X, i);
        }
    }
    return eta;
}

namespace {

struct SplitCandidate {
    bool valid = false;
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

// Best split of `rows` on one feature; threshold ties resolve to the
// lowest value so the scan is reproducible under any thread count.
SplitCandidate best_split_for_feature(const Eigen::MatrixXd& X, const std::vector<double>& grad,
                                      const std::vector<double>& hess,
                                      const std::vector<std::size_t>& rows, int feature,
                                      const GbcoxParams& params) {
    std::vector<std::size_t> order(rows);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double xa = X(static_cast<Eigen::Index>(a), feature);
        const double xb = X(static_cast<Eigen::Index>(b), feature);
        if (xa != xb) return xa < xb;
        return a < b;
    });

    double g_total = 0.0, h_total = 0.0;
    for (std::size_t r : order) {
        g_total += grad[r];
        h_total += hess[r];
    }

    SplitCandidate best;
    best.feature = feature;
    double g_left = 0.0, h_left = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        g_left += grad[order[k]];
        h_left += hess[order[k]];
        const double v = X(static_cast<Eigen::Index>(order[k]), feature);
        const double v_next = X(static_cast<Eigen::Index>(order[k + 1]), feature);
        if (v == v_next) continue;
        const double h_right = h_total - h_left;
        if (h_left < params.min_child_weight || h_right < params.min_child_weight) continue;
        const double gain =
            tree_split_gain(g_left, h_left, g_total - g_left, h_right, params.lambda_tree, params.gamma);
        if (gain > 0.0 && (!best.valid || gain > best.gain)) {
            best.valid = true;
            best.gain = gain;
            best.threshold = v;
        }
    }
    return best;
}

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const std::vector<double>& grad;
    const std::vector<double>& hess;
    const GbcoxParams& params;
    int threads;
    RegressionTree tree;

    int build(std::vector<std::size_t> rows, int depth) {
        double g = 0.0, h = 0.0;
        for (std::size_t r : rows) {
            g += grad[r];
            h += hess[r];
        }
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        SplitCandidate best;
        if (depth < params.max_depth && rows.size() >= 2) {
            const int p = static_cast<int>(X.cols());
            std::vector<SplitCandidate> per_feature(static_cast<std::size_t>(p));
            parallel_for(static_cast<std::size_t>(p), threads, [&](std::size_t f) {
                per_feature[f] =
                    best_split_for_feature(X, grad, hess, rows, static_cast<int>(f), params);
            });
            for (const auto& cand : per_feature) {  // serial reduce, lowest index wins ties
                if (cand.valid && (!best.valid || cand.gain > best.gain)) best = cand;
            }
        }

        if (!best.valid) {
            // a leaf with no hessian mass takes no Newton step
            const double denom = h + params.lambda_tree;
            tree.nodes[node_id].leaf_value = h > 0.0 && denom > 0.0 ? -g / denom : 0.0;
            return node_id;
        }

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            if (X(static_cast<Eigen::Index>(r), best.feature) <= best.threshold) {
                left_rows.push_back(r);
            } else {
                right_rows.push_back(r);
            }
        }
        rows.clear();
        rows.shrink_to_fit();

        const int left_id = build(std::move(left_rows), depth + 1);
        const int right_id = build(std::move(right_rows), depth + 1);
        tree.nodes[node_id].feature = best.feature;
        tree.nodes[node_id].threshold = best.threshold;
        tree.nodes[node_id].left = left_id;
        tree.nodes[node_id].right = right_id;
        return node_id;
    }
};

}  // namespace

GbcoxModel fit_gbcox(const Eigen::MatrixXd& X, std::span<const double> times,
                     std::span<const int> events, const GbcoxParams& params, std::uint64_t seed,
                     int threads) {
    if (static_cast<std::size_t>(X.rows()) != times.size()) throw DataError("X/outcome size mismatch");
    if (params.rounds < 1) throw ConfigError("rounds must be >= 1");
    if (params.max_depth < 0) throw ConfigError("max_depth must be >= 0");
    if (params.learning_rate <= 0.0 || params.learning_rate > 1.0) {
        throw ConfigError("learning_rate must lie in (0,1]");
    }
    if (params.subsample <= 0.0 || params.subsample > 1.0) {
        throw ConfigError("subsample must lie in (0,1]");
    }
    if (params.min_child_weight < 0.0 || params.lambda_tree < 0.0 || params.gamma < 0.0) {
        throw ConfigError("tree regularization parameters must be >= 0");
    }

    const std::size_t n = times.size();
    const CoxLossState state = CoxLossState::build(times, events);

    GbcoxModel model;
    model.params = params;
    model.seed = seed;
    model.trees.reserve(static_cast<std::size_t>(params.rounds));

    std::vector<double> eta(n, 0.0), grad, hess;
    const std::size_t sample_size =
        std::max<std::size_t>(1, static_cast<std::size_t>(params.subsample * static_cast<double>(n)));

    for (int round = 0; round < params.rounds; ++round) {
        state.gradient_and_hessian(eta, grad, hess);

        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        if (sample_size < n) {
            SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(round)));
            deterministic_shuffle(rows, rng);
            rows.resize(sample_size);
            std::sort(rows.begin(), rows.end());
        }

        TreeBuilder builder{X, grad, hess, params, threads, {}};
        builder.build(std::move(rows), 0);
        model.trees.push_back(std::move(builder.tree));

        const auto& tree = model.trees.back();
        for (std::size_t i = 0; i < n; ++i) {
            eta[i] += params.learning_rate * tree.predict_row(X, static_cast<Eigen::Index>(i));
        }
        model.train_loss_trace.push_back(state.neg_log_partial_likelihood(eta));
    }

    std::size_t capped = 0;
    model.baseline = breslow_cumhaz(times, events, eta, &capped);
    if (capped > 0) {
        std::cerr << "warning: Breslow estimator capped exp(eta) for " << capped << " patients\n";
    }
    model.train_eta = std::move(eta);
    return model;
}

}  // namespace survaudit
