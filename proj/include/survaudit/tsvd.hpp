#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "survaudit/common.hpp"

namespace survaudit {

struct TsvdProjection {
    Eigen::VectorXd center;           // p; zeros when fitted uncentered
    Eigen::MatrixXd basis;            // p x k, orthonormal columns
    Eigen::VectorXd singular_values;  // length k, non-increasing
};

/// Top-k singular triplets of the (optionally column-centered) matrix via
/// randomized subspace iteration: oversampling 10, 7 power iterations,
/// Gaussian test matrix drawn from SplitMix64(seed). Column signs are
/// normalized so each basis vector's largest-magnitude entry is positive.
TsvdProjection fit_tsvd(const Eigen::MatrixXd& train, int k, std::uint64_t seed, bool center = true);

/// Scores (X - center) * basis; hard error on column-count mismatch.
Eigen::MatrixXd apply_tsvd(const TsvdProjection& proj, const Eigen::MatrixXd& X);

}  // namespace survaudit
