#include "survaudit/tsvd.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include "survaudit/rng.hpp"

namespace survaudit {

namespace {

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& m) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), std::min(m.rows(), m.cols()));
}

}  // namespace

TsvdProjection fit_tsvd(const Eigen::MatrixXd& train, int k, std::uint64_t seed, bool center) {
    const Eigen::Index n = train.rows();
    const Eigen::Index p = train.cols();
    if (k < 1) throw ConfigError("tsvd k must be >= 1");
    if (k > std::min(n, p)) {
        throw DataError("tsvd k=" + std::to_string(k) + " exceeds rank bound " +
                        std::to_string(std::min(n, p)));
    }

    TsvdProjection proj;
    proj.center = center ? Eigen::VectorXd(train.colwise().mean()) : Eigen::VectorXd::Zero(p);
    const Eigen::MatrixXd A = train.rowwise() - proj.center.transpose();

    constexpr int kOversample = 10;
    constexpr int kPowerIterations = 7;
    const Eigen::Index l = std::min<Eigen::Index>(k + kOversample, std::min(n, p));

    SplitMix64 rng(derive_seed(seed, "tsvd"));
    Eigen::MatrixXd omega(p, l);
    for (Eigen::Index j = 0; j < l; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) omega(i, j) = rng.next_gaussian();
    }

    Eigen::MatrixXd Q = thin_q(A * omega);
    for (int it = 0; it < kPowerIterations; ++it) {
        const Eigen::MatrixXd Z = thin_q(A.transpose() * Q);
        Q = thin_q(A * Z);
    }

    const Eigen::MatrixXd B = Q.transpose() * A;  // l x p
    Eigen::BDCSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);

    proj.basis = svd.matrixV().leftCols(k);
    proj.singular_values = svd.singularValues().head(k);

    // Deterministic sign convention: largest-|entry| positive.
    for (Eigen::Index j = 0; j < proj.basis.cols(); ++j) {
        Eigen::Index arg = 0;
        proj.basis.col(j).cwiseAbs().maxCoeff(&arg);
        if (proj.basis(arg, j) < 0.0) proj.basis.col(j) = -proj.basis.col(j);
    }
    return proj;
}

Eigen::MatrixXd apply_tsvd(const TsvdProjection& proj, const Eigen::MatrixXd& X) {
    if (X.cols() != proj.basis.rows()) {
        throw DataError("tsvd projection expects " + std::to_string(proj.basis.rows()) +
                        " columns, got " + std::to_string(X.cols()));
    }
    return (X.rowwise() - proj.center.transpose()) * proj.basis;
}

}  // namespace survaudit
