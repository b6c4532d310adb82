#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

#include "oracles.hpp"
#include "survaudit/rng.hpp"
#include "survaudit/tsvd.hpp"

using namespace survaudit;

namespace {

Eigen::MatrixXd random_matrix(SplitMix64& rng, Eigen::Index n, Eigen::Index p) {
    Eigen::MatrixXd m(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.next_gaussian();
    }
    return m;
}

}  // namespace

TEST_CASE("diagonal matrix has its analytic top singular triplet") {
    Eigen::MatrixXd m(2, 2);
    m << 3.0, 0.0, 0.0, 1.0;
    const auto proj = fit_tsvd(m, 1, 7, /*center=*/false);
    CHECK(proj.singular_values[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(std::abs(proj.basis(0, 0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(proj.basis(1, 0)) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("rank-2 matrix reconstructs exactly with k=2") {
    SplitMix64 rng(61);
    const Eigen::MatrixXd a = random_matrix(rng, 12, 2);
    const Eigen::MatrixXd b = random_matrix(rng, 2, 9);
    const Eigen::MatrixXd m = a * b;  // rank 2
    const auto proj = fit_tsvd(m, 2, 3, /*center=*/false);
    const Eigen::MatrixXd scores = apply_tsvd(proj, m);
    const Eigen::MatrixXd recon = scores * proj.basis.transpose();
    CHECK((recon - m).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("centered rank-2 matrix reconstructs exactly when zero mean") {
    SplitMix64 rng(62);
    Eigen::MatrixXd a = random_matrix(rng, 14, 2);
    const Eigen::MatrixXd b = random_matrix(rng, 2, 7);
    Eigen::MatrixXd m = a * b;
    m.rowwise() -= m.colwise().mean();  // centering preserves rank <= 2
    const auto proj = fit_tsvd(m, 2, 3, /*center=*/true);
    const Eigen::MatrixXd scores = apply_tsvd(proj, m);
    const Eigen::MatrixXd recon =
        (scores * proj.basis.transpose()).rowwise() + proj.center.transpose();
    CHECK((recon - m).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("identical seeds give identical projections") {
    SplitMix64 rng(63);
    const Eigen::MatrixXd m = random_matrix(rng, 20, 15);
    const auto a = fit_tsvd(m, 5, 42);
    const auto b = fit_tsvd(m, 5, 42);
    CHECK((a.basis - b.basis).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.singular_values - b.singular_values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("basis is orthonormal and singular values sorted") {
    SplitMix64 rng(64);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd m = random_matrix(rng, 25, 12);
        const auto proj = fit_tsvd(m, 6, trial);
        const Eigen::MatrixXd gram = proj.basis.transpose() * proj.basis;
        CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <= 1e-8);
        for (Eigen::Index j = 1; j < proj.singular_values.size(); ++j) {
            CHECK(proj.singular_values[j] <= proj.singular_values[j - 1]);
            CHECK(proj.singular_values[j] >= 0.0);
        }
    }
}

TEST_CASE("singular values match the dense oracle on random matrices") {
    SplitMix64 rng(65);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd m = random_matrix(rng, 20, 15);
        const int k = 5;
        const auto proj = fit_tsvd(m, k, trial * 3 + 1);
        const Eigen::VectorXd dense = oracles::centered_singular_values(m);
        for (int j = 0; j < k; ++j) {
            CHECK(std::abs(proj.singular_values[j] - dense[j]) <= 1e-6 * dense[j]);
        }
    }
}

TEST_CASE("rank-k reconstruction error matches the dense svd oracle") {
    SplitMix64 rng(66);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd m = random_matrix(rng, 20, 15);
        const Eigen::MatrixXd centered = m.rowwise() - m.colwise().mean();
        const int k = 4;
        const auto proj = fit_tsvd(m, k, trial);
        const Eigen::MatrixXd approx = apply_tsvd(proj, m) * proj.basis.transpose();
        const double err = (centered - approx).norm();

        Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::MatrixXd best = svd.matrixU().leftCols(k) *
                                     svd.singularValues().head(k).asDiagonal() *
                                     svd.matrixV().leftCols(k).transpose();
        const double best_err = (centered - best).norm();
        CHECK(err <= best_err * (1.0 + 1e-6) + 1e-12);
    }
}

TEST_CASE("train scores have the svd covariance structure") {
    SplitMix64 rng(67);
    const Eigen::MatrixXd m = random_matrix(rng, 30, 10);
    const int k = 4;
    const auto proj = fit_tsvd(m, k, 5);
    const Eigen::MatrixXd scores = apply_tsvd(proj, m);
    const Eigen::MatrixXd cov =
        scores.transpose() * scores / static_cast<double>(m.rows() - 1);
    for (int j = 0; j < k; ++j) {
        const double expected =
            proj.singular_values[j] * proj.singular_values[j] / static_cast<double>(m.rows() - 1);
        CHECK(std::abs(cov(j, j) - expected) <= 1e-6 * std::max(1.0, expected));
    }
}

TEST_CASE("a centered zero row maps to zero scores") {
    SplitMix64 rng(68);
    Eigen::MatrixXd m = random_matrix(rng, 10, 6);
    const auto proj = fit_tsvd(m, 3, 1);
    Eigen::MatrixXd probe = proj.center.transpose();  // one row equal to the center
    const Eigen::MatrixXd scores = apply_tsvd(proj, probe);
    CHECK(scores.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("full-rank projection preserves pairwise distances") {
    SplitMix64 rng(69);
    const Eigen::MatrixXd m = random_matrix(rng, 20, 6);
    const auto proj = fit_tsvd(m, 6, 2);
    const Eigen::MatrixXd scores = apply_tsvd(proj, m);
    for (int a = 0; a < 10; ++a) {
        for (int b = a + 1; b < 10; ++b) {
            const double original = (m.row(a) - m.row(b)).norm();
            const double reduced = (scores.row(a) - scores.row(b)).norm();
            CHECK(std::abs(original - reduced) <= 1e-8 * std::max(1.0, original));
        }
    }
}

TEST_CASE("rank bound and dimension mismatch are hard errors") {
    SplitMix64 rng(70);
    const Eigen::MatrixXd m = random_matrix(rng, 5, 4);
    CHECK_THROWS_AS(fit_tsvd(m, 5, 1), DataError);
    const auto proj = fit_tsvd(m, 2, 1);
    Eigen::MatrixXd wrong(3, 9);
    CHECK_THROWS_AS(apply_tsvd(proj, wrong), DataError);
}
