#include <doctest.h>

#include <cmath>

#include "survaudit/discrimination.hpp"
#include "survaudit/pipeline.hpp"
#include "survaudit/robustness.hpp"
#include "survaudit/rng.hpp"

using namespace survaudit;

TEST_CASE("quantile interpolation") {
    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(quantile_sorted(v, 0.0) == 1.0);
    CHECK(quantile_sorted(v, 1.0) == 4.0);
    CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_sorted(v, 1.0 / 3.0) == doctest::Approx(2.0));
}

TEST_CASE("bootstrap is deterministic and thread-count independent") {
    SplitMix64 rng(91);
    const std::size_t n = 120;
    std::vector<int> y(n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.next_double() < 0.3 ? 1 : 0;
        p[i] = rng.next_double();
    }
    y[0] = 1;
    y[1] = 0;
    const auto a = bootstrap_ci(y, p, "auroc", named_metric("auroc"), 300, 5, 1);
    const auto b = bootstrap_ci(y, p, "auroc", named_metric("auroc"), 300, 5, 4);
    CHECK(a.replicates == b.replicates);
    CHECK(a.ci_low == b.ci_low);
    CHECK(a.ci_high == b.ci_high);
    CHECK(a.ci_low <= a.ci_high);
}

TEST_CASE("constant metric collapses the interval") {
    std::vector<int> y{1, 0, 1, 0, 1};
    std::vector<double> p{1.0, 0.0, 1.0, 0.0, 1.0};  // p == y, Brier identically 0
    const auto r = bootstrap_ci(y, p, "brier", named_metric("brier"), 200, 3);
    CHECK(r.point == 0.0);
    CHECK(r.ci_low == 0.0);
    CHECK(r.ci_high == 0.0);
    CHECK(r.skipped == 0);
}

TEST_CASE("single-class resamples are skipped, counted, and can flag") {
    // one positive among four: many resamples miss it
    std::vector<int> y{1, 0, 0, 0};
    std::vector<double> p{0.9, 0.2, 0.3, 0.1};
    const auto r = bootstrap_ci(y, p, "auroc", named_metric("auroc"), 500, 11);
    CHECK(r.skipped > 0);
    CHECK(r.replicates.size() + r.skipped == 500);
    // P(missing the positive) = 0.75^4 ~ 0.32 > 20%
    CHECK(r.flagged);
}

TEST_CASE("bootstrap covers a Bernoulli mean at roughly nominal rate") {
    // scaled-down version of the coverage study in the acceptance suite
    const double truth = 0.3;
    int covered = 0;
    const int reps = 40;
    for (int rep = 0; rep < reps; ++rep) {
        SplitMix64 rng(derive_seed(1234, static_cast<std::uint64_t>(rep)));
        const std::size_t n = 200;
        std::vector<int> y(n);
        std::vector<double> p(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) y[i] = rng.next_double() < truth ? 1 : 0;
        const auto r = bootstrap_ci(y, p, "mean", named_metric("mean"), 400,
                                    derive_seed(99, static_cast<std::uint64_t>(rep)));
        if (truth >= r.ci_low && truth <= r.ci_high) ++covered;
    }
    CHECK(covered >= 33);  // ~95% nominal, generous slack at 40 repetitions
}

namespace {

FeatureMatrix toy_features() {
    FeatureMatrix fm;
    fm.patient_ids = {"A", "B", "C"};
    fm.columns = {"c0", "e0", "e1", "e2", "e3", "e4", "n0", "n1"};
    fm.blocks = {FeatureBlock::kClinical, FeatureBlock::kExpr, FeatureBlock::kExpr,
                 FeatureBlock::kExpr,     FeatureBlock::kExpr, FeatureBlock::kExpr,
                 FeatureBlock::kCna,      FeatureBlock::kCna};
    fm.values.resize(3, 8);
    double v = 1.0;
    for (Eigen::Index i = 0; i < 3; ++i) {
        for (Eigen::Index j = 0; j < 8; ++j) fm.values(i, j) = v++;
    }
    return fm;
}

}  // namespace

TEST_CASE("masking rho=0 is a bitwise no-op") {
    const auto fm = toy_features();
    const auto masked = mask_modality(fm, {{FeatureBlock::kExpr}, 0.0, 123});
    CHECK((masked.values - fm.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("masking rho=1 zeroes the whole modality and nothing else") {
    const auto fm = toy_features();
    const auto masked = mask_modality(fm, {{FeatureBlock::kExpr}, 1.0, 123});
    for (Eigen::Index c : fm.block_columns(FeatureBlock::kExpr)) {
        CHECK(masked.values.col(c).cwiseAbs().maxCoeff() == 0.0);
    }
    for (Eigen::Index c : fm.block_columns(FeatureBlock::kClinical)) {
        CHECK((masked.values.col(c) - fm.values.col(c)).cwiseAbs().maxCoeff() == 0.0);
    }
    for (Eigen::Index c : fm.block_columns(FeatureBlock::kCna)) {
        CHECK((masked.values.col(c) - fm.values.col(c)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("masking selects exactly floor(rho m) columns per modality") {
    const auto fm = toy_features();
    const auto masked = mask_modality(fm, {{FeatureBlock::kExpr}, 0.2, 7});
    // floor(0.2 * 5) = 1 expr column zeroed
    std::size_t zeroed = 0;
    for (Eigen::Index c : fm.block_columns(FeatureBlock::kExpr)) {
        if (masked.values.col(c).cwiseAbs().maxCoeff() == 0.0) ++zeroed;
    }
    CHECK(zeroed == 1);

    const auto again = mask_modality(fm, {{FeatureBlock::kExpr}, 0.2, 7});
    CHECK((again.values - masked.values).cwiseAbs().maxCoeff() == 0.0);

    // dual-modality masking draws independently per block
    const auto dual = mask_modality(fm, {{FeatureBlock::kExpr, FeatureBlock::kCna}, 0.5, 7});
    std::size_t cna_zeroed = 0;
    for (Eigen::Index c : fm.block_columns(FeatureBlock::kCna)) {
        if (dual.values.col(c).cwiseAbs().maxCoeff() == 0.0) ++cna_zeroed;
    }
    CHECK(cna_zeroed == 1);  // floor(0.5 * 2)
}

TEST_CASE("ablation harness resolves blocks, validates, and keeps order") {
    const auto fm = toy_features();
    std::vector<std::string> seen;
    std::function<std::size_t(const AblationConfig&, const std::vector<Eigen::Index>&)> protocol =
        [&](const AblationConfig& cfg, const std::vector<Eigen::Index>& cols) {
            seen.push_back(cfg.name);
            return cols.size();
        };
    const auto rows = ablation_run<std::size_t>(standard_ablation_configs(), fm, protocol);
    CHECK(seen == std::vector<std::string>{"clinical", "clinical+expr", "clinical+cna", "all"});
    CHECK(rows == std::vector<std::size_t>{1, 6, 3, 8});

    FeatureMatrix no_cna = fm;
    no_cna.blocks.assign(no_cna.blocks.size(), FeatureBlock::kExpr);
    CHECK_THROWS_AS(ablation_run<std::size_t>(standard_ablation_configs(), no_cna, protocol),
                    DataError);
}
