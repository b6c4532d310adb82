#include <doctest.h>

#include <cmath>

#include "survaudit/features.hpp"
#include "survaudit/rng.hpp"

using namespace survaudit;

namespace {

LongOmicsRow row(const char* sample, const char* gene, double v) {
    return {sample, gene, v};
}

LongOmicsRow missing_row(const char* sample, const char* gene) {
    return {sample, gene, std::nullopt};
}

}  // namespace

TEST_CASE("aggregation policies") {
    const std::map<std::string, std::string> mapping{{"S1", "P"}, {"S2", "P"}};
    std::vector<LongOmicsRow> rows{row("S1", "g", 2.0), row("S2", "g", 4.0)};

    auto mean = aggregate_samples(rows, mapping, AggregationPolicy::kMean);
    REQUIRE(mean.size() == 1);
    CHECK(mean[0].patient_id == "P");
    CHECK(mean[0].value == doctest::Approx(3.0));

    auto first = aggregate_samples(rows, mapping, AggregationPolicy::kFirst);
    CHECK(first[0].value == doctest::Approx(2.0));

    // swapping which sample carries which value flips the First result
    std::vector<LongOmicsRow> swapped{row("S1", "g", 4.0), row("S2", "g", 2.0)};
    CHECK(aggregate_samples(swapped, mapping, AggregationPolicy::kFirst)[0].value ==
          doctest::Approx(4.0));

    std::vector<LongOmicsRow> with_missing{missing_row("S1", "g"), row("S2", "g", 4.0)};
    CHECK(aggregate_samples(with_missing, mapping, AggregationPolicy::kMean)[0].value ==
          doctest::Approx(4.0));
    CHECK(aggregate_samples(with_missing, mapping, AggregationPolicy::kFirst)[0].value ==
          doctest::Approx(4.0));
}

TEST_CASE("duplicate rows aggregate identically under any input order") {
    const std::map<std::string, std::string> mapping{{"S1", "P"}, {"S2", "P"}};
    std::vector<LongOmicsRow> rows{row("S1", "g", 0.1), row("S1", "g", 0.3), row("S1", "g", 0.7),
                                   row("S2", "g", 5.0)};
    const auto base_mean = aggregate_samples(rows, mapping, AggregationPolicy::kMean)[0].value;
    const auto base_first = aggregate_samples(rows, mapping, AggregationPolicy::kFirst)[0].value;
    std::vector<LongOmicsRow> permuted{rows[2], rows[3], rows[0], rows[1]};
    CHECK(aggregate_samples(permuted, mapping, AggregationPolicy::kMean)[0].value == base_mean);
    CHECK(aggregate_samples(permuted, mapping, AggregationPolicy::kFirst)[0].value == base_first);
    CHECK(base_first == doctest::Approx((0.1 + 0.3 + 0.7) / 3.0));
    CHECK(base_mean == doctest::Approx((0.1 + 0.3 + 0.7 + 5.0) / 4.0));
}

TEST_CASE("unmapped samples are a hard error listing offenders") {
    const std::map<std::string, std::string> mapping{{"S1", "P"}};
    std::vector<LongOmicsRow> rows{row("S1", "g", 1.0), row("SX", "g", 2.0)};
    CHECK_THROWS_WITH_AS(aggregate_samples(rows, mapping, AggregationPolicy::kMean),
                         doctest::Contains("SX"), DataError);
}

TEST_CASE("filter rules on coverage and variance") {
    std::vector<PatientOmicsRow> rows;
    std::vector<std::string> train;
    for (int i = 0; i < 10; ++i) {
        const std::string id = "P" + std::to_string(i);
        train.push_back(id);
        rows.push_back({id, "constant", 5.0});
        if (i < 7) rows.push_back({id, "sparse", static_cast<double>(i)});
        rows.push_back({id, "varying", static_cast<double>(i % 4)});
    }
    FilterConfig cfg;
    cfg.tau_cov = 0.8;
    cfg.tau_var = 0.01;
    const auto retained = filter_features(rows, cfg, train);
    // constant: zero variance; sparse: coverage 0.7 < 0.8; varying survives
    CHECK(retained == std::vector<std::string>{"varying"});
}

TEST_CASE("variance uses the n-1 estimator") {
    std::vector<PatientOmicsRow> rows{{"A", "g", 0.0}, {"B", "g", 0.0}, {"C", "g", 3.0}, {"D", "g", 3.0}};
    std::vector<std::string> train{"A", "B", "C", "D"};
    FilterConfig cfg;
    cfg.tau_cov = 1.0;
    cfg.tau_var = 2.0;
    CHECK(filter_features(rows, cfg, train) == std::vector<std::string>{"g"});
    // sample variance is 3, population variance would be 2.25
    cfg.tau_var = 2.8;
    CHECK(filter_features(rows, cfg, train) == std::vector<std::string>{"g"});
    cfg.tau_var = 3.01;
    CHECK_THROWS_AS(filter_features(rows, cfg, train), DataError);
}

TEST_CASE("raising thresholds never adds features") {
    SplitMix64 rng(71);
    std::vector<PatientOmicsRow> rows;
    std::vector<std::string> train;
    for (int i = 0; i < 20; ++i) {
        const std::string id = "P" + std::to_string(i);
        train.push_back(id);
        for (int g = 0; g < 15; ++g) {
            if (rng.next_double() < 0.75) {
                rows.push_back({id, "g" + std::to_string(g), rng.next_gaussian() * (g + 1) * 0.1});
            }
        }
    }
    auto retained_at = [&](double cov, double var) {
        FilterConfig cfg;
        cfg.tau_cov = cov;
        cfg.tau_var = var;
        try {
            return filter_features(rows, cfg, train);
        } catch (const DataError&) {
            return std::vector<std::string>{};
        }
    };
    for (double cov : {0.0, 0.3, 0.6, 0.9}) {
        for (double var : {0.0, 0.05, 0.2, 1.0}) {
            const auto base = retained_at(cov, var);
            for (const auto& name : retained_at(cov + 0.05, var)) {
                CHECK(std::find(base.begin(), base.end(), name) != base.end());
            }
            for (const auto& name : retained_at(cov, var + 0.05)) {
                CHECK(std::find(base.begin(), base.end(), name) != base.end());
            }
        }
    }
}

TEST_CASE("top-k keeps the highest variance survivors with lexicographic ties") {
    std::vector<PatientOmicsRow> rows;
    std::vector<std::string> train{"A", "B"};
    for (const auto& [gene, lo, hi] : std::vector<std::tuple<std::string, double, double>>{
             {"big", 0.0, 10.0}, {"tie_a", 0.0, 1.0}, {"tie_b", 0.0, 1.0}, {"small", 0.0, 0.1}}) {
        rows.push_back({"A", gene, lo});
        rows.push_back({"B", gene, hi});
    }
    FilterConfig cfg;
    cfg.top_k = 2;
    CHECK(filter_features(rows, cfg, train) == std::vector<std::string>{"big", "tie_a"});
}

TEST_CASE("pivot produces a dense matrix with nan for absent pairs") {
    std::vector<PatientOmicsRow> rows{{"A", "g1", 1.0}, {"A", "g2", 2.0}, {"B", "g1", 3.0}};
    const auto m = pivot_long_to_wide(rows, {"A", "B"}, {"g1", "g2"});
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 2.0);
    CHECK(m(1, 0) == 3.0);
    CHECK(std::isnan(m(1, 1)));
}

TEST_CASE("impute and standardize with train statistics only") {
    // train values {1,3}: impute mean 2, sample sd sqrt(2)
    Eigen::MatrixXd m(3, 1);
    m << 1.0, 3.0, std::numeric_limits<double>::quiet_NaN();
    const std::vector<bool> is_train{true, true, false};
    const auto stats = fit_column_stats(m, is_train, {"g"});
    CHECK(stats.impute_mean[0] == doctest::Approx(2.0));
    CHECK(stats.sd[0] == doctest::Approx(std::sqrt(2.0)));
    CHECK(!stats.constant[0]);
    apply_column_stats(m, stats);
    CHECK(m(2, 0) == doctest::Approx(0.0));  // imputed test cell lands on the mean

    // training-constant column: centered, not scaled, flagged
    Eigen::MatrixXd c(3, 1);
    c << 5.0, 5.0, 9.0;
    const auto cstats = fit_column_stats(c, is_train, {"g"});
    CHECK(cstats.constant[0]);
    CHECK(cstats.sd[0] == 1.0);
    Eigen::MatrixXd c2 = c;
    apply_column_stats(c2, cstats);
    CHECK(c2(0, 0) == 0.0);
    CHECK(c2(1, 0) == 0.0);
    CHECK(c2(2, 0) == doctest::Approx(4.0));  // out-of-range value passes through unclipped

    Eigen::MatrixXd all_missing(2, 1);
    all_missing << std::numeric_limits<double>::quiet_NaN(), 1.0;
    CHECK_THROWS_AS(fit_column_stats(all_missing, {true, false}, {"g"}), DataError);
}

TEST_CASE("clinical encoder one-hot with dropped reference") {
    CsvTable clinical;
    clinical.header = {"patient_id", "time_months", "event", "er_status", "age"};
    clinical.rows = {{"A", "10", "1", "ER+", "50"},
                     {"B", "20", "0", "ER-", "60"},
                     {"C", "30", "0", "ER+", "NA"},
                     {"D", "40", "1", "NA", "70"}};
    const std::vector<std::string> ids{"A", "B", "C", "D"};
    const std::set<std::string> train{"A", "B", "C", "D"};
    const auto enc = fit_clinical_encoder(clinical, {"er_status", "age"}, ids, train);

    // levels {ER+, ER-, unknown} sorted -> ER+ dropped as reference
    std::vector<std::string> names;
    for (const auto& c : enc.columns) names.push_back(c.name);
    CHECK(names == std::vector<std::string>{"age", "er_status=ER-", "er_status=unknown"});

    const auto fm = apply_clinical_encoder(enc, clinical, ids);
    CHECK(fm.columns == names);
    CHECK(fm.blocks[0] == FeatureBlock::kClinical);
    // age for C was missing: imputed to the train mean, standardized to 0
    CHECK(fm.values(2, 0) == doctest::Approx(0.0));
}

TEST_CASE("two-level categorical yields a single indicator") {
    CsvTable clinical;
    clinical.header = {"patient_id", "time_months", "event", "er_status"};
    clinical.rows = {{"A", "1", "1", "ER+"}, {"B", "2", "0", "ER-"}};
    const auto enc = fit_clinical_encoder(clinical, {"er_status"}, {"A", "B"}, {"A", "B"});
    REQUIRE(enc.columns.size() == 1);
    CHECK(enc.columns[0].name == "er_status=ER-");
}

TEST_CASE("assemble concatenates blocks and checks patient sets") {
    auto make_block = [](FeatureBlock b, const std::vector<std::string>& ids, int cols,
                         const char* prefix) {
        FeatureMatrix fm;
        fm.patient_ids = ids;
        for (int c = 0; c < cols; ++c) fm.columns.push_back(prefix + std::to_string(c));
        fm.blocks.assign(fm.columns.size(), b);
        fm.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ids.size()), cols);
        return fm;
    };
    const std::vector<std::string> ids{"A", "B", "C"};
    const auto clinical = make_block(FeatureBlock::kClinical, ids, 3, "c");
    const auto expr = make_block(FeatureBlock::kExpr, ids, 10, "e");
    const auto cna = make_block(FeatureBlock::kCna, ids, 10, "n");
    const auto fm = assemble_feature_matrix(clinical, expr, cna);
    CHECK(fm.columns.size() == 23);
    CHECK(fm.block_columns(FeatureBlock::kClinical).size() == 3);
    CHECK(fm.block_columns(FeatureBlock::kExpr).size() == 10);
    CHECK(fm.block_columns(FeatureBlock::kCna).size() == 10);

    const auto bad = make_block(FeatureBlock::kCna, {"A", "B", "X"}, 2, "n");
    CHECK_THROWS_WITH_AS(assemble_feature_matrix(clinical, expr, bad), doctest::Contains("X"),
                         DataError);
}

TEST_CASE("omics block fit and apply are row-order invariant") {
    SplitMix64 rng(72);
    std::vector<LongOmicsRow> rows;
    const std::map<std::string, std::string> mapping{
        {"S1", "P1"}, {"S2", "P2"}, {"S3", "P3"}, {"S4", "P4"}};
    for (int g = 0; g < 6; ++g) {
        for (int s = 1; s <= 4; ++s) {
            rows.push_back(
                {"S" + std::to_string(s), "g" + std::to_string(g), rng.next_gaussian()});
        }
    }
    const std::vector<std::string> ids{"P1", "P2", "P3", "P4"};
    const std::set<std::string> train{"P1", "P2", "P3"};
    FilterConfig cfg;

    auto fit_from = [&](const std::vector<LongOmicsRow>& input) {
        const auto agg = aggregate_samples(input, mapping, AggregationPolicy::kMean);
        const auto state = fit_omics_block(agg, ids, train, cfg, 2, 9, FeatureBlock::kExpr);
        return apply_omics_block(state, agg, ids);
    };
    const auto a = fit_from(rows);
    std::vector<LongOmicsRow> shuffled = rows;
    SplitMix64 shuffle_rng(1);
    deterministic_shuffle(shuffled, shuffle_rng);
    const auto b = fit_from(shuffled);
    CHECK(a.columns == b.columns);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}
