#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "survaudit/cohort.hpp"
#include "survaudit/rng.hpp"

using namespace survaudit;

namespace {

CsvTable clinical_table(const std::vector<std::vector<std::string>>& rows) {
    CsvTable t;
    t.header = {"patient_id", "time_months", "event"};
    t.rows = rows;
    return t;
}

std::vector<SurvivalRecord> random_cohort(std::size_t n, double event_rate, SplitMix64& rng) {
    std::vector<SurvivalRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        records.push_back({"P" + std::to_string(i), 120.0 * rng.next_double(),
                           rng.next_double() < event_rate ? 1 : 0});
    }
    return records;
}

}  // namespace

TEST_CASE("build_outcomes maps fields and counts exclusions") {
    auto t = clinical_table({{"A", "30", "1"}, {"B", "NA", "1"}, {"C", "12.5", "0"}});
    auto out = build_outcomes(t);
    REQUIRE(out.records.size() == 2);
    CHECK(out.records[0].patient_id == "A");
    CHECK(out.records[0].time_months == 30.0);
    CHECK(out.records[0].event == 1);
    CHECK(out.excluded_missing == 1);
}

TEST_CASE("build_outcomes rejects negative time and conflicting duplicates") {
    CHECK_THROWS_AS(build_outcomes(clinical_table({{"A", "-2", "1"}})), DataError);
    CHECK_THROWS_AS(build_outcomes(clinical_table({{"A", "30", "1"}, {"A", "31", "1"}})), DataError);
    CHECK_THROWS_AS(build_outcomes(clinical_table({{"A", "30", "2"}})), DataError);
}

TEST_CASE("exact duplicate rows collapse and are counted") {
    auto out = build_outcomes(clinical_table({{"A", "30", "1"}, {"A", "30", "1"}}));
    CHECK(out.records.size() == 1);
    CHECK(out.duplicates_collapsed == 1);
}

TEST_CASE("fixed horizon label variants") {
    CHECK(fixed_horizon_label({"a", 30, 1}).y60 == Horizon60::kPositive);
    CHECK(fixed_horizon_label({"a", 72, 0}).y60 == Horizon60::kNegative);
    CHECK(fixed_horizon_label({"a", 30, 0}).y60 == Horizon60::kIndeterminate);
    // boundary: reached the horizon event-free
    CHECK(fixed_horizon_label({"a", 60, 0}).y60 == Horizon60::kNegative);
    CHECK(fixed_horizon_label({"a", 60, 1}).y60 == Horizon60::kPositive);
    CHECK(fixed_horizon_label({"a", 72, 1}).y60 == Horizon60::kNegative);
}

TEST_CASE("every record gets exactly one label variant") {
    SplitMix64 rng(3);
    for (int i = 0; i < 500; ++i) {
        SurvivalRecord rec{"p", 130.0 * rng.next_double(), rng.next_double() < 0.4 ? 1 : 0};
        const auto label = fixed_horizon_label(rec).y60;
        int hits = 0;
        if (rec.event == 1 && rec.time_months <= 60) {
            ++hits;
            CHECK(label == Horizon60::kPositive);
        }
        if (rec.time_months > 60 || (rec.time_months == 60 && rec.event == 0)) {
            ++hits;
            CHECK(label == Horizon60::kNegative);
        }
        if (rec.event == 0 && rec.time_months < 60) {
            ++hits;
            CHECK(label == Horizon60::kIndeterminate);
        }
        CHECK(hits == 1);
    }
}

TEST_CASE("stratified split with exact largest-remainder counts") {
    std::vector<SurvivalRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back({"E" + std::to_string(i), 10, 1});
    for (int i = 0; i < 30; ++i) records.push_back({"C" + std::to_string(i), 10, 0});
    auto split = stratified_split(records, {0.6, 0.2, 0.2}, 17);

    std::map<std::string, Split> of;
    for (const auto& a : split) of[a.patient_id] = a.split;
    std::map<Split, std::pair<int, int>> counts;  // events, censored
    for (const auto& rec : records) {
        auto& c = counts[of.at(rec.patient_id)];
        rec.event ? ++c.first : ++c.second;
    }
    CHECK(counts[Split::kTrain] == std::pair<int, int>{6, 18});
    CHECK(counts[Split::kValidation] == std::pair<int, int>{2, 6});
    CHECK(counts[Split::kTest] == std::pair<int, int>{2, 6});
}

TEST_CASE("stratified split is deterministic and row-order invariant") {
    SplitMix64 rng(5);
    auto records = random_cohort(57, 0.3, rng);
    auto a = stratified_split(records, {0.6, 0.2, 0.2}, 99);
    auto b = stratified_split(records, {0.6, 0.2, 0.2}, 99);
    CHECK(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].patient_id == b[i].patient_id);
        CHECK(a[i].split == b[i].split);
    }
    std::reverse(records.begin(), records.end());
    auto c = stratified_split(records, {0.6, 0.2, 0.2}, 99);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].patient_id == c[i].patient_id);
        CHECK(a[i].split == c[i].split);
    }
}

TEST_CASE("stratified split rejects bad inputs") {
    SplitMix64 rng(6);
    auto records = random_cohort(40, 0.3, rng);
    CHECK_THROWS_AS(stratified_split(records, {0.5, 0.5, 0.2}, 1), ConfigError);
    std::vector<SurvivalRecord> all_censored;
    for (int i = 0; i < 10; ++i) all_censored.push_back({"P" + std::to_string(i), 10, 0});
    CHECK_THROWS_AS(stratified_split(all_censored, {0.6, 0.2, 0.2}, 1), DataError);
    // 3 patients cannot populate three splits with one event stratum of 1
    std::vector<SurvivalRecord> tiny{{"A", 1, 1}, {"B", 2, 0}};
    CHECK_THROWS_AS(stratified_split(tiny, {0.6, 0.2, 0.2}, 1), DataError);
}

TEST_CASE("splits partition the cohort and preserve prevalence") {
    SplitMix64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 30 + rng.next_below(120);
        auto records = random_cohort(n, 0.2 + 0.5 * rng.next_double(), rng);
        std::size_t events = 0;
        for (const auto& r : records) events += static_cast<std::size_t>(r.event);
        if (events == 0 || events == records.size()) continue;

        auto split = stratified_split(records, {0.6, 0.2, 0.2}, trial);
        std::set<std::string> seen;
        for (const auto& a : split) seen.insert(a.patient_id);
        CHECK(seen.size() == records.size());

        const double overall = static_cast<double>(events) / static_cast<double>(records.size());
        std::map<Split, std::pair<double, double>> stats;
        std::map<std::string, Split> of;
        for (const auto& a : split) of[a.patient_id] = a.split;
        for (const auto& r : records) {
            auto& s = stats[of.at(r.patient_id)];
            s.first += r.event;
            s.second += 1;
        }
        double min_size = 1e18;
        for (auto& [k, s] : stats) min_size = std::min(min_size, s.second);
        for (auto& [k, s] : stats) {
            CHECK(std::abs(s.first / s.second - overall) <= 1.0 / min_size + 1e-12);
        }
    }
}

TEST_CASE("manifest bookkeeping and determinism") {
    std::vector<SurvivalRecord> records;
    for (int i = 0; i < 10; ++i) records.push_back({"E" + std::to_string(i), 10, 1});
    for (int i = 0; i < 30; ++i) records.push_back({"C" + std::to_string(i), 100, 0});
    auto split = stratified_split(records, {0.6, 0.2, 0.2}, 3);
    ExclusionCounts excl;
    excl.early_censored = 1;
    auto manifest = build_manifest(records, split, excl, 3, {{"clinical", "fnv1a64:00"}});
    CHECK(manifest.cohort_size == 40);
    CHECK(manifest.splits.at("train").size == 24);
    CHECK(manifest.splits.at("validation").size == 8);
    CHECK(manifest.splits.at("test").size == 8);
    CHECK(manifest.exclusions.early_censored == 1);

    const std::string j1 = manifest_to_json(manifest, "h");
    const std::string j2 = manifest_to_json(build_manifest(records, split, excl, 3,
                                                           {{"clinical", "fnv1a64:00"}}),
                                            "h");
    CHECK(j1 == j2);

    split.pop_back();  // coverage gap
    CHECK_THROWS_AS(build_manifest(records, split, excl, 3, {}), DataError);
}
