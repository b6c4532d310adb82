#include "survaudit/cohort.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <json.hpp>

#include "survaudit/rng.hpp"

namespace survaudit {

const char* split_name(Split s) {
    switch (s) {
        case Split::kTrain: return "train";
        case Split::kValidation: return "validation";
        case Split::kTest: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::kTrain;
    if (name == "validation") return Split::kValidation;
    if (name == "test") return Split::kTest;
    throw DataError("unknown split label '" + name + "'");
}

BuildOutcomesResult build_outcomes(const CsvTable& clinical) {
    const std::size_t id_col = clinical.column_index("patient_id");
    const std::size_t time_col = clinical.column_index("time_months");
    const std::size_t event_col = clinical.column_index("event");

    BuildOutcomesResult out;
    std::map<std::string, SurvivalRecord> seen;
    for (const auto& row : clinical.rows) {
        const std::string& id = row[id_col];
        if (id.empty()) throw DataError("empty patient_id");
        const std::string& time_tok = row[time_col];
        const std::string& event_tok = row[event_col];
        if (is_missing_token(time_tok) || is_missing_token(event_tok)) {
            ++out.excluded_missing;
            continue;
        }
        double time = parse_double(time_tok, "time_months of " + id);
        if (!std::isfinite(time)) throw DataError("non-finite follow-up for patient " + id);
        if (time < 0.0) throw DataError("negative follow-up for patient " + id);
        double event_val = parse_double(event_tok, "event of " + id);
        if (event_val != 0.0 && event_val != 1.0) {
            throw DataError("event must be 0 or 1 for patient " + id + ", got " + event_tok);
        }
        SurvivalRecord rec{id, time, static_cast<int>(event_val)};
        auto [it, inserted] = seen.emplace(id, rec);
        if (!inserted) {
            if (it->second.time_months == rec.time_months && it->second.event == rec.event) {
                ++out.duplicates_collapsed;
            } else {
                throw DataError("conflicting duplicate outcomes for patient " + id);
            }
        }
    }
    out.records.reserve(seen.size());
    for (auto& [id, rec] : seen) out.records.push_back(std::move(rec));
    return out;
}

FixedHorizonLabel fixed_horizon_label(const SurvivalRecord& rec, double horizon_months) {
    FixedHorizonLabel label{rec.patient_id, Horizon60::kIndeterminate};
    if (rec.event == 1 && rec.time_months <= horizon_months) {
        label.y60 = Horizon60::kPositive;
    } else if (rec.time_months >= horizon_months) {
        // Censored exactly at the horizon counts as event-free survival.
        label.y60 = Horizon60::kNegative;
    }
    return label;
}

namespace {

// Largest-remainder apportionment of `total` over the three fractions,
// ties broken in split order train < validation < test.
std::array<std::size_t, 3> apportion(std::size_t total, const SplitFractions& f) {
    const double fr[3] = {f.train, f.validation, f.test};
    std::array<std::size_t, 3> counts{};
    double rem[3];
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double exact = fr[i] * static_cast<double>(total);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        rem[i] = exact - std::floor(exact);
        assigned += counts[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) counts[order[k % 3]] += 1;
    return counts;
}

}  // namespace

std::vector<SplitAssignment> stratified_split(const std::vector<SurvivalRecord>& records,
                                              const SplitFractions& fractions, std::uint64_t seed) {
    const double sum = fractions.train + fractions.validation + fractions.test;
    if (fractions.train <= 0 || fractions.validation <= 0 || fractions.test <= 0 ||
        std::fabs(sum - 1.0) > 1e-9) {
        throw ConfigError("fractions must be positive and sum to 1");
    }
    std::vector<std::string> strata[2];
    for (const auto& rec : records) {
        if (rec.event != 0 && rec.event != 1) throw DataError("invalid event for " + rec.patient_id);
        strata[rec.event].push_back(rec.patient_id);
    }
    if (strata[0].empty() || strata[1].empty()) {
        throw DataError("stratified split needs at least one event and one censored record");
    }

    std::vector<SplitAssignment> out;
    out.reserve(records.size());
    std::size_t split_sizes[3] = {0, 0, 0};
    for (int stratum = 0; stratum < 2; ++stratum) {
        auto& ids = strata[stratum];
        std::sort(ids.begin(), ids.end());
        SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(stratum)));
        deterministic_shuffle(ids, rng);
        auto counts = apportion(ids.size(), fractions);
        std::size_t pos = 0;
        for (int s = 0; s < 3; ++s) {
            for (std::size_t k = 0; k < counts[s]; ++k, ++pos) {
                out.push_back({ids[pos], static_cast<Split>(s)});
                ++split_sizes[s];
            }
        }
    }
    for (int s = 0; s < 3; ++s) {
        if (split_sizes[s] == 0) {
            throw DataError(std::string("split '") + split_name(static_cast<Split>(s)) +
                            "' received zero patients");
        }
    }
    std::sort(out.begin(), out.end(),
              [](const SplitAssignment& a, const SplitAssignment& b) { return a.patient_id < b.patient_id; });
    return out;
}

CohortManifest build_manifest(const std::vector<SurvivalRecord>& records,
                              const std::vector<SplitAssignment>& assignments,
                              const ExclusionCounts& exclusions, std::uint64_t seed,
                              const std::map<std::string, std::string>& input_hashes) {
    std::map<std::string, Split> by_id;
    for (const auto& a : assignments) by_id.emplace(a.patient_id, a.split);
    if (by_id.size() != assignments.size()) throw DataError("duplicate split assignment");

    CohortManifest m;
    m.cohort_size = records.size();
    m.seed = seed;
    m.exclusions = exclusions;
    m.input_hashes = input_hashes;
    m.splits = {{"train", {}}, {"validation", {}}, {"test", {}}};
    for (const auto& rec : records) {
        auto it = by_id.find(rec.patient_id);
        if (it == by_id.end()) throw DataError("no split assignment for patient " + rec.patient_id);
        auto& summary = m.splits[split_name(it->second)];
        summary.size += 1;
        summary.events += static_cast<std::size_t>(rec.event == 1);
    }
    std::size_t covered = 0;
    for (const auto& [name, s] : m.splits) covered += s.size;
    if (covered != records.size() || by_id.size() != records.size()) {
        throw DataError("split assignments do not cover the cohort exactly");
    }
    return m;
}

std::string manifest_to_json(const CohortManifest& manifest, const std::string& config_hash) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["config_hash"] = config_hash;
    j["seed"] = manifest.seed;
    j["cohort_size"] = manifest.cohort_size;
    for (const auto& [name, s] : manifest.splits) {
        j["splits"][name] = {{"size", s.size}, {"events", s.events}};
    }
    j["exclusions"] = {{"missing_outcome", manifest.exclusions.missing_outcome},
                       {"duplicate_rows", manifest.exclusions.duplicate_rows},
                       {"missing_modality", manifest.exclusions.missing_modality},
                       {"early_censored", manifest.exclusions.early_censored}};
    j["input_hashes"] = manifest.input_hashes;
    return j.dump(2) + "\n";
}

}  // namespace survaudit
