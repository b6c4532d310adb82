#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "survaudit/csv.hpp"

namespace survaudit {

/// One (time, event) survival outcome per patient.
struct SurvivalRecord {
    std::string patient_id;
    double time_months = 0.0;
    int event = 0;  // 1 = death, 0 = censored
};

enum class Horizon60 { kPositive, kNegative, kIndeterminate };

struct FixedHorizonLabel {
    std::string patient_id;
    Horizon60 y60 = Horizon60::kIndeterminate;
};

enum class Split { kTrain, kValidation, kTest };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct SplitAssignment {
    std::string patient_id;
    Split split = Split::kTrain;
};

struct SplitFractions {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;
};

struct ExclusionCounts {
    std::size_t missing_outcome = 0;   // rows lacking time or event
    std::size_t duplicate_rows = 0;    // exact duplicate rows collapsed
    std::size_t missing_modality = 0;  // outcome patients absent from an omics block
    std::size_t early_censored = 0;    // indeterminate at the 60-month horizon
};

struct SplitSummary {
    std::size_t size = 0;
    std::size_t events = 0;
};

struct CohortManifest {
    std::size_t cohort_size = 0;
    std::map<std::string, SplitSummary> splits;  // keyed train/validation/test
    std::uint64_t seed = 0;
    ExclusionCounts exclusions;
    std::map<std::string, std::string> input_hashes;  // file label -> content hash
};

struct BuildOutcomesResult {
    std::vector<SurvivalRecord> records;  // sorted by patient_id
    std::size_t excluded_missing = 0;
    std::size_t duplicates_collapsed = 0;
};

/// Parses patient_id/time_months/event from a clinical table. Rows with a
/// missing time or event are dropped and counted; exact duplicate rows
/// collapse; conflicting duplicates and negative times are hard errors.
BuildOutcomesResult build_outcomes(const CsvTable& clinical);

FixedHorizonLabel fixed_horizon_label(const SurvivalRecord& rec, double horizon_months = 60.0);

/// Event-stratified allocation, deterministic in (sorted ids, fractions,
/// seed): ids are shuffled per stratum by SplitMix64 seeded from
/// (seed, stratum) and apportioned by largest remainder.
std::vector<SplitAssignment> stratified_split(const std::vector<SurvivalRecord>& records,
                                              const SplitFractions& fractions, std::uint64_t seed);

CohortManifest build_manifest(const std::vector<SurvivalRecord>& records,
                              const std::vector<SplitAssignment>& assignments,
                              const ExclusionCounts& exclusions, std::uint64_t seed,
                              const std::map<std::string, std::string>& input_hashes);

/// Canonical JSON bytes (sorted keys, fixed number formatting).
std::string manifest_to_json(const CohortManifest& manifest, const std::string& config_hash);

}  // namespace survaudit
