#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "survaudit/csv.hpp"

namespace survaudit {

/// Synthetic proportional-hazards cohort in the exact input formats the
/// pipeline ingests. Features are standard normal; event times follow a
/// Weibull(shape) baseline scaled by exp(-eta/shape) so the proportional
/// hazards assumption holds by construction; censoring is uniform with
/// its upper bound calibrated to the requested censoring rate.
struct SyntheticSpec {
    std::size_t n_patients = 1000;
    std::size_t p_clinical = 5;
    std::size_t p_expr = 50;
    std::size_t p_cna = 50;
    // (global feature index, coefficient) with features ordered
    // clinical, expr, cna. The extra age/er_status columns carry no signal.
    std::vector<std::pair<std::size_t, double>> coefficients;
    double weibull_shape = 1.5;
    double weibull_scale = 120.0;
    double censor_rate = 0.25;
    std::uint64_t seed = 1;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

struct SyntheticCohort {
    CsvTable clinical;
    CsvTable expr;
    CsvTable cna;
    CsvTable sample_map;
    std::vector<std::string> patient_ids;
    std::vector<double> true_eta;  // oracle linear predictor, aligned with patient_ids
    std::vector<double> times;
    std::vector<int> events;
};

SyntheticCohort synth_cohort(const SyntheticSpec& spec);

/// Writes clinical.csv, expr.csv, cna.csv, sample_map.csv into dir.
void write_synthetic(const SyntheticCohort& cohort, const std::string& dir);

}  // namespace survaudit
