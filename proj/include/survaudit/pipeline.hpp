#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "survaudit/config.hpp"
#include "survaudit/model_io.hpp"
#include "survaudit/robustness.hpp"

namespace survaudit {

/// The four user-supplied tables plus their content hashes.
struct RawInputs {
    CsvTable clinical;
    std::vector<LongOmicsRow> expr;
    std::vector<LongOmicsRow> cna;
    std::map<std::string, std::string> sample_map;
    std::map<std::string, std::string> input_hashes;
};

RawInputs load_raw_inputs(const PipelineConfig& config);

std::vector<LongOmicsRow> parse_long_omics(const CsvTable& table);

/// Cohort artifacts reloaded from disk (outcomes.csv + splits.csv).
struct CohortData {
    std::vector<std::string> patient_ids;  // sorted
    std::vector<double> times;
    std::vector<int> events;
    std::map<std::string, Split> split_of;

    std::vector<std::size_t> rows_in(Split split) const;
    std::set<std::string> ids_in(Split split) const;
};

struct PreparedFeatures {
    PipelineState state;
    FeatureMatrix features;
};

/// Fits every preprocessing statistic on the training ids only, then
/// applies the fitted state to the full cohort.
PreparedFeatures prepare_features(const PipelineConfig& config, const RawInputs& inputs,
                                  const std::vector<std::string>& cohort_ids,
                                  const std::set<std::string>& train_ids);

/// Refits preprocessing with every validation/test row deleted from the
/// inputs and byte-compares against the persisted pipeline.json.
/// Returns true when identical; otherwise fills diff_message.
bool leakage_check(const PipelineConfig& config, std::string* diff_message = nullptr);

// Pipeline stages. Each consumes persisted artifacts of earlier stages
// (plus the original inputs) and can be rerun independently.
void stage_split(const PipelineConfig& config, int threads = 1);
void stage_prepare(const PipelineConfig& config, int threads = 1);
void stage_train(const PipelineConfig& config, int threads = 1);
void stage_calibrate(const PipelineConfig& config, int threads = 1);
void stage_evaluate(const PipelineConfig& config, int threads = 1);
void stage_audit(const PipelineConfig& config, int threads = 1);
void stage_bootstrap(const PipelineConfig& config, int threads = 1);
void stage_stress(const PipelineConfig& config, int threads = 1);
void stage_ablate(const PipelineConfig& config, int threads = 1);
void stage_report(const PipelineConfig& config, int threads = 1);

/// All stages in order.
void run_pipeline(const PipelineConfig& config, int threads = 1);

std::string output_path(const PipelineConfig& config, const std::string& filename);

/// Named metric registry used by the bootstrap stage; returns nullopt
/// when the metric is undefined on the inputs.
MetricFn named_metric(const std::string& name);

/// Aligned test-split vectors restricted to defined 60-month labels.
struct EvalVectors {
    std::vector<std::string> ids;
    std::vector<int> y;
    std::vector<double> p;
};

EvalVectors eval_vectors(const TrainedModel& model, const FeatureMatrix& features,
                         const CohortData& cohort, Split split, double horizon, bool calibrated);

}  // namespace survaudit
