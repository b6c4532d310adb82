#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "survaudit/csv.hpp"
#include "survaudit/tsvd.hpp"

namespace survaudit {

struct LongOmicsRow {
    std::string sample_id;
    std::string feature_name;
    std::optional<double> value;
};

struct PatientOmicsRow {
    std::string patient_id;
    std::string feature_name;
    double value = 0.0;
};

enum class AggregationPolicy { kFirst, kMean };

struct FilterConfig {
    double tau_cov = 0.0;                // minimum non-missing fraction on train
    double tau_var = 0.0;                // minimum variance on train
    std::optional<std::size_t> top_k;    // keep the k highest-variance survivors
};

enum class FeatureBlock { kClinical, kExpr, kCna };

const char* block_name(FeatureBlock b);
FeatureBlock block_from_name(const std::string& name);

/// Patient-aligned dense matrix with named, block-tagged columns.
struct FeatureMatrix {
    std::vector<std::string> patient_ids;  // row order
    std::vector<std::string> columns;
    std::vector<FeatureBlock> blocks;  // per column
    Eigen::MatrixXd values;

    std::vector<Eigen::Index> block_columns(FeatureBlock b) const;
    Eigen::Index row_of(const std::string& patient_id) const;  // throws DataError
};

/// Fitted per-column statistics: the imputation value doubles as the
/// centering mean; sd is the sample (n-1) deviation of the imputed
/// training column, with constant columns pinned to sd 1 and flagged.
struct ColumnStats {
    std::vector<double> impute_mean;
    std::vector<double> sd;
    std::vector<bool> constant;
};

/// Collapses samples onto patients. First takes the lexicographically
/// smallest sample id carrying a value; Mean averages non-missing values.
/// Unmapped sample ids are a hard error listing the offenders.
std::vector<PatientOmicsRow> aggregate_samples(const std::vector<LongOmicsRow>& rows,
                                               const std::map<std::string, std::string>& sample_to_patient,
                                               AggregationPolicy policy);

/// Retention rule fitted on training patients only: coverage >= tau_cov and
/// variance >= tau_var, then optional top-k by variance (ties lexicographic).
/// Output is sorted; an empty result is a hard error.
std::vector<std::string> filter_features(const std::vector<PatientOmicsRow>& rows,
                                         const FilterConfig& config,
                                         const std::vector<std::string>& train_ids);

/// Dense patient-by-feature matrix; absent pairs become NaN.
Eigen::MatrixXd pivot_long_to_wide(const std::vector<PatientOmicsRow>& rows,
                                   const std::vector<std::string>& patient_ids,
                                   const std::vector<std::string>& retained_features);

/// Train-only imputation/standardization statistics. Columns with no
/// non-missing training value are a hard error.
ColumnStats fit_column_stats(const Eigen::MatrixXd& matrix, const std::vector<bool>& is_train_row,
                             const std::vector<std::string>& column_names);

/// In place: NaN -> impute mean, then (x - mean) / sd.
void apply_column_stats(Eigen::MatrixXd& matrix, const ColumnStats& stats);

/// Fitted state of one omics block: filter -> standardize -> optional TSVD.
struct OmicsBlockState {
    FeatureBlock block = FeatureBlock::kExpr;
    std::vector<std::string> retained;
    ColumnStats stats;
    std::optional<TsvdProjection> projection;

    std::vector<std::string> output_columns() const;
};

OmicsBlockState fit_omics_block(const std::vector<PatientOmicsRow>& rows,
                                const std::vector<std::string>& patient_ids,
                                const std::set<std::string>& train_ids, const FilterConfig& config,
                                int tsvd_k, std::uint64_t seed, FeatureBlock block);

FeatureMatrix apply_omics_block(const OmicsBlockState& state, const std::vector<PatientOmicsRow>& rows,
                                const std::vector<std::string>& patient_ids);

/// Clinical covariates: numeric columns are imputed/standardized; string
/// columns are one-hot encoded with lexicographic levels, first level
/// dropped, missing mapped to level "unknown". All decisions fit on train.
struct ClinicalEncoder {
    struct Column {
        std::string name;    // encoded name; indicators use source=level
        std::string source;  // clinical column it derives from
        std::optional<std::string> level;  // set for indicator columns
    };
    std::vector<Column> columns;  // lexicographic by encoded name
    std::map<std::string, std::vector<std::string>> categorical_levels;  // source -> sorted levels
    ColumnStats stats;
};

ClinicalEncoder fit_clinical_encoder(const CsvTable& clinical,
                                     const std::vector<std::string>& feature_columns,
                                     const std::vector<std::string>& patient_ids,
                                     const std::set<std::string>& train_ids);

FeatureMatrix apply_clinical_encoder(const ClinicalEncoder& encoder, const CsvTable& clinical,
                                     const std::vector<std::string>& patient_ids);

/// Horizontal concatenation clinical | expr | cna; patient id sets must
/// match exactly (hard error listing the symmetric difference).
FeatureMatrix assemble_feature_matrix(const FeatureMatrix& clinical, const FeatureMatrix& expr,
                                      const FeatureMatrix& cna);

}  // namespace survaudit
