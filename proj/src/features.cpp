#include "survaudit/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace survaudit {

const char* block_name(FeatureBlock b) {
    switch (b) {
        case FeatureBlock::kClinical: return "clinical";
        case FeatureBlock::kExpr: return "expr";
        case FeatureBlock::kCna: return "cna";
    }
    return "?";
}

FeatureBlock block_from_name(const std::string& name) {
    if (name == "clinical") return FeatureBlock::kClinical;
    if (name == "expr") return FeatureBlock::kExpr;
    if (name == "cna") return FeatureBlock::kCna;
    throw DataError("unknown feature block '" + name + "'");
}

std::vector<Eigen::Index> FeatureMatrix::block_columns(FeatureBlock b) const {
    std::vector<Eigen::Index> out;
    for (std::size_t c = 0; c < blocks.size(); ++c) {
        if (blocks[c] == b) out.push_back(static_cast<Eigen::Index>(c));
    }
    return out;
}

Eigen::Index FeatureMatrix::row_of(const std::string& patient_id) const {
    auto it = std::find(patient_ids.begin(), patient_ids.end(), patient_id);
    if (it == patient_ids.end()) throw DataError("patient " + patient_id + " not in feature matrix");
    return static_cast<Eigen::Index>(it - patient_ids.begin());
}

namespace {

// Interns names so the per-row work during aggregation is integer sorting
// rather than string-pair map lookups; index order equals lexicographic
// name order so the output stays sorted by (patient, feature).
struct NameInterner {
    std::vector<std::string> sorted;
    std::map<std::string, std::uint32_t> index_of;

    template <typename Range, typename Get>
    void build(const Range& range, Get get) {
        for (const auto& item : range) sorted.push_back(get(item));
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            index_of.emplace(sorted[i], static_cast<std::uint32_t>(i));
        }
    }
};

}  // namespace

std::vector<PatientOmicsRow> aggregate_samples(const std::vector<LongOmicsRow>& rows,
                                               const std::map<std::string, std::string>& sample_to_patient,
                                               AggregationPolicy policy) {
    std::vector<std::string> unmapped;
    for (const auto& row : rows) {
        if (!sample_to_patient.count(row.sample_id)) unmapped.push_back(row.sample_id);
    }
    if (!unmapped.empty()) {
        std::sort(unmapped.begin(), unmapped.end());
        unmapped.erase(std::unique(unmapped.begin(), unmapped.end()), unmapped.end());
        std::string msg = "unmapped sample ids:";
        for (std::size_t i = 0; i < std::min<std::size_t>(unmapped.size(), 10); ++i) {
            msg += " " + unmapped[i];
        }
        if (unmapped.size() > 10) msg += " (+" + std::to_string(unmapped.size() - 10) + " more)";
        throw DataError(msg);
    }

    NameInterner samples, features;
    samples.build(rows, [](const LongOmicsRow& r) { return r.sample_id; });
    features.build(rows, [](const LongOmicsRow& r) { return r.feature_name; });
    std::vector<std::uint32_t> patient_of_sample(samples.sorted.size());
    NameInterner patients;
    patients.build(samples.sorted,
                   [&](const std::string& s) { return sample_to_patient.at(s); });
    for (std::size_t s = 0; s < samples.sorted.size(); ++s) {
        patient_of_sample[s] = patients.index_of.at(sample_to_patient.at(samples.sorted[s]));
    }

    struct Cell {
        std::uint32_t patient;
        std::uint32_t feature;
        std::uint32_t sample;
        double value;
    };
    std::vector<Cell> cells;
    cells.reserve(rows.size());
    for (const auto& row : rows) {
        if (!row.value) continue;
        const std::uint32_t s = samples.index_of.at(row.sample_id);
        cells.push_back({patient_of_sample[s], features.index_of.at(row.feature_name), s, *row.value});
    }
    // value as the last key: duplicate rows sum in a canonical order, so
    // the result is bit-identical under any input row permutation
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
        if (a.patient != b.patient) return a.patient < b.patient;
        if (a.feature != b.feature) return a.feature < b.feature;
        if (a.sample != b.sample) return a.sample < b.sample;
        return a.value < b.value;
    });

    std::vector<PatientOmicsRow> out;
    std::size_t i = 0;
    while (i < cells.size()) {
        const std::uint32_t patient = cells[i].patient;
        const std::uint32_t feature = cells[i].feature;
        double sum = 0.0;
        std::size_t count = 0;
        if (policy == AggregationPolicy::kMean) {
            while (i < cells.size() && cells[i].patient == patient && cells[i].feature == feature) {
                sum += cells[i].value;
                ++count;
                ++i;
            }
        } else {
            // First: the lexicographically smallest sample id carrying a
            // value; duplicate rows within that sample average so the
            // result stays independent of input row order
            const std::uint32_t first_sample = cells[i].sample;
            while (i < cells.size() && cells[i].patient == patient && cells[i].feature == feature) {
                if (cells[i].sample == first_sample) {
                    sum += cells[i].value;
                    ++count;
                }
                ++i;
            }
        }
        out.push_back({patients.sorted[patient], features.sorted[feature],
                       sum / static_cast<double>(count)});
    }
    return out;
}

namespace {

struct FeatureSummary {
    std::size_t n_obs = 0;
    double mean = 0.0;
    double m2 = 0.0;  // Welford accumulator

    void add(double v) {
        ++n_obs;
        const double d = v - mean;
        mean += d / static_cast<double>(n_obs);
        m2 += d * (v - mean);
    }
    double variance() const { return n_obs >= 2 ? m2 / static_cast<double>(n_obs - 1) : 0.0; }
};

}  // namespace

std::vector<std::string> filter_features(const std::vector<PatientOmicsRow>& rows,
                                         const FilterConfig& config,
                                         const std::vector<std::string>& train_ids) {
    if (train_ids.empty()) throw DataError("filter_features needs training patients");
    if (config.tau_cov < 0.0 || config.tau_cov > 1.0) throw ConfigError("tau_cov must lie in [0,1]");
    if (config.tau_var < 0.0) throw ConfigError("tau_var must be >= 0");

    const std::set<std::string> train(train_ids.begin(), train_ids.end());
    std::map<std::string, FeatureSummary> summary;
    for (const auto& row : rows) {
        auto& s = summary[row.feature_name];  // ensure every feature appears
        if (train.count(row.patient_id)) s.add(row.value);
    }

    const double denom = static_cast<double>(train.size());
    std::vector<std::pair<std::string, double>> survivors;  // name, variance
    for (const auto& [name, s] : summary) {
        const double coverage = static_cast<double>(s.n_obs) / denom;
        if (coverage >= config.tau_cov && s.variance() >= config.tau_var) {
            survivors.emplace_back(name, s.variance());
        }
    }
    if (config.top_k && survivors.size() > *config.top_k) {
        std::sort(survivors.begin(), survivors.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        survivors.resize(*config.top_k);
    }
    std::vector<std::string> out;
    out.reserve(survivors.size());
    for (auto& [name, var] : survivors) out.push_back(name);
    std::sort(out.begin(), out.end());
    if (out.empty()) {
        throw DataError("no features retained; relax tau_cov/tau_var or top_k");
    }
    return out;
}

Eigen::MatrixXd pivot_long_to_wide(const std::vector<PatientOmicsRow>& rows,
                                   const std::vector<std::string>& patient_ids,
                                   const std::vector<std::string>& retained_features) {
    if (retained_features.empty()) throw DataError("pivot needs retained features");
    std::map<std::string, Eigen::Index> row_of, col_of;
    for (std::size_t i = 0; i < patient_ids.size(); ++i) row_of[patient_ids[i]] = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < retained_features.size(); ++j) {
        col_of[retained_features[j]] = static_cast<Eigen::Index>(j);
    }
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(patient_ids.size()),
                                                  static_cast<Eigen::Index>(retained_features.size()),
                                                  std::numeric_limits<double>::quiet_NaN());
    for (const auto& row : rows) {
        auto r = row_of.find(row.patient_id);
        auto c = col_of.find(row.feature_name);
        if (r == row_of.end() || c == col_of.end()) continue;
        m(r->second, c->second) = row.value;
    }
    return m;
}

ColumnStats fit_column_stats(const Eigen::MatrixXd& matrix, const std::vector<bool>& is_train_row,
                             const std::vector<std::string>& column_names) {
    if (static_cast<std::size_t>(matrix.rows()) != is_train_row.size()) {
        throw DataError("train mask length mismatch");
    }
    const std::size_t n_train = static_cast<std::size_t>(
        std::count(is_train_row.begin(), is_train_row.end(), true));
    if (n_train == 0) throw DataError("no training rows");

    ColumnStats stats;
    stats.impute_mean.resize(static_cast<std::size_t>(matrix.cols()));
    stats.sd.resize(static_cast<std::size_t>(matrix.cols()));
    stats.constant.resize(static_cast<std::size_t>(matrix.cols()));
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
        double sum = 0.0;
        std::size_t n_obs = 0;
        for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
            if (!is_train_row[static_cast<std::size_t>(r)]) continue;
            const double v = matrix(r, c);
            if (std::isnan(v)) continue;
            sum += v;
            ++n_obs;
        }
        if (n_obs == 0) {
            const std::string name = static_cast<std::size_t>(c) < column_names.size()
                                         ? column_names[static_cast<std::size_t>(c)]
                                         : std::to_string(c);
            throw DataError("column '" + name + "' has no training values");
        }
        const double mean = sum / static_cast<double>(n_obs);
        // Missing training cells impute to the mean, contributing zero deviation.
        double ss = 0.0;
        for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
            if (!is_train_row[static_cast<std::size_t>(r)]) continue;
            const double v = matrix(r, c);
            if (std::isnan(v)) continue;
            ss += (v - mean) * (v - mean);
        }
        const double var = n_train >= 2 ? ss / static_cast<double>(n_train - 1) : 0.0;
        stats.impute_mean[static_cast<std::size_t>(c)] = mean;
        stats.constant[static_cast<std::size_t>(c)] = var == 0.0;
        stats.sd[static_cast<std::size_t>(c)] = var == 0.0 ? 1.0 : std::sqrt(var);
    }
    return stats;
}

void apply_column_stats(Eigen::MatrixXd& matrix, const ColumnStats& stats) {
    if (static_cast<std::size_t>(matrix.cols()) != stats.impute_mean.size()) {
        throw DataError("column stats size mismatch");
    }
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
        const double mean = stats.impute_mean[static_cast<std::size_t>(c)];
        const double sd = stats.sd[static_cast<std::size_t>(c)];
        for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
            double v = matrix(r, c);
            if (std::isnan(v)) v = mean;
            matrix(r, c) = (v - mean) / sd;
        }
    }
}

std::vector<std::string> OmicsBlockState::output_columns() const {
    if (!projection) return retained;
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(projection->basis.cols()));
    for (Eigen::Index j = 0; j < projection->basis.cols(); ++j) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "_sv%04d", static_cast<int>(j + 1));
        out.push_back(std::string(block_name(block)) + buf);
    }
    return out;
}

OmicsBlockState fit_omics_block(const std::vector<PatientOmicsRow>& rows,
                                const std::vector<std::string>& patient_ids,
                                const std::set<std::string>& train_ids, const FilterConfig& config,
                                int tsvd_k, std::uint64_t seed, FeatureBlock block) {
    OmicsBlockState state;
    state.block = block;
    std::vector<std::string> train_vec(train_ids.begin(), train_ids.end());
    state.retained = filter_features(rows, config, train_vec);

    Eigen::MatrixXd matrix = pivot_long_to_wide(rows, patient_ids, state.retained);
    std::vector<bool> mask(patient_ids.size());
    for (std::size_t i = 0; i < patient_ids.size(); ++i) mask[i] = train_ids.count(patient_ids[i]) > 0;
    state.stats = fit_column_stats(matrix, mask, state.retained);
    apply_column_stats(matrix, state.stats);

    if (tsvd_k > 0) {
        const auto n_train = static_cast<Eigen::Index>(
            std::count(mask.begin(), mask.end(), true));
        Eigen::MatrixXd train(n_train, matrix.cols());
        Eigen::Index r = 0;
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            if (mask[static_cast<std::size_t>(i)]) train.row(r++) = matrix.row(i);
        }
        const int k = static_cast<int>(std::min<Eigen::Index>(tsvd_k, std::min(train.rows(), train.cols())));
        state.projection = fit_tsvd(train, k, seed, /*center=*/true);
    }
    return state;
}

FeatureMatrix apply_omics_block(const OmicsBlockState& state, const std::vector<PatientOmicsRow>& rows,
                                const std::vector<std::string>& patient_ids) {
    Eigen::MatrixXd matrix = pivot_long_to_wide(rows, patient_ids, state.retained);
    apply_column_stats(matrix, state.stats);
    FeatureMatrix fm;
    fm.patient_ids = patient_ids;
    fm.columns = state.output_columns();
    if (state.projection) {
        fm.values = apply_tsvd(*state.projection, matrix);
    } else {
        fm.values = std::move(matrix);
    }
    fm.blocks.assign(fm.columns.size(), state.block);
    return fm;
}

namespace {

bool parse_numeric(const std::string& token, double* out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) return false;
    if (out) *out = v;
    return true;
}

constexpr const char* kUnknownLevel = "unknown";

Eigen::MatrixXd raw_clinical_matrix(const ClinicalEncoder& encoder, const CsvTable& clinical,
                                    const std::vector<std::string>& patient_ids) {
    const std::size_t id_col = clinical.column_index("patient_id");
    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < clinical.rows.size(); ++r) {
        row_of.emplace(clinical.rows[r][id_col], r);  // first occurrence wins
    }
    std::map<std::string, std::size_t> col_of;
    for (std::size_t c = 0; c < clinical.header.size(); ++c) col_of[clinical.header[c]] = c;

    Eigen::MatrixXd m(static_cast<Eigen::Index>(patient_ids.size()),
                      static_cast<Eigen::Index>(encoder.columns.size()));
    for (std::size_t i = 0; i < patient_ids.size(); ++i) {
        auto rit = row_of.find(patient_ids[i]);
        if (rit == row_of.end()) throw DataError("patient " + patient_ids[i] + " missing from clinical table");
        const auto& row = clinical.rows[rit->second];
        for (std::size_t j = 0; j < encoder.columns.size(); ++j) {
            const auto& col = encoder.columns[j];
            auto cit = col_of.find(col.source);
            if (cit == col_of.end()) throw DataError("clinical column '" + col.source + "' missing");
            const std::string& token = row[cit->second];
            double v;
            if (col.level) {
                const std::string& level = is_missing_token(token) ? kUnknownLevel : token;
                v = level == *col.level ? 1.0 : 0.0;
            } else if (is_missing_token(token)) {
                v = std::numeric_limits<double>::quiet_NaN();
            } else {
                if (!parse_numeric(token, &v)) {
                    throw DataError("non-numeric value '" + token + "' in numeric clinical column '" +
                                    col.source + "'");
                }
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return m;
}

}  // namespace

ClinicalEncoder fit_clinical_encoder(const CsvTable& clinical,
                                     const std::vector<std::string>& feature_columns,
                                     const std::vector<std::string>& patient_ids,
                                     const std::set<std::string>& train_ids) {
    const std::size_t id_col = clinical.column_index("patient_id");
    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < clinical.rows.size(); ++r) {
        row_of.emplace(clinical.rows[r][id_col], r);
    }

    ClinicalEncoder encoder;
    for (const auto& source : feature_columns) {
        const std::size_t c = clinical.column_index(source);
        // Type detection on training rows only, so deleting other rows
        // cannot flip a column between numeric and categorical.
        bool numeric = true;
        bool any_value = false;
        bool any_missing = false;
        std::set<std::string> levels;
        for (const auto& id : patient_ids) {
            if (!train_ids.count(id)) continue;
            auto rit = row_of.find(id);
            if (rit == row_of.end()) throw DataError("patient " + id + " missing from clinical table");
            const std::string& token = clinical.rows[rit->second][c];
            if (is_missing_token(token)) {
                any_missing = true;
                continue;
            }
            any_value = true;
            if (!parse_numeric(token, nullptr)) numeric = false;
            levels.insert(token);
        }
        if (numeric && any_value) {
            encoder.columns.push_back({source, source, std::nullopt});
        } else {
            if (any_missing || !any_value) levels.insert(kUnknownLevel);
            std::vector<std::string> sorted(levels.begin(), levels.end());
            encoder.categorical_levels[source] = sorted;
            for (std::size_t k = 1; k < sorted.size(); ++k) {  // first level dropped
                encoder.columns.push_back({source + "=" + sorted[k], source, sorted[k]});
            }
        }
    }
    std::sort(encoder.columns.begin(), encoder.columns.end(),
              [](const ClinicalEncoder::Column& a, const ClinicalEncoder::Column& b) {
                  return a.name < b.name;
              });

    if (!encoder.columns.empty()) {
        Eigen::MatrixXd raw = raw_clinical_matrix(encoder, clinical, patient_ids);
        std::vector<bool> mask(patient_ids.size());
        for (std::size_t i = 0; i < patient_ids.size(); ++i) {
            mask[i] = train_ids.count(patient_ids[i]) > 0;
        }
        std::vector<std::string> names;
        names.reserve(encoder.columns.size());
        for (const auto& col : encoder.columns) names.push_back(col.name);
        encoder.stats = fit_column_stats(raw, mask, names);
    }
    return encoder;
}

FeatureMatrix apply_clinical_encoder(const ClinicalEncoder& encoder, const CsvTable& clinical,
                                     const std::vector<std::string>& patient_ids) {
    FeatureMatrix fm;
    fm.patient_ids = patient_ids;
    for (const auto& col : encoder.columns) fm.columns.push_back(col.name);
    fm.blocks.assign(fm.columns.size(), FeatureBlock::kClinical);
    if (encoder.columns.empty()) {
        fm.values.resize(static_cast<Eigen::Index>(patient_ids.size()), 0);
        return fm;
    }
    fm.values = raw_clinical_matrix(encoder, clinical, patient_ids);
    apply_column_stats(fm.values, encoder.stats);
    return fm;
}

FeatureMatrix assemble_feature_matrix(const FeatureMatrix& clinical, const FeatureMatrix& expr,
                                      const FeatureMatrix& cna) {
    const FeatureMatrix* parts[3] = {&clinical, &expr, &cna};
    for (int i = 1; i < 3; ++i) {
        if (parts[i]->patient_ids != parts[0]->patient_ids) {
            std::set<std::string> a(parts[0]->patient_ids.begin(), parts[0]->patient_ids.end());
            std::set<std::string> b(parts[i]->patient_ids.begin(), parts[i]->patient_ids.end());
            std::vector<std::string> diff;
            std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(),
                                          std::back_inserter(diff));
            std::string msg = "patient sets differ between blocks:";
            for (std::size_t k = 0; k < std::min<std::size_t>(diff.size(), 10); ++k) msg += " " + diff[k];
            if (diff.size() > 10) msg += " (+" + std::to_string(diff.size() - 10) + " more)";
            if (diff.empty()) msg += " (same ids, different order)";
            throw DataError(msg);
        }
    }

    FeatureMatrix out;
    out.patient_ids = clinical.patient_ids;
    Eigen::Index total_cols = 0;
    for (const auto* p : parts) total_cols += p->values.cols();
    out.values.resize(static_cast<Eigen::Index>(out.patient_ids.size()), total_cols);
    Eigen::Index offset = 0;
    for (const auto* p : parts) {
        out.columns.insert(out.columns.end(), p->columns.begin(), p->columns.end());
        out.blocks.insert(out.blocks.end(), p->blocks.begin(), p->blocks.end());
        if (p->values.cols() > 0) out.values.middleCols(offset, p->values.cols()) = p->values;
        offset += p->values.cols();
    }
    return out;
}

}  // namespace survaudit
