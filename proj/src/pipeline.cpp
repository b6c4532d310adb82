#include "survaudit/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "survaudit/report.hpp"
#include "survaudit/rng.hpp"

namespace survaudit {

namespace fs = std::filesystem;

std::string output_path(const PipelineConfig& config, const std::string& filename) {
    return (fs::path(config.output_dir) / filename).string();
}

std::vector<LongOmicsRow> parse_long_omics(const CsvTable& table) {
    const std::size_t sample_col = table.column_index("sample_id");
    const std::size_t gene_col = table.column_index("gene");
    const std::size_t value_col = table.column_index("value");
    std::vector<LongOmicsRow> rows;
    rows.reserve(table.rows.size());
    for (const auto& r : table.rows) {
        LongOmicsRow row;
        row.sample_id = r[sample_col];
        row.feature_name = r[gene_col];
        if (!is_missing_token(r[value_col])) {
            row.value = parse_double(r[value_col], "omics value");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

RawInputs load_raw_inputs(const PipelineConfig& config) {
    RawInputs in;
    const std::string clinical_text = read_file(config.clinical_path);
    const std::string expr_text = read_file(config.expr_path);
    const std::string cna_text = read_file(config.cna_path);
    const std::string map_text = read_file(config.sample_map_path);
    in.input_hashes = {{"clinical", content_hash(clinical_text)},
                       {"expression", content_hash(expr_text)},
                       {"cna", content_hash(cna_text)},
                       {"sample_map", content_hash(map_text)}};
    in.clinical = parse_csv(clinical_text, config.clinical_path);
    in.expr = parse_long_omics(parse_csv(expr_text, config.expr_path));
    in.cna = parse_long_omics(parse_csv(cna_text, config.cna_path));
    const CsvTable map_table = parse_csv(map_text, config.sample_map_path);
    const std::size_t s_col = map_table.column_index("sample_id");
    const std::size_t p_col = map_table.column_index("patient_id");
    for (const auto& r : map_table.rows) {
        auto [it, inserted] = in.sample_map.emplace(r[s_col], r[p_col]);
        if (!inserted && it->second != r[p_col]) {
            throw DataError("sample " + r[s_col] + " mapped to two patients");
        }
    }
    return in;
}

std::vector<std::size_t> CohortData::rows_in(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < patient_ids.size(); ++i) {
        if (split_of.at(patient_ids[i]) == split) out.push_back(i);
    }
    return out;
}

std::set<std::string> CohortData::ids_in(Split split) const {
    std::set<std::string> out;
    for (const auto& [id, s] : split_of) {
        if (s == split) out.insert(id);
    }
    return out;
}

namespace {

void ensure_outdir(const PipelineConfig& config) {
    fs::create_directories(config.output_dir);
}

void write_artifact_csv(const PipelineConfig& config, const std::string& filename,
                        const CsvTable& table) {
    write_file(output_path(config, filename), to_csv(table, "config_hash=" + config.config_hash));
}

std::optional<int> defined_label(double time, int event, double horizon) {
    if (event == 1 && time <= horizon) return 1;
    if (time >= horizon) return 0;
    return std::nullopt;  // censored before the horizon
}

CohortData load_cohort(const PipelineConfig& config) {
    CohortData cohort;
    const CsvTable outcomes =
        load_artifact_csv(output_path(config, "outcomes.csv"), config.config_hash);
    const std::size_t id_col = outcomes.column_index("patient_id");
    const std::size_t t_col = outcomes.column_index("time_months");
    const std::size_t e_col = outcomes.column_index("event");
    for (const auto& r : outcomes.rows) {
        cohort.patient_ids.push_back(r[id_col]);
        cohort.times.push_back(parse_double(r[t_col], "time_months"));
        cohort.events.push_back(static_cast<int>(parse_double(r[e_col], "event")));
    }
    const CsvTable splits = load_artifact_csv(output_path(config, "splits.csv"), config.config_hash);
    const std::size_t sid_col = splits.column_index("patient_id");
    const std::size_t sp_col = splits.column_index("split");
    for (const auto& r : splits.rows) cohort.split_of[r[sid_col]] = split_from_name(r[sp_col]);
    for (const auto& id : cohort.patient_ids) {
        if (!cohort.split_of.count(id)) throw DataError("patient " + id + " has no split assignment");
    }
    return cohort;
}

PipelineState load_state(const PipelineConfig& config) {
    return pipeline_state_from_json(
        load_artifact_json(output_path(config, "pipeline.json"), config.config_hash));
}

FeatureMatrix load_features(const PipelineConfig& config, const PipelineState& state) {
    const CsvTable table =
        load_artifact_csv(output_path(config, "features.csv"), config.config_hash);
    if (table.header.empty() || table.header[0] != "patient_id") {
        throw DataError("features.csv must start with patient_id");
    }
    FeatureMatrix fm;
    fm.columns.assign(table.header.begin() + 1, table.header.end());
    if (fm.columns != state.columns) throw DataError("features.csv columns do not match pipeline.json");
    fm.blocks = state.blocks;
    fm.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                     static_cast<Eigen::Index>(fm.columns.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        fm.patient_ids.push_back(table.rows[r][0]);
        for (std::size_t c = 0; c < fm.columns.size(); ++c) {
            fm.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_double(table.rows[r][c + 1], "feature value");
        }
    }
    return fm;
}

TrainedModel load_model(const PipelineConfig& config) {
    return model_from_json(load_artifact_json(output_path(config, "model.json"), config.config_hash));
}

nlohmann::json load_metrics_or_new(const PipelineConfig& config) {
    const std::string path = output_path(config, "metrics.json");
    if (fs::exists(path)) {
        return load_artifact_json(path, config.config_hash);
    }
    nlohmann::json j;
    j["schema_version"] = 1;
    j["config_hash"] = config.config_hash;
    return j;
}

void save_metrics(const PipelineConfig& config, const nlohmann::json& metrics) {
    write_file(output_path(config, "metrics.json"), metrics.dump(2) + "\n");
}

std::vector<std::string> clinical_feature_columns(const PipelineConfig& config,
                                                  const CsvTable& clinical) {
    if (config.clinical_features) {
        for (const auto& name : *config.clinical_features) {
            if (name == "patient_id" || name == "time_months" || name == "event") {
                throw ConfigError("outcome column '" + name + "' cannot be a clinical feature");
            }
        }
        return *config.clinical_features;
    }
    std::vector<std::string> cols;
    for (const auto& name : clinical.header) {
        if (name != "patient_id" && name != "time_months" && name != "event") cols.push_back(name);
    }
    return cols;
}

std::string scenario_name(const std::vector<FeatureBlock>& blocks) {
    std::string name;
    for (FeatureBlock b : blocks) {
        if (!name.empty()) name += "+";
        name += block_name(b);
    }
    return name;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
    }
    return out;
}

}  // namespace

PreparedFeatures prepare_features(const PipelineConfig& config, const RawInputs& inputs,
                                  const std::vector<std::string>& cohort_ids,
                                  const std::set<std::string>& train_ids) {
    const auto expr_rows = aggregate_samples(inputs.expr, inputs.sample_map, config.aggregation);
    const auto cna_rows = aggregate_samples(inputs.cna, inputs.sample_map, config.aggregation);

    PreparedFeatures out;
    out.state.clinical = fit_clinical_encoder(
        inputs.clinical, clinical_feature_columns(config, inputs.clinical), cohort_ids, train_ids);
    out.state.expr =
        fit_omics_block(expr_rows, cohort_ids, train_ids, config.expr.filter, config.expr.tsvd_k,
                        derive_seed(config.seed, "tsvd:expr"), FeatureBlock::kExpr);
    out.state.cna =
        fit_omics_block(cna_rows, cohort_ids, train_ids, config.cna.filter, config.cna.tsvd_k,
                        derive_seed(config.seed, "tsvd:cna"), FeatureBlock::kCna);

    const FeatureMatrix clinical_fm =
        apply_clinical_encoder(out.state.clinical, inputs.clinical, cohort_ids);
    const FeatureMatrix expr_fm = apply_omics_block(out.state.expr, expr_rows, cohort_ids);
    const FeatureMatrix cna_fm = apply_omics_block(out.state.cna, cna_rows, cohort_ids);
    out.features = assemble_feature_matrix(clinical_fm, expr_fm, cna_fm);
    out.state.columns = out.features.columns;
    out.state.blocks = out.features.blocks;
    return out;
}

void stage_split(const PipelineConfig& config, int) {
    ensure_outdir(config);
    const RawInputs inputs = load_raw_inputs(config);
    BuildOutcomesResult outcomes = build_outcomes(inputs.clinical);

    // Complete-case cohort: a patient must appear in both omics blocks.
    std::set<std::string> expr_patients, cna_patients;
    for (const auto& row : inputs.expr) {
        auto it = inputs.sample_map.find(row.sample_id);
        if (it != inputs.sample_map.end()) expr_patients.insert(it->second);
    }
    for (const auto& row : inputs.cna) {
        auto it = inputs.sample_map.find(row.sample_id);
        if (it != inputs.sample_map.end()) cna_patients.insert(it->second);
    }
    std::vector<SurvivalRecord> cohort;
    for (auto& rec : outcomes.records) {
        if (expr_patients.count(rec.patient_id) && cna_patients.count(rec.patient_id)) {
            cohort.push_back(std::move(rec));
        }
    }

    ExclusionCounts exclusions;
    exclusions.missing_outcome = outcomes.excluded_missing;
    exclusions.duplicate_rows = outcomes.duplicates_collapsed;
    exclusions.missing_modality = outcomes.records.size() - cohort.size();
    for (const auto& rec : cohort) {
        if (fixed_horizon_label(rec, config.horizon_months).y60 == Horizon60::kIndeterminate) {
            ++exclusions.early_censored;
        }
    }

    const auto assignments =
        stratified_split(cohort, config.fractions, derive_seed(config.seed, "split"));
    const CohortManifest manifest =
        build_manifest(cohort, assignments, exclusions, config.seed, inputs.input_hashes);

    CsvTable outcomes_csv;
    outcomes_csv.header = {"patient_id", "time_months", "event"};
    for (const auto& rec : cohort) {
        outcomes_csv.rows.push_back(
            {rec.patient_id, format_double(rec.time_months), std::to_string(rec.event)});
    }
    write_artifact_csv(config, "outcomes.csv", outcomes_csv);

    CsvTable splits_csv;
    splits_csv.header = {"patient_id", "split"};
    for (const auto& a : assignments) splits_csv.rows.push_back({a.patient_id, split_name(a.split)});
    write_artifact_csv(config, "splits.csv", splits_csv);

    write_file(output_path(config, "manifest.json"), manifest_to_json(manifest, config.config_hash));
}

void stage_prepare(const PipelineConfig& config, int) {
    ensure_outdir(config);
    const CohortData cohort = load_cohort(config);
    const RawInputs inputs = load_raw_inputs(config);
    const PreparedFeatures prepared =
        prepare_features(config, inputs, cohort.patient_ids, cohort.ids_in(Split::kTrain));

    write_file(output_path(config, "pipeline.json"),
               pipeline_state_to_json(prepared.state, config.config_hash));

    CsvTable features_csv;
    features_csv.header = {"patient_id"};
    features_csv.header.insert(features_csv.header.end(), prepared.features.columns.begin(),
                               prepared.features.columns.end());
    for (std::size_t r = 0; r < prepared.features.patient_ids.size(); ++r) {
        std::vector<std::string> row{prepared.features.patient_ids[r]};
        for (Eigen::Index c = 0; c < prepared.features.values.cols(); ++c) {
            row.push_back(format_double(prepared.features.values(static_cast<Eigen::Index>(r), c)));
        }
        features_csv.rows.push_back(std::move(row));
    }
    write_artifact_csv(config, "features.csv", features_csv);
}

bool leakage_check(const PipelineConfig& config, std::string* diff_message) {
    const CohortData cohort = load_cohort(config);
    RawInputs inputs = load_raw_inputs(config);
    const std::set<std::string> train_ids = cohort.ids_in(Split::kTrain);

    // Delete every validation/test row from the raw inputs.
    CsvTable train_clinical;
    train_clinical.header = inputs.clinical.header;
    const std::size_t id_col = inputs.clinical.column_index("patient_id");
    for (const auto& row : inputs.clinical.rows) {
        if (train_ids.count(row[id_col])) train_clinical.rows.push_back(row);
    }
    inputs.clinical = std::move(train_clinical);
    auto keep_train = [&](std::vector<LongOmicsRow>& rows) {
        std::vector<LongOmicsRow> kept;
        for (auto& row : rows) {
            auto it = inputs.sample_map.find(row.sample_id);
            if (it != inputs.sample_map.end() && train_ids.count(it->second)) {
                kept.push_back(std::move(row));
            }
        }
        rows = std::move(kept);
    };
    keep_train(inputs.expr);
    keep_train(inputs.cna);

    std::vector<std::string> train_sorted(train_ids.begin(), train_ids.end());
    const PreparedFeatures refit = prepare_features(config, inputs, train_sorted, train_ids);
    const std::string refit_json = pipeline_state_to_json(refit.state, config.config_hash);
    const std::string persisted = read_file(output_path(config, "pipeline.json"));
    if (refit_json == persisted) return true;
    if (diff_message) {
        *diff_message = "pipeline state refitted from train-only inputs differs from the persisted state";
    }
    return false;
}

namespace {

struct ValidationScorer {
    const PipelineConfig& config;
    const FeatureMatrix& features;
    const CohortData& cohort;
    std::vector<std::size_t> val_rows;
    std::vector<int> val_y;

    ValidationScorer(const PipelineConfig& cfg, const FeatureMatrix& fm, const CohortData& co)
        : config(cfg), features(fm), cohort(co) {
        for (std::size_t i : cohort.rows_in(Split::kValidation)) {
            const auto label = defined_label(cohort.times[i], cohort.events[i], cfg.horizon_months);
            if (label) {
                val_rows.push_back(i);
                val_y.push_back(*label);
            }
        }
        if (val_rows.empty()) throw DataError("no defined validation labels at the horizon");
    }

    double auroc_of(const TrainedModel& model, const std::vector<Eigen::Index>& cols) const {
        const Eigen::MatrixXd x_val = select_columns(select_rows(features.values, val_rows), cols);
        const std::vector<double> p = model.risk60(x_val, config.horizon_months, false);
        return auroc(val_y, p);
    }
};

std::vector<Eigen::Index> all_columns(const FeatureMatrix& fm) {
    std::vector<Eigen::Index> cols(fm.columns.size());
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = static_cast<Eigen::Index>(i);
    return cols;
}

std::vector<std::string> column_names_at(const FeatureMatrix& fm,
                                         const std::vector<Eigen::Index>& cols) {
    std::vector<std::string> names;
    names.reserve(cols.size());
    for (Eigen::Index c : cols) names.push_back(fm.columns[static_cast<std::size_t>(c)]);
    return names;
}

/// Fits the configured model kind with explicit parameters on the given
/// training columns. Shared by the train grid and the ablation harness.
TrainedModel fit_with_params(const PipelineConfig& config, const nlohmann::json& params,
                             const FeatureMatrix& features, const CohortData& cohort,
                             const std::vector<Eigen::Index>& cols, int threads) {
    const auto train_rows = cohort.rows_in(Split::kTrain);
    const Eigen::MatrixXd x_train = select_columns(select_rows(features.values, train_rows), cols);
    std::vector<double> t_train;
    std::vector<int> e_train;
    for (std::size_t i : train_rows) {
        t_train.push_back(cohort.times[i]);
        e_train.push_back(cohort.events[i]);
    }

    TrainedModel model;
    model.kind = config.model_kind;
    model.columns = column_names_at(features, cols);
    if (config.model_kind == "coxnet") {
        CoxNetOptions opts;
        opts.lambda = params.at("lambda").get<double>();
        opts.alpha = params.at("alpha").get<double>();
        opts.tol = config.coxnet.tol;
        opts.max_iter = config.coxnet.max_iter;
        model.coxnet = fit_coxnet(x_train, t_train, e_train, opts, model.columns);
        if (!model.coxnet->converged) {
            std::cerr << "warning: CoxNet did not converge (lambda=" << opts.lambda
                      << ", alpha=" << opts.alpha << ")\n";
        }
    } else {
        GbcoxParams p;
        p.max_depth = params.at("max_depth").get<int>();
        p.learning_rate = params.at("learning_rate").get<double>();
        p.rounds = params.at("rounds").get<int>();
        p.lambda_tree = params.at("lambda_tree").get<double>();
        p.subsample = params.at("subsample").get<double>();
        p.gamma = config.gbcox.gamma;
        p.min_child_weight = config.gbcox.min_child_weight;
        model.gbcox =
            fit_gbcox(x_train, t_train, e_train, p, derive_seed(config.seed, "train"), threads);
        model.gbcox->columns = model.columns;
    }
    return model;
}

std::vector<nlohmann::json> grid_candidates(const PipelineConfig& config) {
    std::vector<nlohmann::json> out;
    if (config.model_kind == "coxnet") {
        for (double lambda : config.coxnet.lambda) {
            for (double alpha : config.coxnet.alpha) {
                out.push_back({{"lambda", lambda}, {"alpha", alpha}});
            }
        }
    } else {
        for (int depth : config.gbcox.max_depth) {
            for (double lr : config.gbcox.learning_rate) {
                for (int rounds : config.gbcox.rounds) {
                    for (double lt : config.gbcox.lambda_tree) {
                        for (double sub : config.gbcox.subsample) {
                            out.push_back({{"max_depth", depth},
                                           {"learning_rate", lr},
                                           {"rounds", rounds},
                                           {"lambda_tree", lt},
                                           {"subsample", sub}});
                        }
                    }
                }
            }
        }
    }
    if (out.empty()) throw ConfigError("empty hyperparameter grid");
    return out;
}

// Deterministic preference among equal validation scores: CoxNet leans on
// stronger regularization, GBCox on the smaller tree.
bool prefer_candidate(const std::string& kind, const nlohmann::json& a, const nlohmann::json& b) {
    if (kind == "coxnet") {
        if (a.at("lambda") != b.at("lambda")) return a.at("lambda") > b.at("lambda");
        return a.at("alpha") > b.at("alpha");
    }
    if (a.at("max_depth") != b.at("max_depth")) return a.at("max_depth") < b.at("max_depth");
    if (a.at("learning_rate") != b.at("learning_rate")) {
        return a.at("learning_rate") < b.at("learning_rate");
    }
    if (a.at("rounds") != b.at("rounds")) return a.at("rounds") < b.at("rounds");
    if (a.at("lambda_tree") != b.at("lambda_tree")) return a.at("lambda_tree") > b.at("lambda_tree");
    return a.at("subsample") < b.at("subsample");
}

}  // namespace

void stage_train(const PipelineConfig& config, int threads) {
    const CohortData cohort = load_cohort(config);
    const PipelineState state = load_state(config);
    const FeatureMatrix features = load_features(config, state);
    if (features.patient_ids != cohort.patient_ids) {
        throw DataError("features.csv and outcomes.csv cover different patients");
    }
    const ValidationScorer scorer(config, features, cohort);
    const auto cols = all_columns(features);

    std::optional<TrainedModel> best;
    nlohmann::json best_params;
    double best_auroc = -1.0;
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& params : grid_candidates(config)) {
        TrainedModel candidate = fit_with_params(config, params, features, cohort, cols, threads);
        const double score = scorer.auroc_of(candidate, cols);
        nlohmann::json entry = params;
        entry["val_auroc"] = score;
        trace.push_back(entry);
        const bool better =
            !best || score > best_auroc ||
            (score == best_auroc && prefer_candidate(config.model_kind, params, best_params));
        if (better) {
            best = std::move(candidate);
            best_params = params;
            best_auroc = score;
        }
    }

    best->selection = {{"grid", trace}, {"selected", best_params}, {"val_auroc", best_auroc}};
    write_file(output_path(config, "model.json"), model_to_json(*best, config.config_hash));
}

namespace {

// Isotonic calibrator fitted on the defined validation labels. The stored
// map interpolates between PAVA block centroids (centered isotonic), and
// its values are bounded away from 0/1 by the fit's sample resolution
// (half a count): a finite calibration sample cannot certify more extreme
// odds, and exact 0/1 outputs would turn the downstream logit-based slope
// into an artifact of the clipping constant.
IsotonicMap fit_bounded_isotonic(const PipelineConfig& config, const TrainedModel& model,
                                 const FeatureMatrix& features, const CohortData& cohort,
                                 const std::vector<Eigen::Index>& cols) {
    std::vector<std::size_t> rows;
    std::vector<double> targets;
    for (std::size_t i : cohort.rows_in(Split::kValidation)) {
        const auto label = defined_label(cohort.times[i], cohort.events[i], config.horizon_months);
        if (label) {
            rows.push_back(i);
            targets.push_back(static_cast<double>(*label));
        }
    }
    if (rows.size() < 2) throw DataError("not enough defined validation labels for isotonic fit");
    const Eigen::MatrixXd x_val = select_columns(select_rows(features.values, rows), cols);
    const std::vector<double> p = model.risk60(x_val, config.horizon_months, false);
    IsotonicMap map = isotonic_block_centroids(fit_isotonic(p, targets), p);
    const double floor = 0.5 / static_cast<double>(rows.size());
    for (double& v : map.values) v = std::clamp(v, floor, 1.0 - floor);
    return map;
}

}  // namespace

void stage_calibrate(const PipelineConfig& config, int) {
    const CohortData cohort = load_cohort(config);
    const PipelineState state = load_state(config);
    const FeatureMatrix features = load_features(config, state);
    TrainedModel model = load_model(config);

    if (config.isotonic) {
        model.isotonic = fit_bounded_isotonic(config, model, features, cohort, all_columns(features));
    } else {
        model.isotonic.reset();
    }
    write_file(output_path(config, "model.json"), model_to_json(model, config.config_hash));
}

EvalVectors eval_vectors(const TrainedModel& model, const FeatureMatrix& features,
                         const CohortData& cohort, Split split, double horizon, bool calibrated) {
    if (features.patient_ids != cohort.patient_ids) {
        throw DataError("feature matrix and cohort are misaligned");
    }
    EvalVectors out;
    std::vector<std::size_t> rows;
    for (std::size_t i : cohort.rows_in(split)) {
        const auto label = defined_label(cohort.times[i], cohort.events[i], horizon);
        if (!label) continue;
        rows.push_back(i);
        out.ids.push_back(cohort.patient_ids[i]);
        out.y.push_back(*label);
    }
    if (rows.empty()) throw DataError("no defined labels in the requested split");
    out.p = model.risk60(select_rows(features.values, rows), horizon, calibrated);
    return out;
}

void stage_evaluate(const PipelineConfig& config, int) {
    const CohortData cohort = load_cohort(config);
    const PipelineState state = load_state(config);
    const FeatureMatrix features = load_features(config, state);
    const TrainedModel model = load_model(config);

    const EvalVectors ev =
        eval_vectors(model, features, cohort, Split::kTest, config.horizon_months, true);
    const CalibrationReport rep =
        calibration_report(ev.y, ev.p, config.ece_bins, config.curve_bins);
    const double auc = auroc(ev.y, ev.p);
    const PrCurve pr = pr_curve(ev.y, ev.p);
    const RocCurve roc = roc_curve(ev.y, ev.p);

    nlohmann::json metrics = load_metrics_or_new(config);
    metrics["model"] = model.kind;
    metrics["test"] = {{"n", rep.n},
                       {"prevalence", rep.prevalence},
                       {"mean_predicted", rep.mean_predicted},
                       {"auroc", auc},
                       {"average_precision", pr.average_precision},
                       {"brier", rep.brier},
                       {"ece", rep.ece},
                       {"intercept", rep.intercept},
                       {"slope", rep.slope},
                       {"intercept_fixed_slope", rep.intercept_fixed_slope},
                       {"slope_flagged", rep.slope_flagged},
                       {"calibrated", model.isotonic.has_value()}};
    save_metrics(config, metrics);

    CsvTable roc_csv;
    roc_csv.header = {"threshold", "fpr", "tpr"};
    for (std::size_t i = 0; i < roc.thresholds.size(); ++i) {
        roc_csv.rows.push_back({format_double(roc.thresholds[i]), format_double(roc.fpr[i]),
                                format_double(roc.tpr[i])});
    }
    write_artifact_csv(config, "roc.csv", roc_csv);

    CsvTable pr_csv;
    pr_csv.header = {"threshold", "recall", "precision"};
    for (std::size_t i = 0; i < pr.thresholds.size(); ++i) {
        pr_csv.rows.push_back({format_double(pr.thresholds[i]), format_double(pr.recall[i]),
                               format_double(pr.precision[i])});
    }
    write_artifact_csv(config, "pr.csv", pr_csv);

    CsvTable cal_csv;
    cal_csv.header = {"bin", "mean_predicted", "observed_rate", "count"};
    for (std::size_t i = 0; i < rep.curve.size(); ++i) {
        cal_csv.rows.push_back({std::to_string(i + 1), format_double(rep.curve[i].mean_predicted),
                                format_double(rep.curve[i].observed_rate),
                                std::to_string(rep.curve[i].count)});
    }
    write_artifact_csv(config, "calibration.csv", cal_csv);
}

namespace {

nlohmann::json subgroup_result_to_json(const SubgroupResult& r) {
    nlohmann::json j;
    j["level"] = r.level;
    j["n"] = r.n;
    j["withheld"] = r.withheld;
    if (r.withheld) {
        j["reason"] = r.withheld_reason;
        return j;
    }
    j["prevalence"] = *r.prevalence;
    j["auroc"] = *r.auroc;
    j["auprc"] = *r.auprc;
    j["brier"] = *r.brier;
    j["ece"] = *r.ece;
    j["slope"] = *r.slope;
    j["slope_flagged"] = r.slope_flagged;
    const auto& c = *r.confusion;
    nlohmann::json cj = {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn},
                         {"predicted_positive_rate", c.predicted_positive_rate}};
    cj["tpr"] = c.tpr ? nlohmann::json(*c.tpr) : nlohmann::json(nullptr);
    cj["fpr"] = c.fpr ? nlohmann::json(*c.fpr) : nlohmann::json(nullptr);
    cj["ppv"] = c.ppv ? nlohmann::json(*c.ppv) : nlohmann::json(nullptr);
    j["confusion"] = std::move(cj);
    return j;
}

nlohmann::json parity_to_json(const ParitySummary& p) {
    if (!p.unavailable_reason.empty()) return {{"unavailable", p.unavailable_reason}};
    nlohmann::json j;
    for (const auto& [metric, gap] : p.gaps) {
        j[metric] = {{"gap", gap.gap}, {"max_level", gap.max_level}, {"min_level", gap.min_level}};
    }
    return j;
}

}  // namespace

void stage_audit(const PipelineConfig& config, int) {
    const CohortData cohort = load_cohort(config);
    const PipelineState state = load_state(config);
    const FeatureMatrix features = load_features(config, state);
    const TrainedModel model = load_model(config);
    const RawInputs inputs = load_raw_inputs(config);

    const EvalVectors ev =
        eval_vectors(model, features, cohort, Split::kTest, config.horizon_months, true);

    nlohmann::json metrics = load_metrics_or_new(config);
    nlohmann::json fairness;
    fairness["threshold"] = config.decision_threshold;
    fairness["min_size"] = config.min_subgroup_size;
    fairness["variables"] = nlohmann::json::object();

    CsvTable fair_csv;
    fair_csv.header = {"variable", "group", "n", "prev", "auroc", "auprc", "brier", "ece", "slope"};
    CsvTable parity_csv;
    parity_csv.header = {"variable", "group", "tpr", "fpr", "ppv", "ppr"};

    for (const auto& var : config.fairness_variables) {
        SubgroupSpec spec;
        spec.variable = var.name;
        spec.kind = var.kind;
        const auto level_of = assign_subgroups(inputs.clinical, spec);
        std::vector<std::string> groups;
        groups.reserve(ev.ids.size());
        for (const auto& id : ev.ids) {
            auto it = level_of.find(id);
            groups.push_back(it == level_of.end() ? "unknown" : it->second);
        }
        const auto results =
            subgroup_metrics(ev.y, ev.p, groups, config.min_subgroup_size,
                             config.decision_threshold, config.ece_bins);
        const auto parity = parity_summary(results);

        nlohmann::json results_json = nlohmann::json::array();
        for (const auto& r : results) {
            results_json.push_back(subgroup_result_to_json(r));
            if (r.withheld) continue;
            fair_csv.rows.push_back({var.name, r.level, std::to_string(r.n),
                                     format_double(*r.prevalence), format_double(*r.auroc),
                                     format_double(*r.auprc), format_double(*r.brier),
                                     format_double(*r.ece), format_double(*r.slope)});
            const auto& c = *r.confusion;
            parity_csv.rows.push_back({var.name, r.level, c.tpr ? format_double(*c.tpr) : "",
                                       c.fpr ? format_double(*c.fpr) : "",
                                       c.ppv ? format_double(*c.ppv) : "",
                                       format_double(c.predicted_positive_rate)});
        }
        fairness["variables"][var.name] = {{"results", results_json},
                                           {"parity", parity_to_json(parity)}};
    }
    metrics["fairness"] = fairness;
    save_metrics(config, metrics);
    write_artifact_csv(config, "fairness.csv", fair_csv);
    write_artifact_csv(config, "parity.csv", parity_csv);
}

MetricFn named_metric(const std::string& name) {
    if (name == "auroc") {
        return [](std::span<const int> y, std::span<const double> p) -> std::optional<double> {
            const auto pos = std::count(y.begin(), y.end(), 1);
            if (pos == 0 || static_cast<std::size_t>(pos) == y.size()) return std::nullopt;
            return auroc(y, p);
        };
    }
    if (name == "average_precision") {
        return [](std::span<const int> y, std::span<const double> p) -> std::optional<double> {
            if (std::count(y.begin(), y.end(), 1) == 0) return std::nullopt;
            return average_precision(y, p);
        };
    }
    if (name == "brier") {
        return [](std::span<const int> y, std::span<const double> p) -> std::optional<double> {
            return brier_score(y, p);
        };
    }
    if (name == "ece") {
        return [](std::span<const int> y, std::span<const double> p) -> std::optional<double> {
            return ece(y, p);
        };
    }
    if (name == "mean") {
        return [](std::span<const int> y, std::span<const double>) -> std::optional<double> {
            double s = 0.0;
            for (int v : y) s += v;
            return s / static_cast<double>(y.size());
        };
    }
    throw ConfigError("unknown bootstrap metric '" + name + "'");
}

void stage_bootstrap(const PipelineConfig& config, int threads) {
    const CohortData cohort = load_cohort(config);
    const PipelineState state = load_state(config);
    const FeatureMatrix features = load_features(config, state);
    const TrainedModel model = load_model(config);
    const RawInputs inputs = load_raw_inputs(config);

    const EvalVectors ev =
        eval_vectors(model, features, cohort, Split::kTest, config.horizon_months, true);

    nlohmann::json metrics = load_metrics_or_new(config);
    nlohmann::json boot;
    boot["b"] = config.bootstrap_b;
    nlohmann::json rows = nlohmann::json::array();

    CsvTable boot_csv;
    boot_csv.header = {"metric", "point", "ci_low", "ci_high", "B", "skipped"};
    for (const auto& name : config.bootstrap_metrics) {
        const BootstrapResult r =
            bootstrap_ci(ev.y, ev.p, name, named_metric(name), config.bootstrap_b,
                         derive_seed(config.seed, "bootstrap:" + name), threads);
        rows.push_back({{"metric", r.metric},
                        {"point", r.point},
                        {"ci_low", r.ci_low},
                        {"ci_high", r.ci_high},
                        {"replicates", r.replicates.size()},
                        {"skipped", r.skipped},
                        {"flagged", r.flagged}});
        boot_csv.rows.push_back({r.metric, format_double(r.point), format_double(r.ci_low),
                                 format_double(r.ci_high), std::to_string(r.b),
                                 std::to_string(r.skipped)});
    }
    boot["metrics"] = rows;

    // Subgroup-level intervals for the audited variables.
    nlohmann::json by_variable = nlohmann::json::object();
    for (const auto& var : config.fairness_variables) {
        SubgroupSpec spec;
        spec.variable = var.name;
        spec.kind = var.kind;
        const auto level_of = assign_subgroups(inputs.clinical, spec);
        std::map<std::string, std::vector<std::size_t>> by_level;
        for (std::size_t i = 0; i < ev.ids.size(); ++i) {
            auto it = level_of.find(ev.ids[i]);
            by_level[it == level_of.end() ? "unknown" : it->second].push_back(i);
        }
        nlohmann::json level_rows = nlohmann::json::array();
        for (const auto& [level, idx] : by_level) {
            if (idx.size() < config.min_subgroup_size) continue;
            std::vector<int> yy;
            std::vector<double> pp;
            for (std::size_t i : idx) {
                yy.push_back(ev.y[i]);
                pp.push_back(ev.p[i]);
            }
            const auto pos = std::count(yy.begin(), yy.end(), 1);
            if (pos == 0 || static_cast<std::size_t>(pos) == yy.size()) continue;
            for (const std::string metric : {"auroc", "ece"}) {
                const BootstrapResult r = bootstrap_ci(
                    yy, pp, metric, named_metric(metric), config.bootstrap_b,
                    derive_seed(config.seed, "bootstrap:" + var.name + ":" + level + ":" + metric),
                    threads);
                level_rows.push_back({{"level", level},
                                      {"n", idx.size()},
                                      {"metric", r.metric},
                                      {"point", r.point},
                                      {"ci_low", r.ci_low},
                                      {"ci_high", r.ci_high},
                                      {"skipped", r.skipped}});
            }
        }
        by_variable[var.name] = level_rows;
    }
    boot["subgroups"] = by_variable;

    metrics["bootstrap"] = boot;
    save_metrics(config, metrics);
    write_artifact_csv(config, "bootstrap.csv", boot_csv);
}

void stage_stress(const PipelineConfig& config, int) {
    const CohortData cohort = load_cohort(config);
    const PipelineState state = load_state(config);
    const FeatureMatrix features = load_features(config, state);
    const TrainedModel model = load_model(config);

    const EvalVectors base =
        eval_vectors(model, features, cohort, Split::kTest, config.horizon_months, true);
    const double base_auroc = auroc(base.y, base.p);
    const double base_brier = brier_score(base.y, base.p);
    const double base_ece = ece(base.y, base.p, config.ece_bins);

    nlohmann::json scenarios = nlohmann::json::array();
    for (const auto& blocks : config.mask_scenarios) {
        MaskingScenario scenario;
        scenario.modalities = blocks;
        scenario.rho = config.mask_rho;
        scenario.seed = derive_seed(config.seed, "stress:" + scenario_name(blocks));
        const FeatureMatrix masked = mask_modality(features, scenario);
        const EvalVectors ev =
            eval_vectors(model, masked, cohort, Split::kTest, config.horizon_months, true);
        const double a = auroc(ev.y, ev.p);
        const double b = brier_score(ev.y, ev.p);
        const double e = ece(ev.y, ev.p, config.ece_bins);
        scenarios.push_back({{"modalities", scenario_name(blocks)},
                             {"rho", config.mask_rho},
                             {"auroc", a},
                             {"brier", b},
                             {"ece", e},
                             {"delta_auroc", a - base_auroc},
                             {"delta_brier", b - base_brier},
                             {"delta_ece", e - base_ece}});
    }

    nlohmann::json metrics = load_metrics_or_new(config);
    metrics["stress"] = {{"rho", config.mask_rho},
                         {"baseline", {{"auroc", base_auroc}, {"brier", base_brier}, {"ece", base_ece}}},
                         {"scenarios", scenarios}};
    save_metrics(config, metrics);
}

void stage_ablate(const PipelineConfig& config, int threads) {
    if (!config.run_ablation) return;
    const CohortData cohort = load_cohort(config);
    const PipelineState state = load_state(config);
    const FeatureMatrix features = load_features(config, state);
    const TrainedModel main_model = load_model(config);
    const nlohmann::json selected = main_model.selection.at("selected");

    struct Row {
        std::string name;
        std::size_t n_features;
        double auroc_v, ap, brier_v, ece_v;
    };
    std::function<Row(const AblationConfig&, const std::vector<Eigen::Index>&)> protocol =
        [&](const AblationConfig& ab, const std::vector<Eigen::Index>& cols) -> Row {
        TrainedModel model = fit_with_params(config, selected, features, cohort, cols, threads);
        if (config.isotonic) {
            model.isotonic = fit_bounded_isotonic(config, model, features, cohort, cols);
        }
        FeatureMatrix restricted;
        restricted.patient_ids = features.patient_ids;
        restricted.columns = column_names_at(features, cols);
        for (Eigen::Index c : cols) restricted.blocks.push_back(features.blocks[static_cast<std::size_t>(c)]);
        restricted.values = select_columns(features.values, cols);
        const EvalVectors ev =
            eval_vectors(model, restricted, cohort, Split::kTest, config.horizon_months, true);
        return Row{ab.name, cols.size(), auroc(ev.y, ev.p), average_precision(ev.y, ev.p),
                   brier_score(ev.y, ev.p), ece(ev.y, ev.p, config.ece_bins)};
    };

    const auto rows = ablation_run<Row>(standard_ablation_configs(), features, protocol);

    CsvTable csv;
    csv.header = {"config", "n_features", "auroc", "average_precision", "brier", "ece"};
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows) {
        csv.rows.push_back({r.name, std::to_string(r.n_features), format_double(r.auroc_v),
                            format_double(r.ap), format_double(r.brier_v), format_double(r.ece_v)});
        rows_json.push_back({{"config", r.name},
                             {"n_features", r.n_features},
                             {"auroc", r.auroc_v},
                             {"average_precision", r.ap},
                             {"brier", r.brier_v},
                             {"ece", r.ece_v}});
    }
    write_artifact_csv(config, "ablation.csv", csv);
    nlohmann::json metrics = load_metrics_or_new(config);
    metrics["ablation"] = rows_json;
    save_metrics(config, metrics);
}

void stage_report(const PipelineConfig& config, int) {
    const nlohmann::json metrics =
        load_artifact_json(output_path(config, "metrics.json"), config.config_hash);
    write_file(output_path(config, "report.md"), render_report(metrics));
}

void run_pipeline(const PipelineConfig& config, int threads) {
    const struct {
        const char* name;
        void (*fn)(const PipelineConfig&, int);
    } stages[] = {
        {"split", stage_split},       {"prepare", stage_prepare},   {"train", stage_train},
        {"calibrate", stage_calibrate}, {"evaluate", stage_evaluate}, {"audit", stage_audit},
        {"bootstrap", stage_bootstrap}, {"stress", stage_stress},     {"ablate", stage_ablate},
        {"report", stage_report},
    };
    for (const auto& stage : stages) {
        try {
            stage.fn(config, threads);
        } catch (const std::exception& e) {
            throw_with_stage(stage.name, e);
        }
    }
}

}  // namespace survaudit
