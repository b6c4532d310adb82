#include <doctest.h>

#include <filesystem>

#include "survaudit/discrimination.hpp"
#include "survaudit/pipeline.hpp"
#include "survaudit/report.hpp"
#include "survaudit/rng.hpp"
#include "survaudit/synth.hpp"

using namespace survaudit;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_patients = 260;
    spec.p_clinical = 3;
    spec.p_expr = 8;
    spec.p_cna = 8;
    spec.coefficients = {{0, 0.9}, {4, -1.1}, {12, 0.8}};
    spec.weibull_shape = 1.3;
    spec.weibull_scale = 95.0;
    spec.censor_rate = 0.25;
    spec.seed = seed;
    return spec;
}

PipelineConfig small_config(const std::string& data_dir, const std::string& out_dir) {
    PipelineConfig c;
    c.clinical_path = data_dir + "/clinical.csv";
    c.expr_path = data_dir + "/expr.csv";
    c.cna_path = data_dir + "/cna.csv";
    c.sample_map_path = data_dir + "/sample_map.csv";
    c.output_dir = out_dir;
    c.seed = 7;
    c.clinical_features = std::vector<std::string>{"clin_01", "clin_02", "clin_03"};
    c.expr.tsvd_k = 4;
    c.cna.tsvd_k = 4;
    c.model_kind = "coxnet";
    c.coxnet.lambda = {0.05, 0.01};
    c.coxnet.alpha = {0.5};
    c.isotonic = true;
    c.fairness_variables = {{"age", SubgroupSpec::Kind::kAgeBins},
                            {"er_status", SubgroupSpec::Kind::kCategorical}};
    c.min_subgroup_size = 20;
    c.bootstrap_b = 60;
    c.mask_rho = 0.25;
    c.config_hash = compute_config_hash(c);
    return c;
}

std::string scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "survaudit_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

const std::vector<std::string> kArtifacts = {
    "manifest.json",  "pipeline.json", "model.json",   "metrics.json",
    "roc.csv",        "pr.csv",        "calibration.csv", "fairness.csv",
    "parity.csv",     "bootstrap.csv", "ablation.csv", "report.md",
};

}  // namespace

TEST_CASE("synthetic cohorts are deterministic and hit the censoring target") {
    const auto spec = small_spec(3);
    const auto a = synth_cohort(spec);
    const auto b = synth_cohort(spec);
    CHECK(to_csv(a.clinical) == to_csv(b.clinical));
    CHECK(to_csv(a.expr) == to_csv(b.expr));
    CHECK(to_csv(a.cna) == to_csv(b.cna));
    CHECK(to_csv(a.sample_map) == to_csv(b.sample_map));

    double events = 0;
    for (int e : a.events) events += e;
    const double event_rate = events / static_cast<double>(a.events.size());
    CHECK(std::abs(event_rate - (1.0 - spec.censor_rate)) <= 0.05);
}

TEST_CASE("a strong single coefficient gives the oracle high discrimination") {
    SyntheticSpec spec = small_spec(5);
    spec.n_patients = 800;
    spec.coefficients = {{4, 2.5}};
    const auto cohort = synth_cohort(spec);
    std::vector<int> y;
    std::vector<double> eta;
    for (std::size_t i = 0; i < cohort.patient_ids.size(); ++i) {
        if (cohort.events[i] == 1 && cohort.times[i] <= 60.0) {
            y.push_back(1);
        } else if (cohort.times[i] >= 60.0) {
            y.push_back(0);
        } else {
            continue;
        }
        eta.push_back(cohort.true_eta[i]);
    }
    CHECK(auroc(y, eta) >= 0.9);
}

TEST_CASE("no-signal data trains to chance-level discrimination") {
    SyntheticSpec spec = small_spec(11);
    spec.n_patients = 1000;
    spec.coefficients.clear();
    const auto data_dir = scratch_dir("null_data");
    write_synthetic(synth_cohort(spec), data_dir);
    auto config = small_config(data_dir, scratch_dir("null_out"));
    config.coxnet.lambda = {0.05};
    config.config_hash = compute_config_hash(config);
    stage_split(config);
    stage_prepare(config);
    stage_train(config);
    stage_calibrate(config);

    const CohortData cohort = [&] {
        CohortData c;
        const auto table = load_artifact_csv(output_path(config, "outcomes.csv"), "");
        for (const auto& r : table.rows) {
            c.patient_ids.push_back(r[0]);
            c.times.push_back(parse_double(r[1], "t"));
            c.events.push_back(static_cast<int>(parse_double(r[2], "e")));
        }
        const auto splits = load_artifact_csv(output_path(config, "splits.csv"), "");
        for (const auto& r : splits.rows) c.split_of[r[0]] = split_from_name(r[1]);
        return c;
    }();
    const PipelineState state = pipeline_state_from_json(
        load_artifact_json(output_path(config, "pipeline.json"), config.config_hash));
    const TrainedModel model =
        model_from_json(load_artifact_json(output_path(config, "model.json"), config.config_hash));

    // model AUROC over every defined label in the cohort
    FeatureMatrix features;
    {
        const auto table = load_artifact_csv(output_path(config, "features.csv"), "");
        features.columns.assign(table.header.begin() + 1, table.header.end());
        features.blocks = state.blocks;
        features.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                               static_cast<Eigen::Index>(features.columns.size()));
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            features.patient_ids.push_back(table.rows[r][0]);
            for (std::size_t c = 0; c < features.columns.size(); ++c) {
                features.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    parse_double(table.rows[r][c + 1], "v");
            }
        }
    }
    std::vector<int> y;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < cohort.patient_ids.size(); ++i) {
        if (cohort.events[i] == 1 && cohort.times[i] <= 60.0) {
            y.push_back(1);
            rows.push_back(i);
        } else if (cohort.times[i] >= 60.0) {
            y.push_back(0);
            rows.push_back(i);
        }
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), features.values.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        x.row(static_cast<Eigen::Index>(k)) = features.values.row(static_cast<Eigen::Index>(rows[k]));
    }
    const auto p = model.risk60(x, 60.0, false);
    CHECK(std::abs(auroc(y, p) - 0.5) <= 0.05);
}

TEST_CASE("full pipeline: artifacts, determinism, stage isolation, leakage gate") {
    const auto data_dir = scratch_dir("pipe_data");
    write_synthetic(synth_cohort(small_spec(3)), data_dir);

    auto config = small_config(data_dir, scratch_dir("pipe_out_a"));
    run_pipeline(config, 1);
    for (const auto& name : kArtifacts) {
        CHECK_MESSAGE(fs::exists(output_path(config, name)), name);
    }

    // byte identity under a rerun into a fresh directory, threads varied
    auto config_b = config;
    config_b.output_dir = scratch_dir("pipe_out_b");
    CHECK(config_b.config_hash == config.config_hash);
    run_pipeline(config_b, 3);
    for (const auto& name : kArtifacts) {
        CHECK_MESSAGE(read_file(output_path(config, name)) ==
                          read_file(output_path(config_b, name)),
                      name);
    }

    // stage isolation: rerunning single stages rewrites identical bytes
    const std::string metrics_before = read_file(output_path(config, "metrics.json"));
    stage_evaluate(config);
    CHECK(read_file(output_path(config, "metrics.json")) == metrics_before);
    const std::string model_before = read_file(output_path(config, "model.json"));
    stage_calibrate(config);
    CHECK(read_file(output_path(config, "model.json")) == model_before);

    CHECK(leakage_check(config));

    // manifest bookkeeping: split sizes sum to the cohort
    const auto manifest = load_artifact_json(output_path(config, "manifest.json"), config.config_hash);
    std::size_t total = 0;
    for (const auto& [name, s] : manifest.at("splits").items()) {
        total += s.at("size").get<std::size_t>();
    }
    CHECK(total == manifest.at("cohort_size").get<std::size_t>());

    // model JSON round-trips to identical predictions
    const TrainedModel model =
        model_from_json(load_artifact_json(output_path(config, "model.json"), config.config_hash));
    const TrainedModel reloaded = model_from_json(nlohmann::json::parse(
        model_to_json(model, config.config_hash)));
    Eigen::MatrixXd probe(2, model.columns.size());
    probe.setConstant(0.3);
    const auto pa = model.risk60(probe, 60.0, true);
    const auto pb = reloaded.risk60(probe, 60.0, true);
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);

    // the ablation "all" row reproduces the headline test metrics exactly
    const auto metrics = load_artifact_json(output_path(config, "metrics.json"), config.config_hash);
    bool found_all = false;
    for (const auto& row : metrics.at("ablation")) {
        if (row.at("config") == "all") {
            found_all = true;
            CHECK(row.at("auroc").get<double>() == metrics.at("test").at("auroc").get<double>());
            CHECK(row.at("brier").get<double>() == metrics.at("test").at("brier").get<double>());
        }
    }
    CHECK(found_all);

    // report mirrors the overall table rows
    const std::string report = read_file(output_path(config, "report.md"));
    for (const char* needle :
         {"AUROC", "AUPRC", "Brier score", "Expected calibration error (ECE)",
          "Calibration intercept", "Calibration slope", "Outcome prevalence",
          "Mean predicted risk"}) {
        CHECK_MESSAGE(report.find(needle) != std::string::npos, needle);
    }
}

TEST_CASE("fitted pipeline state is invariant to input row order") {
    const auto data_dir = scratch_dir("order_data");
    write_synthetic(synth_cohort(small_spec(13)), data_dir);
    auto config = small_config(data_dir, scratch_dir("order_out"));
    stage_split(config);
    const CohortData cohort = [&] {
        CohortData c;
        const auto table = load_artifact_csv(output_path(config, "outcomes.csv"), "");
        for (const auto& r : table.rows) {
            c.patient_ids.push_back(r[0]);
            c.times.push_back(parse_double(r[1], "t"));
            c.events.push_back(static_cast<int>(parse_double(r[2], "e")));
        }
        const auto splits = load_artifact_csv(output_path(config, "splits.csv"), "");
        for (const auto& r : splits.rows) c.split_of[r[0]] = split_from_name(r[1]);
        return c;
    }();
    const auto train_ids = cohort.ids_in(Split::kTrain);

    RawInputs inputs = load_raw_inputs(config);
    const auto base = prepare_features(config, inputs, cohort.patient_ids, train_ids);

    SplitMix64 rng(2);
    deterministic_shuffle(inputs.clinical.rows, rng);
    deterministic_shuffle(inputs.expr, rng);
    deterministic_shuffle(inputs.cna, rng);
    const auto shuffled = prepare_features(config, inputs, cohort.patient_ids, train_ids);

    CHECK(pipeline_state_to_json(base.state, config.config_hash) ==
          pipeline_state_to_json(shuffled.state, config.config_hash));
    CHECK((base.features.values - shuffled.features.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gbcox pipeline runs end to end and reruns identically") {
    const auto data_dir = scratch_dir("gb_data");
    write_synthetic(synth_cohort(small_spec(21)), data_dir);
    auto config = small_config(data_dir, scratch_dir("gb_out_a"));
    config.model_kind = "gbcox";
    config.gbcox.max_depth = {2};
    config.gbcox.learning_rate = {0.1};
    config.gbcox.rounds = {40};
    config.gbcox.subsample = {0.8};
    config.bootstrap_b = 40;
    config.config_hash = compute_config_hash(config);
    run_pipeline(config, 2);
    for (const auto& name : kArtifacts) {
        CHECK_MESSAGE(fs::exists(output_path(config, name)), name);
    }
    const auto metrics = load_artifact_json(output_path(config, "metrics.json"), config.config_hash);
    CHECK(metrics.at("model") == "gbcox");
    CHECK(metrics.at("test").at("auroc").get<double>() > 0.5);

    auto config_b = config;
    config_b.output_dir = scratch_dir("gb_out_b");
    run_pipeline(config_b, 1);
    CHECK(read_file(output_path(config, "model.json")) ==
          read_file(output_path(config_b, "model.json")));
    CHECK(read_file(output_path(config, "metrics.json")) ==
          read_file(output_path(config_b, "metrics.json")));
}

TEST_CASE("report renders placeholders when bootstrap is absent") {
    nlohmann::json metrics;
    metrics["schema_version"] = 1;
    metrics["config_hash"] = "fnv1a64:test";
    metrics["model"] = "coxnet";
    metrics["test"] = {{"n", 10},          {"prevalence", 0.2},   {"mean_predicted", 0.21},
                       {"auroc", 0.9},     {"average_precision", 0.7}, {"brier", 0.1},
                       {"ece", 0.04},      {"intercept", 0.0},    {"slope", 1.0},
                       {"intercept_fixed_slope", 0.0}, {"slope_flagged", false}, {"calibrated", false}};
    const std::string report = render_report(metrics);
    CHECK(report.find("| AUROC | 0.900 | — |") != std::string::npos);
    CHECK(report.find("_Fairness audit not run._") != std::string::npos);
    CHECK(report.find("_Bootstrap intervals not computed._") != std::string::npos);
    CHECK(report.find("_Stress tests not run._") != std::string::npos);
    CHECK(report.find("_Ablation not run._") != std::string::npos);
    CHECK(render_report(metrics) == report);
}

TEST_CASE("config loading validates inputs and hashing ignores paths") {
    const auto dir = scratch_dir("cfg");
    const std::string path = dir + "/config.json";
    write_file(path, R"({"schema_version":1,"seed":4,"paths":{"clinical":")" + dir +
                         R"(/missing.csv","expression":"x","cna":"y","sample_map":"z"}})");
    CHECK_THROWS_AS(load_config(path), ConfigError);

    PipelineConfig a;
    a.seed = 9;
    a.config_hash = compute_config_hash(a);
    PipelineConfig b = a;
    b.output_dir = "elsewhere";
    b.clinical_path = "other.csv";
    CHECK(compute_config_hash(b) == a.config_hash);
    b.seed = 10;
    CHECK(compute_config_hash(b) != a.config_hash);

    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"schema_version", 1}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"schema_version", 2}, {"seed", 1}}),
                    ConfigError);
}

TEST_CASE("artifacts from another config are rejected") {
    const auto data_dir = scratch_dir("hash_data");
    write_synthetic(synth_cohort(small_spec(3)), data_dir);
    auto config = small_config(data_dir, scratch_dir("hash_out"));
    stage_split(config);
    auto tampered = config;
    tampered.seed = 8;
    tampered.config_hash = compute_config_hash(tampered);
    CHECK_THROWS_AS(stage_prepare(tampered), DataError);
}
