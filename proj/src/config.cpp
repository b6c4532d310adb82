#include "survaudit/config.hpp"

#include <filesystem>

namespace survaudit {

namespace {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

FilterConfig filter_from_json(const nlohmann::json& j) {
    FilterConfig f;
    maybe(j, "tau_cov", f.tau_cov);
    maybe(j, "tau_var", f.tau_var);
    if (j.contains("top_k") && !j.at("top_k").is_null()) f.top_k = j.at("top_k").get<std::size_t>();
    return f;
}

nlohmann::json filter_to_json(const FilterConfig& f) {
    nlohmann::json j;
    j["tau_cov"] = f.tau_cov;
    j["tau_var"] = f.tau_var;
    j["top_k"] = f.top_k ? nlohmann::json(*f.top_k) : nlohmann::json(nullptr);
    return j;
}

ModalityConfig modality_from_json(const nlohmann::json& j) {
    ModalityConfig m;
    m.filter = filter_from_json(j);
    maybe(j, "tsvd_k", m.tsvd_k);
    return m;
}

nlohmann::json modality_to_json(const ModalityConfig& m) {
    nlohmann::json j = filter_to_json(m.filter);
    j["tsvd_k"] = m.tsvd_k;
    return j;
}

std::vector<FeatureBlock> blocks_from_json(const nlohmann::json& arr) {
    std::vector<FeatureBlock> out;
    for (const auto& v : arr) out.push_back(block_from_name(v.get<std::string>()));
    return out;
}

nlohmann::json blocks_to_json(const std::vector<FeatureBlock>& blocks) {
    nlohmann::json arr = nlohmann::json::array();
    for (FeatureBlock b : blocks) arr.push_back(block_name(b));
    return arr;
}

}  // namespace

PipelineConfig config_from_json(const nlohmann::json& j) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1) {
        throw ConfigError("config needs schema_version 1");
    }
    if (!j.contains("seed")) throw ConfigError("config must set an explicit seed");

    PipelineConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        maybe(p, "clinical", c.clinical_path);
        maybe(p, "expression", c.expr_path);
        maybe(p, "cna", c.cna_path);
        maybe(p, "sample_map", c.sample_map_path);
        maybe(p, "output_dir", c.output_dir);
    }
    if (j.contains("split")) {
        const auto& s = j.at("split");
        maybe(s, "train", c.fractions.train);
        maybe(s, "validation", c.fractions.validation);
        maybe(s, "test", c.fractions.test);
    }
    maybe(j, "horizon_months", c.horizon_months);
    if (j.contains("aggregation")) {
        const auto name = j.at("aggregation").get<std::string>();
        if (name == "mean") c.aggregation = AggregationPolicy::kMean;
        else if (name == "first") c.aggregation = AggregationPolicy::kFirst;
        else throw ConfigError("aggregation must be 'mean' or 'first'");
    }
    if (j.contains("clinical_features") && !j.at("clinical_features").is_null()) {
        c.clinical_features = j.at("clinical_features").get<std::vector<std::string>>();
    }
    if (j.contains("features")) {
        const auto& f = j.at("features");
        if (f.contains("expr")) c.expr = modality_from_json(f.at("expr"));
        if (f.contains("cna")) c.cna = modality_from_json(f.at("cna"));
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        maybe(m, "kind", c.model_kind);
        if (c.model_kind != "coxnet" && c.model_kind != "gbcox") {
            throw ConfigError("model.kind must be 'coxnet' or 'gbcox'");
        }
        if (m.contains("coxnet_grid")) {
            const auto& g = m.at("coxnet_grid");
            maybe(g, "lambda", c.coxnet.lambda);
            maybe(g, "alpha", c.coxnet.alpha);
            maybe(g, "tol", c.coxnet.tol);
            maybe(g, "max_iter", c.coxnet.max_iter);
        }
        if (m.contains("gbcox_grid")) {
            const auto& g = m.at("gbcox_grid");
            maybe(g, "max_depth", c.gbcox.max_depth);
            maybe(g, "learning_rate", c.gbcox.learning_rate);
            maybe(g, "rounds", c.gbcox.rounds);
            maybe(g, "lambda_tree", c.gbcox.lambda_tree);
            maybe(g, "subsample", c.gbcox.subsample);
            maybe(g, "gamma", c.gbcox.gamma);
            maybe(g, "min_child_weight", c.gbcox.min_child_weight);
        }
    }
    if (j.contains("calibration")) {
        const auto& cal = j.at("calibration");
        maybe(cal, "ece_bins", c.ece_bins);
        maybe(cal, "curve_bins", c.curve_bins);
        maybe(cal, "isotonic", c.isotonic);
    }
    if (j.contains("fairness")) {
        const auto& f = j.at("fairness");
        if (f.contains("variables")) {
            for (const auto& v : f.at("variables")) {
                FairnessVariableConfig var;
                var.name = v.at("name").get<std::string>();
                std::string kind = "categorical";
                maybe(v, "kind", kind);
                if (kind == "age") var.kind = SubgroupSpec::Kind::kAgeBins;
                else if (kind == "categorical") var.kind = SubgroupSpec::Kind::kCategorical;
                else throw ConfigError("fairness variable kind must be 'categorical' or 'age'");
                c.fairness_variables.push_back(var);
            }
        }
        maybe(f, "min_size", c.min_subgroup_size);
        maybe(f, "threshold", c.decision_threshold);
    }
    if (j.contains("robustness")) {
        const auto& r = j.at("robustness");
        maybe(r, "bootstrap_b", c.bootstrap_b);
        maybe(r, "bootstrap_metrics", c.bootstrap_metrics);
        maybe(r, "mask_rho", c.mask_rho);
        if (r.contains("mask_scenarios")) {
            c.mask_scenarios.clear();
            for (const auto& s : r.at("mask_scenarios")) c.mask_scenarios.push_back(blocks_from_json(s));
        }
        maybe(r, "ablation", c.run_ablation);
    }

    if (c.fractions.train <= 0 || c.fractions.validation <= 0 || c.fractions.test <= 0) {
        throw ConfigError("split fractions must be positive");
    }
    if (c.horizon_months <= 0) throw ConfigError("horizon_months must be positive");
    if (c.decision_threshold < 0.0 || c.decision_threshold > 1.0) {
        throw ConfigError("fairness threshold must lie in [0,1]");
    }
    if (c.mask_rho < 0.0 || c.mask_rho > 1.0) throw ConfigError("mask_rho must lie in [0,1]");
    c.config_hash = compute_config_hash(c);
    return c;
}

nlohmann::json config_to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["seed"] = c.seed;
    j["paths"] = {{"clinical", c.clinical_path},
                  {"expression", c.expr_path},
                  {"cna", c.cna_path},
                  {"sample_map", c.sample_map_path},
                  {"output_dir", c.output_dir}};
    j["split"] = {{"train", c.fractions.train},
                  {"validation", c.fractions.validation},
                  {"test", c.fractions.test}};
    j["horizon_months"] = c.horizon_months;
    j["aggregation"] = c.aggregation == AggregationPolicy::kMean ? "mean" : "first";
    j["clinical_features"] =
        c.clinical_features ? nlohmann::json(*c.clinical_features) : nlohmann::json(nullptr);
    j["features"] = {{"expr", modality_to_json(c.expr)}, {"cna", modality_to_json(c.cna)}};
    j["model"] = {
        {"kind", c.model_kind},
        {"coxnet_grid",
         {{"lambda", c.coxnet.lambda},
          {"alpha", c.coxnet.alpha},
          {"tol", c.coxnet.tol},
          {"max_iter", c.coxnet.max_iter}}},
        {"gbcox_grid",
         {{"max_depth", c.gbcox.max_depth},
          {"learning_rate", c.gbcox.learning_rate},
          {"rounds", c.gbcox.rounds},
          {"lambda_tree", c.gbcox.lambda_tree},
          {"subsample", c.gbcox.subsample},
          {"gamma", c.gbcox.gamma},
          {"min_child_weight", c.gbcox.min_child_weight}}}};
    j["calibration"] = {{"ece_bins", c.ece_bins}, {"curve_bins", c.curve_bins}, {"isotonic", c.isotonic}};
    nlohmann::json vars = nlohmann::json::array();
    for (const auto& v : c.fairness_variables) {
        vars.push_back({{"name", v.name},
                        {"kind", v.kind == SubgroupSpec::Kind::kAgeBins ? "age" : "categorical"}});
    }
    j["fairness"] = {{"variables", vars},
                     {"min_size", c.min_subgroup_size},
                     {"threshold", c.decision_threshold}};
    nlohmann::json scenarios = nlohmann::json::array();
    for (const auto& s : c.mask_scenarios) scenarios.push_back(blocks_to_json(s));
    j["robustness"] = {{"bootstrap_b", c.bootstrap_b},
                       {"bootstrap_metrics", c.bootstrap_metrics},
                       {"mask_rho", c.mask_rho},
                       {"mask_scenarios", scenarios},
                       {"ablation", c.run_ablation}};
    return j;
}

std::string compute_config_hash(const PipelineConfig& config) {
    nlohmann::json j = config_to_json(config);
    j.erase("paths");
    return content_hash(j.dump());
}

PipelineConfig load_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config " + path + ": " + e.what());
    }
    PipelineConfig c;
    try {
        c = config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad config " + path + ": " + e.what());
    }
    for (const std::string* p : {&c.clinical_path, &c.expr_path, &c.cna_path, &c.sample_map_path}) {
        if (p->empty()) throw ConfigError("config is missing an input path");
        if (!std::filesystem::exists(*p)) throw ConfigError("input file does not exist: " + *p);
    }
    return c;
}

}  // namespace survaudit
