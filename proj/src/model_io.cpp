#include "survaudit/model_io.hpp"

namespace survaudit {

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
        }
    }
    return m;
}

nlohmann::json stats_to_json(const ColumnStats& stats) {
    nlohmann::json j;
    j["impute_mean"] = stats.impute_mean;
    j["sd"] = stats.sd;
    j["constant"] = stats.constant;
    return j;
}

ColumnStats stats_from_json(const nlohmann::json& j) {
    ColumnStats s;
    s.impute_mean = j.at("impute_mean").get<std::vector<double>>();
    s.sd = j.at("sd").get<std::vector<double>>();
    s.constant = j.at("constant").get<std::vector<bool>>();
    return s;
}

nlohmann::json tsvd_to_json(const TsvdProjection& proj) {
    nlohmann::json j;
    j["center"] = vector_to_json(proj.center);
    j["singular_values"] = vector_to_json(proj.singular_values);
    j["basis"] = matrix_to_json(proj.basis);
    return j;
}

TsvdProjection tsvd_from_json(const nlohmann::json& j) {
    TsvdProjection p;
    p.center = vector_from_json(j.at("center"));
    p.singular_values = vector_from_json(j.at("singular_values"));
    p.basis = matrix_from_json(j.at("basis"));
    return p;
}

nlohmann::json omics_to_json(const OmicsBlockState& state) {
    nlohmann::json j;
    j["block"] = block_name(state.block);
    j["retained"] = state.retained;
    j["stats"] = stats_to_json(state.stats);
    j["tsvd"] = state.projection ? tsvd_to_json(*state.projection) : nlohmann::json(nullptr);
    return j;
}

OmicsBlockState omics_from_json(const nlohmann::json& j) {
    OmicsBlockState s;
    s.block = block_from_name(j.at("block").get<std::string>());
    s.retained = j.at("retained").get<std::vector<std::string>>();
    s.stats = stats_from_json(j.at("stats"));
    if (!j.at("tsvd").is_null()) s.projection = tsvd_from_json(j.at("tsvd"));
    return s;
}

nlohmann::json clinical_to_json(const ClinicalEncoder& enc) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : enc.columns) {
        cols.push_back({{"name", c.name},
                        {"source", c.source},
                        {"level", c.level ? nlohmann::json(*c.level) : nlohmann::json(nullptr)}});
    }
    nlohmann::json j;
    j["columns"] = std::move(cols);
    j["categorical_levels"] = enc.categorical_levels;
    j["stats"] = stats_to_json(enc.stats);
    return j;
}

ClinicalEncoder clinical_from_json(const nlohmann::json& j) {
    ClinicalEncoder enc;
    for (const auto& c : j.at("columns")) {
        ClinicalEncoder::Column col;
        col.name = c.at("name").get<std::string>();
        col.source = c.at("source").get<std::string>();
        if (!c.at("level").is_null()) col.level = c.at("level").get<std::string>();
        enc.columns.push_back(std::move(col));
    }
    enc.categorical_levels =
        j.at("categorical_levels").get<std::map<std::string, std::vector<std::string>>>();
    enc.stats = stats_from_json(j.at("stats"));
    return enc;
}

}  // namespace

std::string pipeline_state_to_json(const PipelineState& state, const std::string& config_hash) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["config_hash"] = config_hash;
    j["clinical"] = clinical_to_json(state.clinical);
    j["expr"] = omics_to_json(state.expr);
    j["cna"] = omics_to_json(state.cna);
    j["columns"] = state.columns;
    nlohmann::json blocks = nlohmann::json::array();
    for (FeatureBlock b : state.blocks) blocks.push_back(block_name(b));
    j["blocks"] = std::move(blocks);
    return j.dump(2) + "\n";
}

PipelineState pipeline_state_from_json(const nlohmann::json& j) {
    PipelineState s;
    s.clinical = clinical_from_json(j.at("clinical"));
    s.expr = omics_from_json(j.at("expr"));
    s.cna = omics_from_json(j.at("cna"));
    s.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& b : j.at("blocks")) s.blocks.push_back(block_from_name(b.get<std::string>()));
    return s;
}

nlohmann::json breslow_to_json(const BreslowTable& table) {
    return {{"times", table.times}, {"cumhaz", table.cumhaz}};
}

BreslowTable breslow_from_json(const nlohmann::json& j) {
    BreslowTable t;
    t.times = j.at("times").get<std::vector<double>>();
    t.cumhaz = j.at("cumhaz").get<std::vector<double>>();
    return t;
}

const BreslowTable& TrainedModel::baseline() const {
    if (coxnet) return coxnet->baseline;
    if (gbcox) return gbcox->baseline;
    throw DataError("model has no fitted learner");
}

Eigen::VectorXd TrainedModel::linear_predictor(const Eigen::MatrixXd& X) const {
    if (coxnet) return coxnet->linear_predictor(X);
    if (gbcox) return gbcox->linear_predictor(X);
    throw DataError("model has no fitted learner");
}

std::vector<double> TrainedModel::risk60(const Eigen::MatrixXd& X, double horizon,
                                         bool calibrated) const {
    const Eigen::VectorXd eta = linear_predictor(X);
    std::vector<double> p =
        fixed_horizon_risk({eta.data(), static_cast<std::size_t>(eta.size())}, baseline(), horizon);
    if (calibrated && isotonic) p = apply_isotonic(*isotonic, p);
    return p;
}

std::string model_to_json(const TrainedModel& model, const std::string& config_hash) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["config_hash"] = config_hash;
    j["kind"] = model.kind;
    j["columns"] = model.columns;
    j["selection"] = model.selection;
    if (model.coxnet) {
        j["coxnet"] = {{"coefficients", vector_to_json(model.coxnet->beta)},
                       {"lambda", model.coxnet->lambda},
                       {"alpha", model.coxnet->alpha},
                       {"converged", model.coxnet->converged},
                       {"iterations", model.coxnet->iterations},
                       {"baseline", breslow_to_json(model.coxnet->baseline)}};
    }
    if (model.gbcox) {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& tree : model.gbcox->trees) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : tree.nodes) {
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"leaf", n.leaf_value}});
            }
            trees.push_back({{"nodes", std::move(nodes)}});
        }
        const auto& p = model.gbcox->params;
        j["gbcox"] = {{"trees", std::move(trees)},
                      {"params",
                       {{"rounds", p.rounds},
                        {"max_depth", p.max_depth},
                        {"learning_rate", p.learning_rate},
                        {"lambda_tree", p.lambda_tree},
                        {"gamma", p.gamma},
                        {"min_child_weight", p.min_child_weight},
                        {"subsample", p.subsample}}},
                      {"seed", model.gbcox->seed},
                      {"baseline", breslow_to_json(model.gbcox->baseline)}};
    }
    j["isotonic"] = model.isotonic ? nlohmann::json{{"breakpoints", model.isotonic->breakpoints},
                                                    {"values", model.isotonic->values}}
                                   : nlohmann::json(nullptr);
    return j.dump(2) + "\n";
}

TrainedModel model_from_json(const nlohmann::json& j) {
    TrainedModel m;
    m.kind = j.at("kind").get<std::string>();
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.selection = j.value("selection", nlohmann::json());
    if (j.contains("coxnet") && !j.at("coxnet").is_null()) {
        CoxNetModel cm;
        cm.columns = m.columns;
        cm.beta = vector_from_json(j.at("coxnet").at("coefficients"));
        cm.lambda = j.at("coxnet").at("lambda").get<double>();
        cm.alpha = j.at("coxnet").at("alpha").get<double>();
        cm.converged = j.at("coxnet").at("converged").get<bool>();
        cm.iterations = j.at("coxnet").at("iterations").get<int>();
        cm.baseline = breslow_from_json(j.at("coxnet").at("baseline"));
        m.coxnet = std::move(cm);
    }
    if (j.contains("gbcox") && !j.at("gbcox").is_null()) {
        GbcoxModel gm;
        gm.columns = m.columns;
        const auto& g = j.at("gbcox");
        const auto& p = g.at("params");
        gm.params.rounds = p.at("rounds").get<int>();
        gm.params.max_depth = p.at("max_depth").get<int>();
        gm.params.learning_rate = p.at("learning_rate").get<double>();
        gm.params.lambda_tree = p.at("lambda_tree").get<double>();
        gm.params.gamma = p.at("gamma").get<double>();
        gm.params.min_child_weight = p.at("min_child_weight").get<double>();
        gm.params.subsample = p.at("subsample").get<double>();
        gm.seed = g.at("seed").get<std::uint64_t>();
        gm.baseline = breslow_from_json(g.at("baseline"));
        for (const auto& tree_json : g.at("trees")) {
            RegressionTree tree;
            for (const auto& n : tree_json.at("nodes")) {
                TreeNode node;
                node.feature = n.at("feature").get<int>();
                node.threshold = n.at("threshold").get<double>();
                node.left = n.at("left").get<int>();
                node.right = n.at("right").get<int>();
                node.leaf_value = n.at("leaf").get<double>();
                tree.nodes.push_back(node);
            }
            gm.trees.push_back(std::move(tree));
        }
        m.gbcox = std::move(gm);
    }
    if (j.contains("isotonic") && !j.at("isotonic").is_null()) {
        IsotonicMap map;
        map.breakpoints = j.at("isotonic").at("breakpoints").get<std::vector<double>>();
        map.values = j.at("isotonic").at("values").get<std::vector<double>>();
        m.isotonic = std::move(map);
    }
    return m;
}

nlohmann::json load_artifact_json(const std::string& path, const std::string& expected_hash) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("cannot parse artifact " + path + ": " + e.what());
    }
    const std::string hash = j.value("config_hash", "");
    if (!expected_hash.empty() && hash != expected_hash) {
        throw DataError("artifact " + path + " was produced under a different config (hash " + hash +
                        ", expected " + expected_hash + ")");
    }
    return j;
}

CsvTable load_artifact_csv(const std::string& path, const std::string& expected_hash) {
    const std::string text = read_file(path);
    if (!expected_hash.empty()) {
        const std::string needle = "# config_hash=" + expected_hash;
        if (text.rfind(needle, 0) != 0) {
            throw DataError("artifact " + path + " was produced under a different config");
        }
    }
    return parse_csv(text, path);
}

}  // namespace survaudit
