#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "survaudit/pipeline.hpp"
#include "survaudit/synth.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    int threads = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> model_kind;
    std::optional<bool> isotonic;
    std::optional<std::size_t> bootstrap_b;
    std::optional<double> mask_rho;
    std::optional<std::size_t> min_size;
    std::optional<double> threshold;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("-c,--config", flags.config_path, "pipeline config JSON")->required();
    cmd->add_option("-t,--threads", flags.threads, "parallelism bound (never changes results)");
    cmd->add_option("--seed", flags.seed, "override config seed");
    cmd->add_option("--out", flags.out_dir, "override output directory");
    cmd->add_option("--model", flags.model_kind, "override model kind (coxnet|gbcox)");
    cmd->add_flag("--isotonic,!--no-isotonic", flags.isotonic, "toggle isotonic recalibration");
    cmd->add_option("--bootstrap-b", flags.bootstrap_b, "override bootstrap replicate count");
    cmd->add_option("--rho", flags.mask_rho, "override masking fraction");
    cmd->add_option("--min-size", flags.min_size, "override minimum subgroup size");
    cmd->add_option("--tau", flags.threshold, "override decision threshold");
}

survaudit::PipelineConfig effective_config(const CommonFlags& flags) {
    survaudit::PipelineConfig config = survaudit::load_config(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    if (flags.out_dir) config.output_dir = *flags.out_dir;
    if (flags.model_kind) {
        if (*flags.model_kind != "coxnet" && *flags.model_kind != "gbcox") {
            throw survaudit::ConfigError("--model must be coxnet or gbcox");
        }
        config.model_kind = *flags.model_kind;
    }
    if (flags.isotonic) config.isotonic = *flags.isotonic;
    if (flags.bootstrap_b) config.bootstrap_b = *flags.bootstrap_b;
    if (flags.mask_rho) config.mask_rho = *flags.mask_rho;
    if (flags.min_size) config.min_subgroup_size = *flags.min_size;
    if (flags.threshold) config.decision_threshold = *flags.threshold;
    config.config_hash = survaudit::compute_config_hash(config);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"survaudit: censoring-aware survival modeling and audit pipeline"};
    app.require_subcommand(1);

    using StageFn = void (*)(const survaudit::PipelineConfig&, int);
    const std::vector<std::pair<std::string, StageFn>> stages = {
        {"split", survaudit::stage_split},         {"prepare", survaudit::stage_prepare},
        {"train", survaudit::stage_train},         {"calibrate", survaudit::stage_calibrate},
        {"evaluate", survaudit::stage_evaluate},   {"audit", survaudit::stage_audit},
        {"bootstrap", survaudit::stage_bootstrap}, {"stress", survaudit::stage_stress},
        {"ablate", survaudit::stage_ablate},       {"report", survaudit::stage_report},
    };

    CommonFlags flags;
    std::vector<std::pair<CLI::App*, StageFn>> stage_cmds;
    for (const auto& [name, fn] : stages) {
        CLI::App* cmd = app.add_subcommand(name, "run the " + name + " stage");
        add_common(cmd, flags);
        stage_cmds.emplace_back(cmd, fn);
    }
    CLI::App* run_cmd = app.add_subcommand("run", "run every stage in order");
    add_common(run_cmd, flags);

    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic cohort");
    std::string synth_spec_path, synth_out_dir = "synthetic";
    synth_cmd->add_option("-s,--spec", synth_spec_path, "synthetic spec JSON")->required();
    synth_cmd->add_option("-o,--out", synth_out_dir, "directory for the generated CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (synth_cmd->parsed()) {
            nlohmann::json spec_json;
            try {
                spec_json = nlohmann::json::parse(survaudit::read_file(synth_spec_path));
            } catch (const nlohmann::json::exception& e) {
                throw survaudit::ConfigError(std::string("bad synthetic spec: ") + e.what());
            }
            const auto spec = survaudit::synthetic_spec_from_json(spec_json);
            survaudit::write_synthetic(survaudit::synth_cohort(spec), synth_out_dir);
            return 0;
        }
        const survaudit::PipelineConfig config = effective_config(flags);
        if (run_cmd->parsed()) {
            survaudit::run_pipeline(config, flags.threads);
            return 0;
        }
        for (const auto& [cmd, fn] : stage_cmds) {
            if (cmd->parsed()) {
                fn(config, flags.threads);
                return 0;
            }
        }
    } catch (const survaudit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const survaudit::DataError& e) {
        std::cerr << "data validation error: " << e.what() << "\n";
        return 3;
    } catch (const survaudit::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
