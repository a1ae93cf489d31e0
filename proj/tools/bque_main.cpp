#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "bque/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"bque - billiard quantum ergodicity laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    double kmin = 0, kmax = 0;
    std::string out_dir;

    const std::vector<std::string> stages = {"classical", "solve", "elements",
                                             "stats", "report", "verify"};
    for (const auto& name : stages) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file (key = value)");
        sub->add_option("--kmin", kmin, "override solver.k_min");
        sub->add_option("--kmax", kmax, "override solver.k_max");
        sub->add_option("--out", out_dir, "override run.output_dir");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string stage = app.get_subcommands().front()->get_name();

    try {
        bque::PipelineConfig cfg = config_path.empty() ? bque::PipelineConfig{}
                                                       : bque::PipelineConfig::load(config_path);
        if (kmin > 0) cfg.solver.k_min = kmin;
        if (kmax > 0) cfg.solver.k_max = kmax;
        if (!out_dir.empty()) cfg.run.output_dir = out_dir;
        return bque::run_pipeline(cfg, stage);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error (validation): %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
