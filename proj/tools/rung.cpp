// Command-line driver: rung <command> --config FILE [--out DIR] [--seed N]
#include <CLI11.hpp>

#include <iostream>

#include "rung/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Robust graph smoothing experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string chosen;

    for (const auto& name : rung::command_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("-c,--config", config_path, "JSON config or a previous manifest.json")->check(CLI::ExistingFile);
        sub->add_option("-o,--out", out_dir, "output directory (overrides output_dir)");
        sub->add_option("-s,--seed", seed, "root seed (overrides seed)");
        sub->callback([&chosen, name] { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        rung::ExperimentConfig cfg = config_path.empty() ? rung::ExperimentConfig{} : rung::load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (seed) cfg.seed = *seed;
        const auto result = rung::run_command(chosen, cfg);
        for (const auto& note : result.notes) std::cerr << "note: " << note << '\n';
        for (const auto& a : result.artifacts) std::cout << (cfg.output_dir / a).string() << '\n';
    } catch (const rung::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
