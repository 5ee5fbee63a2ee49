// Command-line driver for the query-journey mining and serving pipeline.
// Exit codes: 0 success, 1 configuration error, 2 stage failure.

#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "accelerator/config.hpp"
#include "accelerator/errors.hpp"
#include "accelerator/pipeline.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string mock_fixture_override;
};

accel::PipelineConfig load(const CliOptions& opts) {
    auto cfg = accel::load_config(opts.config_path);
    if (opts.seed_override) cfg.seed = *opts.seed_override;
    if (!opts.mock_fixture_override.empty()) {
        cfg.mock_llm = true;
        cfg.paths.mock_fixture = opts.mock_fixture_override;
    }
    return cfg;
}

int run_stage(const std::string& name, const std::function<int()>& stage) {
    try {
        return stage();
    } catch (const accel::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << accel::StageError(name + ": " + e.what()).what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AI-guided related-search accelerator"};
    app.require_subcommand(1);

    CliOptions opts;
    app.add_option("--config", opts.config_path, "path to the pipeline config JSON")
        ->required();
    app.add_option("--seed", opts.seed_override, "override the configured rng seed");
    app.add_option("--mock-llm", opts.mock_fixture_override,
                   "use the mock LLM client with this fixture file");

    struct Subcommand {
        const char* name;
        const char* help;
        std::function<void(const accel::PipelineConfig&)> fn;
    };
    const Subcommand batch_stages[] = {
        {"mine", "extract query chains from the event log",
         [](const auto& cfg) { accel::pipeline::run_mine(cfg); }},
        {"profiles", "build query -> item interaction profiles",
         [](const auto& cfg) { accel::pipeline::run_profiles(cfg); }},
        {"filter", "intent-filter chains and aggregate journeys",
         [](const auto& cfg) { accel::pipeline::run_filter(cfg); }},
        {"alternate", "expand journeys into suggestion candidates via the LLM",
         [](const auto& cfg) { accel::pipeline::run_alternate(cfg); }},
        {"build-store", "validate suggestions into a serving snapshot",
         [](const auto& cfg) { accel::pipeline::run_build_store(cfg); }},
        {"eval", "replay a synthetic impression stream and report deltas",
         [](const auto& cfg) { accel::pipeline::run_eval(cfg); }},
        {"pipeline", "run all batch stages in order",
         [](const auto& cfg) { accel::pipeline::run_pipeline(cfg); }},
    };
    // options stay on the parent; `accelerator <sub> --config ...` must work
    for (const auto& stage : batch_stages) app.add_subcommand(stage.name, stage.help)->fallthrough();
    app.add_subcommand("serve", "serve the snapshot over HTTP (blocks)")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    return run_stage(sub, [&]() -> int {
        const auto cfg = load(opts);
        if (sub == "serve") return accel::pipeline::run_serve(cfg);
        for (const auto& stage : batch_stages) {
            if (sub == stage.name) {
                stage.fn(cfg);
                return 0;
            }
        }
        return 1;  // unreachable: CLI11 rejects unknown subcommands
    });
}
