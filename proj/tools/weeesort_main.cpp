#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "weeesort/errors.hpp"
#include "weeesort/experiment.hpp"

namespace {

using weeesort::CommandContext;
using weeesort::ExperimentConfig;

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) {
        throw weeesort::ConfigError("this command needs --config <experiment.json>");
    }
    return ExperimentConfig::load(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weeesort: component-image dataset pipeline, trainer and evaluator"};
    app.require_subcommand(1);
    app.fallthrough();  // accept the global flags before or after the subcommand

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::int64_t> seed;
    bool force = false;
    app.add_option("--config", config_path, "Experiment config JSON");
    app.add_option("--out", out_dir, "Output directory (default: out)");
    app.add_option("--seed", seed, "Override split/training seeds");
    app.add_flag("--force", force, "Overwrite existing outputs");

    auto* build = app.add_subcommand("build-dataset",
                                     "Extract crops and write the dataset manifest");
    auto* train = app.add_subcommand("train", "Run the training protocol");
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on one split");
    auto* ablate = app.add_subcommand("ablate",
                                      "Run the four_class/scratch/binary comparison");
    bool ablate_parallel = false;
    ablate->add_flag("--parallel", ablate_parallel, "Run the three sub-runs concurrently");
    auto* flow = app.add_subcommand("flow", "Material-flow report for one target class");
    auto* plot = app.add_subcommand("plot", "Render accuracy/loss curves from a history CSV");

    std::string eval_checkpoint, eval_manifest, eval_split = "test", eval_target = "battery";
    evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
    evaluate->add_option("--manifest", eval_manifest, "Dataset manifest")->required();
    evaluate->add_option("--split", eval_split, "Split to evaluate (train|val|test)");
    evaluate->add_option("--target", eval_target, "Material-flow target class");

    std::string flow_confusion, flow_checkpoint, flow_manifest, flow_target = "battery";
    flow->add_option("--confusion", flow_confusion, "Confusion matrix JSON");
    flow->add_option("--checkpoint", flow_checkpoint, "Checkpoint file");
    flow->add_option("--manifest", flow_manifest, "Dataset manifest");
    flow->add_option("--target", flow_target, "Target class (default: battery)");

    std::string plot_history, plot_run_id;
    plot->add_option("--history", plot_history, "History CSV")->required();
    plot->add_option("--run-id", plot_run_id, "Name prefix for the plot files");

    CLI11_PARSE(app, argc, argv);

    CommandContext ctx;
    ctx.out_dir = out_dir;
    ctx.force = force;
    ctx.seed_override = seed;

    try {
        if (build->parsed()) {
            weeesort::cmd_build_dataset(load_config(config_path), ctx);
        } else if (train->parsed()) {
            weeesort::cmd_train(load_config(config_path), ctx);
        } else if (evaluate->parsed()) {
            weeesort::cmd_evaluate(eval_checkpoint, eval_manifest, eval_split, eval_target,
                                   ctx);
        } else if (ablate->parsed()) {
            ctx.parallel = ablate_parallel;
            const auto outcome = weeesort::cmd_ablate(load_config(config_path), ctx);
            if (!outcome.failures.empty()) {
                std::cerr << "ablation finished with failed sub-runs\n";
                return 4;
            }
        } else if (flow->parsed()) {
            std::optional<std::filesystem::path> confusion, checkpoint, manifest;
            if (!flow_confusion.empty()) confusion = flow_confusion;
            if (!flow_checkpoint.empty()) checkpoint = flow_checkpoint;
            if (!flow_manifest.empty()) manifest = flow_manifest;
            weeesort::cmd_flow(confusion, checkpoint, manifest, flow_target, ctx);
        } else if (plot->parsed()) {
            const std::string run_id =
                plot_run_id.empty() ? std::filesystem::path(plot_history).stem().string()
                                    : plot_run_id;
            weeesort::cmd_plot(plot_history, run_id, ctx);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return weeesort::exit_code_for(e);
    }
    return 0;
}
