#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "weeesort/errors.hpp"
#include "weeesort/experiment.hpp"

using namespace weeesort;

namespace {

ExperimentConfig tiny_config(const std::string& name = "smoke") {
    ExperimentConfig c;
    c.name = name;
    SyntheticSpec spec;
    spec.per_class = {{"battery", 12}, {"pcb", 12}, {"glass", 12}, {"metal_piece", 12}};
    spec.image_size = 96;
    spec.seed = 10;
    c.dataset.synthetic = spec;
    c.split_seed = 3;
    c.model.backbone = "smallcnn";
    c.model.pretrained = false;
    c.model.num_classes = 4;
    c.model.input_size = 16;
    c.training.max_epochs = 2;
    c.training.patience = 1;
    c.training.batch_size = 8;
    c.training.seed = 9;
    c.preset = Preset::four_class;
    c.raw_text = c.to_json().dump(2) + "\n";
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

/// Keys whose values differ between two flat-ish JSON configs, as dotted paths.
void diff_keys(const nlohmann::json& a, const nlohmann::json& b, const std::string& prefix,
               std::vector<std::string>& out) {
    for (auto it = a.begin(); it != a.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!b.contains(it.key())) {
            out.push_back(path);
            continue;
        }
        if (it.value().is_object()) {
            diff_keys(it.value(), b[it.key()], path, out);
        } else if (it.value() != b[it.key()]) {
            out.push_back(path);
        }
    }
}

}  // namespace

TEST_CASE("experiment config json round trip") {
    const ExperimentConfig c = tiny_config();
    const ExperimentConfig back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.name == c.name);
    CHECK(back.model == c.model);
    CHECK(back.training == c.training);
    CHECK(back.split_seed == c.split_seed);
    CHECK(back.preset == Preset::four_class);
    REQUIRE(back.dataset.synthetic.has_value());
    CHECK(back.dataset.synthetic->per_class == c.dataset.synthetic->per_class);
}

TEST_CASE("dataset source must be exactly one of three") {
    ExperimentConfig c = tiny_config();
    c.dataset.annotation_file = "x.json";
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.dataset = DatasetSource{};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("presets change exactly their documented fields") {
    ExperimentConfig base = tiny_config();
    base.model.pretrained = true;  // so scratch has something to flip
    base.preset = Preset::four_class;
    const auto four = apply_preset(base).to_json();

    ExperimentConfig b = base;
    b.preset = Preset::binary;
    const auto binary = apply_preset(b).to_json();

    ExperimentConfig s = base;
    s.preset = Preset::scratch;
    const auto scratch = apply_preset(s).to_json();

    std::vector<std::string> four_vs_binary;
    diff_keys(four, binary, "", four_vs_binary);
    CHECK(four_vs_binary == std::vector<std::string>{"model.num_classes", "preset"});

    std::vector<std::string> four_vs_scratch;
    diff_keys(four, scratch, "", four_vs_scratch);
    CHECK(four_vs_scratch == std::vector<std::string>{"model.pretrained", "preset"});
}

TEST_CASE("build-dataset writes crops, refuses rerun without --force") {
    testing::TempDir dir("cmd");
    std::ostringstream sink;
    CommandContext ctx;
    ctx.out_dir = dir.path();
    ctx.out = &sink;

    const auto manifest_path = cmd_build_dataset(tiny_config(), ctx);
    CHECK(std::filesystem::exists(manifest_path));
    const DatasetManifest manifest = read_manifest(manifest_path);
    CHECK(manifest.crops.size() == 48);
    CHECK(sink.str().find("Training") != std::string::npos);

    CHECK_THROWS_AS(cmd_build_dataset(tiny_config(), ctx), IoError);
    ctx.force = true;
    CHECK_NOTHROW(cmd_build_dataset(tiny_config(), ctx));
}

TEST_CASE("build-dataset rejects an empty annotation file") {
    testing::TempDir dir("cmd");
    std::ofstream(dir.path() / "empty.json") << R"({"images": []})";
    ExperimentConfig c = tiny_config();
    c.dataset = DatasetSource{};
    c.dataset.annotation_file = (dir.path() / "empty.json").string();
    std::ostringstream sink;
    CommandContext ctx;
    ctx.out_dir = dir.path() / "out";
    ctx.out = &sink;
    CHECK_THROWS_AS(cmd_build_dataset(c, ctx), SchemaError);
    CHECK_FALSE(std::filesystem::exists(ctx.out_dir / "dataset" / "manifest.json"));
}

TEST_CASE("train command writes all artifacts and a faithful config snapshot") {
    testing::TempDir dir("cmd");
    std::ostringstream sink;
    CommandContext ctx;
    ctx.out_dir = dir.path();
    ctx.out = &sink;

    const ExperimentConfig config = tiny_config();
    const RunManifest rm = cmd_train(config, ctx);
    CHECK(rm.run_id == "smoke-four_class-s9");
    for (const auto& key : {"checkpoint", "history_csv", "accuracy_plot", "loss_plot",
                            "run_manifest"}) {
        REQUIRE(rm.artifacts.count(key));
        CHECK(std::filesystem::exists(rm.artifacts.at(key)));
    }
    CHECK(rm.config_snapshot == config.raw_text);

    const RunManifest back = RunManifest::read(rm.artifacts.at("run_manifest"));
    CHECK(back.config_snapshot == config.raw_text);
    CHECK(back.environment.at("preset") == "four_class");

    // Rerun without --force refuses; the guard protects finished runs.
    CHECK_THROWS_AS(cmd_train(config, ctx), IoError);
}

TEST_CASE("scratch and binary presets land in the checkpoint header") {
    testing::TempDir dir("cmd");
    std::ostringstream sink;
    CommandContext ctx;
    ctx.out_dir = dir.path();
    ctx.out = &sink;

    ExperimentConfig scratch = tiny_config("abl");
    scratch.model.pretrained = true;  // preset must force it off
    scratch.preset = Preset::scratch;
    // No weights file exists, so this only passes if the preset wins.
    const RunManifest rm = cmd_train(scratch, ctx);
    const Checkpoint cp = Checkpoint::load(rm.artifacts.at("checkpoint"));
    CHECK(cp.model_config.pretrained == false);
    CHECK(cp.model_config.num_classes == 4);

    ExperimentConfig binary = tiny_config("abl");
    binary.preset = Preset::binary;
    const RunManifest rm2 = cmd_train(binary, ctx);
    const Checkpoint cp2 = Checkpoint::load(rm2.artifacts.at("checkpoint"));
    CHECK(cp2.model_config.num_classes == 2);
    CHECK(cp2.classes == std::vector<std::string>{"battery", "other"});
}

TEST_CASE("evaluate writes reports with the split's cardinality") {
    testing::TempDir dir("cmd");
    std::ostringstream sink;
    CommandContext ctx;
    ctx.out_dir = dir.path();
    ctx.out = &sink;

    const ExperimentConfig config = tiny_config();
    const RunManifest rm = cmd_train(config, ctx);
    const auto manifest_path = dir.path() / "dataset" / "manifest.json";

    CommandContext eval_ctx = ctx;
    eval_ctx.out_dir = dir.path() / "eval";
    const EvaluationReport report =
        cmd_evaluate(rm.artifacts.at("checkpoint"), manifest_path, "test", "battery",
                     eval_ctx);
    CHECK(report.confusion.total() == 4);  // 48 crops -> 4 in the test split
    CHECK(std::filesystem::exists(eval_ctx.out_dir / "report_test.json"));
    CHECK(std::filesystem::exists(eval_ctx.out_dir / "flow_test.json"));
    CHECK(sink.str().find("Prediction") != std::string::npos);

    const EvaluationReport val_report =
        cmd_evaluate(rm.artifacts.at("checkpoint"), manifest_path, "val", "battery",
                     eval_ctx);
    CHECK(val_report.confusion.total() == 8);
    CHECK_THROWS_AS(cmd_evaluate(rm.artifacts.at("checkpoint"), manifest_path, "huh",
                                 "battery", eval_ctx),
                    ArgumentError);
}

TEST_CASE("flow command reads a confusion JSON and honors the target") {
    testing::TempDir dir("cmd");
    std::ostringstream sink;
    CommandContext ctx;
    ctx.out_dir = dir.path();
    ctx.out = &sink;

    const nlohmann::json j = {
        {"classes", {"metal_piece", "battery", "pcb", "glass"}},
        {"counts", {{13, 2, 6, 0}, {0, 28, 2, 0}, {5, 1, 17, 1}, {4, 0, 2, 30}}}};
    std::ofstream(dir.path() / "cm.json") << j.dump();

    const MaterialFlowReport flow =
        cmd_flow(dir.path() / "cm.json", std::nullopt, std::nullopt, "battery", ctx);
    CHECK(std::abs(*flow.purity * 100.0 - 90.32) < 0.01);
    CHECK(std::abs(*flow.recovery * 100.0 - 93.33) < 0.01);
    CHECK(std::filesystem::exists(dir.path() / "flow_battery.json"));

    CHECK_THROWS_AS(
        cmd_flow(dir.path() / "cm.json", std::nullopt, std::nullopt, "diamond", ctx),
        ArgumentError);
    CHECK_THROWS_AS(cmd_flow(std::nullopt, std::nullopt, std::nullopt, "battery", ctx),
                    ArgumentError);
}

TEST_CASE("plot command renders deterministic files from a history CSV") {
    testing::TempDir dir("cmd");
    std::ostringstream sink;
    CommandContext ctx;
    ctx.out_dir = dir.path() / "plots";
    ctx.out = &sink;

    TrainingHistory history;
    for (int e = 1; e <= 20; ++e) {
        history.records.push_back(
            {e, 2.0 / e, 0.3 + 0.03 * e, 2.2 / e, 0.25 + 0.03 * e});
    }
    const auto csv = dir.path() / "history.csv";
    write_history_csv(history, csv);

    const PlotPaths p1 = cmd_plot(csv, "demo", ctx);
    CHECK(std::filesystem::exists(p1.accuracy_plot));
    CHECK(std::filesystem::exists(p1.loss_plot));
    CHECK(p1.accuracy_plot.filename() == "demo_accuracy.png");
    const std::string first = slurp(p1.accuracy_plot);
    const PlotPaths p2 = cmd_plot(csv, "demo", ctx);
    CHECK(slurp(p2.accuracy_plot) == first);

    // Single-row history still renders.
    TrainingHistory single;
    single.records.push_back({1, 1.0, 0.5, 1.0, 0.5});
    const auto single_csv = dir.path() / "single.csv";
    write_history_csv(single, single_csv);
    CHECK_NOTHROW(cmd_plot(single_csv, "single", ctx));
}

TEST_CASE("ablate produces three run manifests and a comparison file") {
    testing::TempDir dir("cmd");
    std::ostringstream sink;
    CommandContext ctx;
    ctx.out_dir = dir.path();
    ctx.out = &sink;

    ExperimentConfig config = tiny_config("ablation");
    config.preset = Preset::none;
    const AblationOutcome outcome = cmd_ablate(config, ctx);
    CHECK(outcome.failures.empty());
    REQUIRE(outcome.runs.size() == 3);
    for (const auto& key : {"four_class", "scratch", "binary"}) {
        REQUIRE(outcome.runs.count(key));
        CHECK(std::filesystem::exists(outcome.runs.at(key).artifacts.at("run_manifest")));
    }
    CHECK(std::filesystem::exists(outcome.comparison_path));
    const auto cmp = nlohmann::json::parse(slurp(outcome.comparison_path));
    CHECK(cmp.contains("deltas"));
    CHECK(cmp["deltas"].contains("scratch_vs_four_class"));
    CHECK(cmp["deltas"].contains("binary_vs_four_class"));
    CHECK(std::filesystem::exists(dir.path() / "ablation_summary.txt"));
}

TEST_CASE("parallel ablation matches the sequential comparison") {
    testing::TempDir dir("cmd");
    std::ostringstream sink;
    CommandContext seq_ctx;
    seq_ctx.out_dir = dir.path() / "seq";
    seq_ctx.out = &sink;
    ExperimentConfig config = tiny_config("par");
    config.preset = Preset::none;
    const AblationOutcome sequential = cmd_ablate(config, seq_ctx);

    CommandContext par_ctx;
    par_ctx.out_dir = dir.path() / "par";
    par_ctx.out = &sink;
    par_ctx.parallel = true;
    const AblationOutcome parallel = cmd_ablate(config, par_ctx);

    CHECK(sequential.failures.empty());
    CHECK(parallel.failures.empty());
    const auto a = nlohmann::json::parse(slurp(sequential.comparison_path));
    const auto b = nlohmann::json::parse(slurp(parallel.comparison_path));
    CHECK(a["deltas"] == b["deltas"]);
    CHECK(a["runs"] == b["runs"]);
}

TEST_CASE("exit codes follow the documented policy") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(ArgumentError("x")) == 2);
    CHECK(exit_code_for(PretrainedWeightsError("x")) == 2);
    CHECK(exit_code_for(SchemaError("x")) == 3);
    CHECK(exit_code_for(IoError("x")) == 3);
    CHECK(exit_code_for(ParseError("x")) == 3);
    CHECK(exit_code_for(TrainingError("x", 3)) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}
