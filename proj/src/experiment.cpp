#include "weeesort/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <iostream>
#include <thread>

#include <fmt/format.h>
#include <opencv2/core/version.hpp>

#include "weeesort/errors.hpp"

namespace weeesort {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::ostream& out_stream(const CommandContext& ctx) {
    return ctx.out ? *ctx.out : std::cout;
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::map<std::string, std::string> environment_descriptor() {
    return {
        {"platform", "linux"},
        {"compiler", __VERSION__},
        {"opencv", CV_VERSION},
        {"hardware_threads", std::to_string(std::thread::hardware_concurrency())},
        {"weeesort_version", "0.1.0"},
    };
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open: " + path.string());
    }
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

/// Severity defaults extended with the binary preset's mixed class; treated
/// as value loss since boards are its costliest content.
SeverityMap flow_severity_map() {
    SeverityMap map = default_severity_map();
    map.emplace("other", Severity::value_loss);
    return map;
}

ExperimentConfig with_seed_override(ExperimentConfig config, const CommandContext& ctx) {
    if (ctx.seed_override) {
        config.split_seed = *ctx.seed_override;
        config.training.seed = *ctx.seed_override;
        if (config.dataset.synthetic) config.dataset.synthetic->seed = *ctx.seed_override;
    }
    return config;
}

}  // namespace

// ---- preset / config plumbing ----

std::string to_string(Preset preset) {
    switch (preset) {
        case Preset::four_class: return "four_class";
        case Preset::binary: return "binary";
        case Preset::scratch: return "scratch";
        case Preset::none: return "none";
    }
    return "none";
}

Preset preset_from_string(const std::string& s) {
    if (s == "four_class") return Preset::four_class;
    if (s == "binary") return Preset::binary;
    if (s == "scratch") return Preset::scratch;
    if (s == "none") return Preset::none;
    throw ConfigError(fmt::format(
        "unknown preset '{}' (expected four_class, binary, scratch or none)", s));
}

void DatasetSource::validate() const {
    const int set = (annotation_file ? 1 : 0) + (manifest_path ? 1 : 0) + (synthetic ? 1 : 0);
    if (set != 1) {
        throw ConfigError(
            "dataset must set exactly one of annotation_file, manifest_path or synthetic");
    }
    if (synthetic) synthetic->validate();
}

void ExperimentConfig::validate() const {
    if (name.empty()) throw ConfigError("experiment name must not be empty");
    dataset.validate();
    model.validate();
    training.validate();
    augmentation.validate();
}

nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec) {
    ordered_json j;
    j["per_class"] = spec.per_class;
    j["image_size"] = spec.image_size;
    j["seed"] = spec.seed;
    ordered_json palette = ordered_json::array();
    for (Background b : spec.palette) palette.push_back(to_string(b));
    j["palette"] = std::move(palette);
    return j;
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
    SyntheticSpec spec;
    spec.per_class = j.at("per_class").get<std::map<std::string, int>>();
    if (j.contains("image_size")) spec.image_size = j["image_size"].get<int>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::int64_t>();
    if (j.contains("palette")) {
        spec.palette.clear();
        for (const auto& jb : j["palette"]) {
            spec.palette.push_back(background_from_string(jb.get<std::string>()));
        }
    }
    return spec;
}

nlohmann::json augmentation_to_json(const AugmentationPolicy& policy) {
    ordered_json j;
    j["enabled"] = policy.enabled;
    j["rotation_deg"] = policy.rotation_deg;
    j["shear_deg"] = policy.shear_deg;
    j["zoom_min"] = policy.zoom_min;
    j["zoom_max"] = policy.zoom_max;
    j["channel_shift"] = policy.channel_shift;
    j["h_flip_prob"] = policy.h_flip_prob;
    j["v_flip_prob"] = policy.v_flip_prob;
    return j;
}

AugmentationPolicy augmentation_from_json(const nlohmann::json& j) {
    AugmentationPolicy p;
    if (j.contains("enabled")) p.enabled = j["enabled"].get<bool>();
    if (j.contains("rotation_deg")) p.rotation_deg = j["rotation_deg"].get<double>();
    if (j.contains("shear_deg")) p.shear_deg = j["shear_deg"].get<double>();
    if (j.contains("zoom_min")) p.zoom_min = j["zoom_min"].get<double>();
    if (j.contains("zoom_max")) p.zoom_max = j["zoom_max"].get<double>();
    if (j.contains("channel_shift")) p.channel_shift = j["channel_shift"].get<double>();
    if (j.contains("h_flip_prob")) p.h_flip_prob = j["h_flip_prob"].get<double>();
    if (j.contains("v_flip_prob")) p.v_flip_prob = j["v_flip_prob"].get<double>();
    return p;
}

nlohmann::json ExperimentConfig::to_json() const {
    ordered_json j;
    j["name"] = name;
    ordered_json jd;
    if (dataset.annotation_file) jd["annotation_file"] = *dataset.annotation_file;
    if (dataset.manifest_path) jd["manifest_path"] = *dataset.manifest_path;
    if (dataset.synthetic) jd["synthetic"] = synthetic_spec_to_json(*dataset.synthetic);
    j["dataset"] = std::move(jd);
    j["split_seed"] = split_seed;
    j["model"] = model.to_json();
    j["training"] = training.to_json();
    j["augmentation"] = augmentation_to_json(augmentation);
    j["preset"] = to_string(preset);
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    if (j.contains("name")) c.name = j["name"].get<std::string>();
    if (j.contains("dataset")) {
        const json& jd = j["dataset"];
        if (jd.contains("annotation_file")) {
            c.dataset.annotation_file = jd["annotation_file"].get<std::string>();
        }
        if (jd.contains("manifest_path")) {
            c.dataset.manifest_path = jd["manifest_path"].get<std::string>();
        }
        if (jd.contains("synthetic")) {
            c.dataset.synthetic = synthetic_spec_from_json(jd["synthetic"]);
        }
    }
    if (j.contains("split_seed")) c.split_seed = j["split_seed"].get<std::int64_t>();
    if (j.contains("model")) c.model = ModelConfig::from_json(j["model"]);
    if (j.contains("training")) c.training = TrainingConfig::from_json(j["training"]);
    if (j.contains("augmentation")) c.augmentation = augmentation_from_json(j["augmentation"]);
    if (j.contains("preset")) c.preset = preset_from_string(j["preset"].get<std::string>());
    c.raw_text = c.to_json().dump(2) + "\n";
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: malformed config JSON: {}", path.string(), e.what()));
    }
    ExperimentConfig c = from_json(j);
    c.raw_text = text;
    return c;
}

ExperimentConfig apply_preset(ExperimentConfig config) {
    switch (config.preset) {
        case Preset::four_class:
            config.model.num_classes = 4;
            break;
        case Preset::binary:
            config.model.num_classes = 2;
            break;
        case Preset::scratch:
            config.model.num_classes = 4;
            config.model.pretrained = false;
            break;
        case Preset::none:
            break;
    }
    return config;
}

// ---- run manifest ----

void RunManifest::write(const std::filesystem::path& path) const {
    ordered_json j;
    j["run_id"] = run_id;
    j["config_snapshot"] = config_snapshot;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["artifacts"] = artifacts;
    j["environment"] = environment;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write run manifest: " + path.string());
    }
    out << j.dump(2) << '\n';
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(fmt::format("{}: malformed run manifest: {}", path.string(), e.what()));
    }
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.config_snapshot = j.at("config_snapshot").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    m.environment = j.at("environment").get<std::map<std::string, std::string>>();
    return m;
}

// ---- commands ----

std::filesystem::path cmd_build_dataset(const ExperimentConfig& input,
                                        const CommandContext& ctx) {
    const ExperimentConfig config = with_seed_override(input, ctx);
    config.dataset.validate();
    if (config.dataset.manifest_path) {
        throw ConfigError(
            "dataset.manifest_path points at an already built dataset; nothing to build");
    }

    const std::filesystem::path dataset_dir = ctx.out_dir / "dataset";
    const std::filesystem::path manifest_path = dataset_dir / "manifest.json";
    if (std::filesystem::exists(manifest_path) && !ctx.force) {
        throw IoError(fmt::format("{} already exists; re-run with --force to rebuild",
                                  manifest_path.string()));
    }
    std::filesystem::create_directories(dataset_dir);

    std::filesystem::path annotation_path;
    std::filesystem::path image_base;
    if (config.dataset.synthetic) {
        const auto source_dir = dataset_dir / "source";
        const auto generated = generate_synthetic_dataset(*config.dataset.synthetic, source_dir);
        annotation_path = generated.annotation_file;
        image_base = source_dir;
        out_stream(ctx) << fmt::format("generated {} synthetic components in {} image(s)\n",
                                       generated.total_components,
                                       generated.image_files.size());
    } else {
        annotation_path = *config.dataset.annotation_file;
        image_base = annotation_path.parent_path();
    }

    const ParseResult parsed = parse_annotation_file(annotation_path);
    if (parsed.records.empty()) {
        throw SchemaError(annotation_path.string() + ": annotation file contains no images");
    }
    if (parsed.clamped_vertices > 0) {
        out_stream(ctx) << fmt::format("warning: clamped {} polygon vertices into image bounds\n",
                                       parsed.clamped_vertices);
    }

    std::vector<std::string> warnings;
    const DatasetManifest manifest =
        build_crop_dataset(parsed.records, file_image_loader(image_base), dataset_dir,
                           config.split_seed, {}, &warnings);
    for (const auto& w : warnings) {
        out_stream(ctx) << "warning: " << w << '\n';
    }
    out_stream(ctx) << render_split_table(manifest);
    return manifest_path;
}

namespace {

std::filesystem::path ensure_dataset(const ExperimentConfig& config,
                                     const CommandContext& ctx) {
    if (config.dataset.manifest_path) {
        const std::filesystem::path path = *config.dataset.manifest_path;
        if (!std::filesystem::exists(path)) {
            throw IoError("manifest not found: " + path.string());
        }
        return path;
    }
    const std::filesystem::path manifest_path = ctx.out_dir / "dataset" / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        return manifest_path;
    }
    CommandContext build_ctx = ctx;
    build_ctx.force = false;
    return cmd_build_dataset(config, build_ctx);
}

std::vector<std::string> classes_for_preset(const ExperimentConfig& config,
                                            const DatasetManifest& manifest) {
    if (config.preset == Preset::binary) {
        if (std::find(manifest.classes.begin(), manifest.classes.end(), "battery") ==
            manifest.classes.end()) {
            throw ConfigError("binary preset needs a 'battery' class in the dataset");
        }
        return {"battery", "other"};
    }
    if (static_cast<int>(manifest.classes.size()) != config.model.num_classes) {
        throw ConfigError(fmt::format(
            "model.num_classes is {} but the dataset has {} classes ({})",
            config.model.num_classes, manifest.classes.size(),
            fmt::join(manifest.classes, ", ")));
    }
    return manifest.classes;
}

}  // namespace

RunManifest cmd_train(const ExperimentConfig& input, const CommandContext& ctx) {
    const ExperimentConfig base = with_seed_override(input, ctx);
    const ExperimentConfig config = apply_preset(base);
    config.validate();

    const std::filesystem::path manifest_path = ensure_dataset(config, ctx);
    const DatasetManifest manifest = read_manifest(manifest_path);

    const std::string run_id =
        fmt::format("{}-{}-s{}", config.name, to_string(config.preset), config.training.seed);
    const std::filesystem::path run_dir = ctx.out_dir / "runs" / run_id;
    const std::filesystem::path run_manifest_path = run_dir / "run_manifest.json";
    if (std::filesystem::exists(run_manifest_path) && !ctx.force) {
        throw IoError(fmt::format("{} already exists; re-run with --force",
                                  run_manifest_path.string()));
    }
    std::filesystem::create_directories(run_dir);

    RunManifest rm;
    rm.run_id = run_id;
    rm.config_snapshot = input.raw_text;
    rm.started_at = iso_timestamp();
    rm.environment = environment_descriptor();
    rm.environment["effective_seed"] = std::to_string(config.training.seed);
    rm.environment["preset"] = to_string(config.preset);

    Classifier classifier =
        build_classifier(config.model, classes_for_preset(config, manifest),
                         static_cast<std::uint64_t>(config.training.seed));

    TrainOptions options;
    options.checkpoint_path = run_dir / "checkpoint.ckpt";
    options.dataset_dir = manifest_path.parent_path();

    out_stream(ctx) << fmt::format("training {} ({} backbone, {} classes, pretrained={})\n",
                                   run_id, config.model.backbone, config.model.num_classes,
                                   config.model.pretrained);
    auto [history, best] =
        train(classifier, manifest, config.augmentation, config.training, options);
    out_stream(ctx) << fmt::format("stopped at epoch {}, best epoch {} (val_accuracy {})\n",
                                   history.stopped_epoch, history.best_epoch,
                                   format_percent(best.val_accuracy) + "%");

    const std::filesystem::path history_path = run_dir / "history.csv";
    write_history_csv(history, history_path);
    const PlotPaths plots = render_history_plots(history, run_id, run_dir);

    rm.finished_at = iso_timestamp();
    rm.artifacts["checkpoint"] = options.checkpoint_path.string();
    rm.artifacts["history_csv"] = history_path.string();
    rm.artifacts["accuracy_plot"] = plots.accuracy_plot.string();
    rm.artifacts["loss_plot"] = plots.loss_plot.string();
    for (const auto& [key, path] : rm.artifacts) {
        if (!std::filesystem::exists(path)) {
            throw IoError(fmt::format("run artifact '{}' missing at close: {}", key, path));
        }
    }
    rm.write(run_manifest_path);
    rm.artifacts["run_manifest"] = run_manifest_path.string();
    return rm;
}

namespace {

/// Split inference shared by evaluate/flow: returns (actual, predicted) label
/// sequences in the classifier's class vocabulary.
std::pair<std::vector<std::string>, std::vector<std::string>>
infer_split(Classifier& classifier, const DatasetManifest& manifest,
            const std::filesystem::path& manifest_dir, const std::string& split) {
    std::vector<const CropEntry*> items;
    for (const auto& c : manifest.crops) {
        if (c.split == split) items.push_back(&c);
    }
    if (items.empty()) {
        throw SchemaError(fmt::format("manifest has no crops in split '{}'", split));
    }
    std::vector<std::string> actual, predicted;
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < items.size(); start += kChunk) {
        const std::size_t n = std::min(kChunk, items.size() - start);
        std::vector<Image> crops;
        crops.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::filesystem::path p(items[start + i]->path);
            if (p.is_relative()) p = manifest_dir / p;
            crops.push_back(load_png(p));
        }
        const auto preds = predict(classifier, crops);
        for (std::size_t i = 0; i < n; ++i) {
            const int actual_idx =
                label_index_for(items[start + i]->class_label, classifier.classes);
            actual.push_back(classifier.classes[static_cast<std::size_t>(actual_idx)]);
            predicted.push_back(preds[i].class_label);
        }
    }
    return {std::move(actual), std::move(predicted)};
}

}  // namespace

EvaluationReport cmd_evaluate(const std::filesystem::path& checkpoint_path,
                              const std::filesystem::path& manifest_path,
                              const std::string& split, const std::string& target_class,
                              const CommandContext& ctx) {
    if (split != "train" && split != "val" && split != "test") {
        throw ArgumentError(fmt::format("unknown split '{}'", split));
    }
    const Checkpoint checkpoint = Checkpoint::load(checkpoint_path);
    Classifier classifier = classifier_from_checkpoint(checkpoint);
    const DatasetManifest manifest = read_manifest(manifest_path);

    // Surface a class-set mismatch before loading any pixels.
    for (const auto& label : manifest.classes) {
        label_index_for(label, classifier.classes);
    }

    auto [actual, predicted] =
        infer_split(classifier, manifest, manifest_path.parent_path(), split);
    const ConfusionMatrix cm =
        ConfusionMatrix::from_predictions(actual, predicted, classifier.classes);
    const EvaluationReport report = evaluate(cm);
    const MaterialFlowReport flow = material_flow(cm, target_class, flow_severity_map());

    std::filesystem::create_directories(ctx.out_dir);
    const auto report_path = ctx.out_dir / fmt::format("report_{}.json", split);
    const auto flow_path = ctx.out_dir / fmt::format("flow_{}.json", split);
    std::ofstream(report_path) << report_to_json(report).dump(2) << '\n';
    std::ofstream(flow_path) << flow_to_json(flow).dump(2) << '\n';

    out_stream(ctx) << render_report(report) << '\n' << render_flow(flow);
    out_stream(ctx) << fmt::format("wrote {} and {}\n", report_path.string(),
                                   flow_path.string());
    return report;
}

AblationOutcome cmd_ablate(const ExperimentConfig& input, const CommandContext& ctx) {
    const ExperimentConfig shared = with_seed_override(input, ctx);
    const std::filesystem::path manifest_path = ensure_dataset(shared, ctx);

    AblationOutcome outcome;
    std::map<std::string, EvaluationReport> reports;
    const std::vector<Preset> presets = {Preset::four_class, Preset::scratch, Preset::binary};

    struct SubRun {
        std::optional<RunManifest> manifest;
        std::optional<EvaluationReport> report;
        std::string error;
        std::string log;
    };
    auto run_one = [&](Preset preset) {
        ExperimentConfig sub = shared;
        sub.preset = preset;
        sub.dataset = DatasetSource{};
        sub.dataset.manifest_path = manifest_path.string();
        sub.raw_text = sub.to_json().dump(2) + "\n";
        SubRun result;
        std::ostringstream log;
        try {
            CommandContext sub_ctx = ctx;
            sub_ctx.out = &log;
            const RunManifest rm = cmd_train(sub, sub_ctx);
            CommandContext eval_ctx = sub_ctx;
            eval_ctx.out_dir = ctx.out_dir / "runs" / rm.run_id;
            result.report = cmd_evaluate(rm.artifacts.at("checkpoint"), manifest_path,
                                         "test", "battery", eval_ctx);
            result.manifest = rm;
        } catch (const std::exception& e) {
            result.error = e.what();
        }
        result.log = log.str();
        return result;
    };

    std::vector<SubRun> results(presets.size());
    if (ctx.parallel) {
        std::vector<std::future<SubRun>> futures;
        for (Preset preset : presets) {
            futures.push_back(std::async(std::launch::async, run_one, preset));
        }
        for (std::size_t i = 0; i < futures.size(); ++i) results[i] = futures[i].get();
    } else {
        for (std::size_t i = 0; i < presets.size(); ++i) results[i] = run_one(presets[i]);
    }

    for (std::size_t i = 0; i < presets.size(); ++i) {
        const std::string key = to_string(presets[i]);
        out_stream(ctx) << results[i].log;
        if (results[i].manifest) {
            outcome.runs.emplace(key, *results[i].manifest);
            reports.emplace(key, *results[i].report);
        } else {
            outcome.failures.emplace(key, results[i].error);
            out_stream(ctx) << fmt::format("ablation run '{}' failed: {}\n", key,
                                           results[i].error);
        }
    }

    ordered_json comparison;
    comparison["baseline"] = "four_class";
    ordered_json jruns;
    for (const auto& [key, rm] : outcome.runs) {
        jruns[key] = {{"run_id", rm.run_id}, {"status", "ok"}};
    }
    for (const auto& [key, error] : outcome.failures) {
        jruns[key] = {{"status", "failed"}, {"error", error}};
    }
    comparison["runs"] = std::move(jruns);

    std::string summary = "Ablation summary (test split)\n";
    if (reports.count("four_class")) {
        const EvaluationReport& base = reports.at("four_class");
        ordered_json jdeltas;
        if (reports.count("scratch")) {
            jdeltas["scratch_vs_four_class"] =
                delta_to_json(compare_reports(base, reports.at("scratch")));
        }
        if (reports.count("binary")) {
            ClassMapping collapse;
            for (const auto& label : base.confusion.classes()) {
                if (label != "battery") collapse[label] = "other";
            }
            jdeltas["binary_vs_four_class"] =
                delta_to_json(compare_reports(base, reports.at("binary"), collapse));
        }
        comparison["deltas"] = std::move(jdeltas);

        auto signed_pp = [](double delta) {
            const std::string s = format_percent(delta);
            return (delta >= 0 ? "+" : "") + s + " pp";
        };
        summary += fmt::format("  four_class: accuracy {}%, macro precision {}%, macro recall {}%\n",
                               format_percent(base.accuracy),
                               format_percent(base.macro_precision),
                               format_percent(base.macro_recall));
        for (const std::string key : {"scratch", "binary"}) {
            if (!reports.count(key)) continue;
            const EvaluationReport& r = reports.at(key);
            summary += fmt::format(
                "  {}: accuracy {}% ({}), macro precision {}%, macro recall {}%\n", key,
                format_percent(r.accuracy), signed_pp(r.accuracy - base.accuracy),
                format_percent(r.macro_precision), format_percent(r.macro_recall));
        }
    }
    for (const auto& [key, error] : outcome.failures) {
        summary += fmt::format("  {}: FAILED ({})\n", key, error);
    }

    std::filesystem::create_directories(ctx.out_dir);
    outcome.comparison_path = ctx.out_dir / "ablation_comparison.json";
    std::ofstream(outcome.comparison_path) << comparison.dump(2) << '\n';
    std::ofstream(ctx.out_dir / "ablation_summary.txt") << summary;
    out_stream(ctx) << summary;
    return outcome;
}

MaterialFlowReport cmd_flow(const std::optional<std::filesystem::path>& confusion_json,
                            const std::optional<std::filesystem::path>& checkpoint_path,
                            const std::optional<std::filesystem::path>& manifest_path,
                            const std::string& target_class, const CommandContext& ctx) {
    std::optional<ConfusionMatrix> cm;
    if (confusion_json) {
        json j;
        try {
            j = json::parse(read_file(*confusion_json));
        } catch (const json::parse_error& e) {
            throw ParseError(fmt::format("{}: malformed confusion JSON: {}",
                                         confusion_json->string(), e.what()));
        }
        cm = confusion_from_json(j);
    } else if (checkpoint_path && manifest_path) {
        const Checkpoint checkpoint = Checkpoint::load(*checkpoint_path);
        Classifier classifier = classifier_from_checkpoint(checkpoint);
        const DatasetManifest manifest = read_manifest(*manifest_path);
        auto [actual, predicted] =
            infer_split(classifier, manifest, manifest_path->parent_path(), "test");
        cm = ConfusionMatrix::from_predictions(actual, predicted, classifier.classes);
    } else {
        throw ArgumentError("flow needs either --confusion or --checkpoint with --manifest");
    }

    const MaterialFlowReport flow = material_flow(*cm, target_class, flow_severity_map());
    std::filesystem::create_directories(ctx.out_dir);
    const auto flow_path = ctx.out_dir / fmt::format("flow_{}.json", target_class);
    std::ofstream(flow_path) << flow_to_json(flow).dump(2) << '\n';
    out_stream(ctx) << render_flow(flow);
    out_stream(ctx) << fmt::format("wrote {}\n", flow_path.string());
    return flow;
}

PlotPaths cmd_plot(const std::filesystem::path& history_csv, const std::string& run_id,
                   const CommandContext& ctx) {
    const TrainingHistory history = read_history_csv(history_csv);
    const PlotPaths paths = render_history_plots(history, run_id, ctx.out_dir);
    out_stream(ctx) << fmt::format("wrote {} and {}\n", paths.accuracy_plot.string(),
                                   paths.loss_plot.string());
    return paths;
}

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const TrainingError*>(&error)) return 4;
    if (dynamic_cast<const ConfigError*>(&error)) return 2;
    if (dynamic_cast<const ArgumentError*>(&error)) return 2;
    if (dynamic_cast<const Error*>(&error)) return 3;
    return 1;
}

}  // namespace weeesort
