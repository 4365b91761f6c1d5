#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "weeesort/metrics.hpp"
#include "weeesort/plotting.hpp"
#include "weeesort/synthetic.hpp"
#include "weeesort/training.hpp"

namespace weeesort {

enum class Preset { four_class, binary, scratch, none };

std::string to_string(Preset preset);
Preset preset_from_string(const std::string& s);

/// Exactly one of the three sources must be set.
struct DatasetSource {
    std::optional<std::string> annotation_file;
    std::optional<std::string> manifest_path;
    std::optional<SyntheticSpec> synthetic;

    void validate() const;
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSource dataset;
    std::int64_t split_seed = 0;
    ModelConfig model;
    TrainingConfig training;
    AugmentationPolicy augmentation;
    Preset preset = Preset::none;

    /// Verbatim bytes of the config this was loaded from; regenerated from
    /// to_json() for configs built in memory.
    std::string raw_text;

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
};

/// Applies the preset's documented field overrides and nothing else:
/// four_class sets num_classes=4; binary sets num_classes=2 (battery vs
/// other); scratch sets num_classes=4 and pretrained=false.
ExperimentConfig apply_preset(ExperimentConfig config);

nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json augmentation_to_json(const AugmentationPolicy& policy);
AugmentationPolicy augmentation_from_json(const nlohmann::json& j);

struct RunManifest {
    std::string run_id;
    std::string config_snapshot;
    std::string started_at;
    std::string finished_at;
    std::map<std::string, std::string> artifacts;
    std::map<std::string, std::string> environment;

    void write(const std::filesystem::path& path) const;
    static RunManifest read(const std::filesystem::path& path);
};

struct CommandContext {
    std::filesystem::path out_dir = "out";
    bool force = false;
    std::optional<std::int64_t> seed_override;
    std::ostream* out = nullptr;  // human-readable output; null = stdout
    /// Run ablation sub-runs concurrently; their outputs are independent.
    bool parallel = false;
};

/// build-dataset: materializes crops + manifest under out_dir/dataset and
/// prints the split table. Returns the manifest path.
std::filesystem::path cmd_build_dataset(const ExperimentConfig& config,
                                        const CommandContext& ctx);

/// train: runs the training protocol; writes checkpoint, history CSV, curve
/// plots and the run manifest under out_dir/runs/<run_id>.
RunManifest cmd_train(const ExperimentConfig& config, const CommandContext& ctx);

/// evaluate: inference over one split; writes report JSON + flow JSON and
/// prints the confusion matrix in rows=actual / columns=predicted layout.
EvaluationReport cmd_evaluate(const std::filesystem::path& checkpoint_path,
                              const std::filesystem::path& manifest_path,
                              const std::string& split, const std::string& target_class,
                              const CommandContext& ctx);

struct AblationOutcome {
    std::map<std::string, RunManifest> runs;       // per preset
    std::map<std::string, std::string> failures;   // preset -> error
    std::filesystem::path comparison_path;
};

/// ablate: four_class, scratch and binary with a shared dataset and seed.
AblationOutcome cmd_ablate(const ExperimentConfig& config, const CommandContext& ctx);

/// flow: material-flow report from a confusion JSON or checkpoint+manifest.
MaterialFlowReport cmd_flow(const std::optional<std::filesystem::path>& confusion_json,
                            const std::optional<std::filesystem::path>& checkpoint_path,
                            const std::optional<std::filesystem::path>& manifest_path,
                            const std::string& target_class, const CommandContext& ctx);

/// plot: history CSV -> accuracy/loss PNGs named after run_id.
PlotPaths cmd_plot(const std::filesystem::path& history_csv, const std::string& run_id,
                   const CommandContext& ctx);

/// Exit-code policy: 0 ok, 2 config error, 3 data error, 4 training failure.
int exit_code_for(const std::exception& error);

}  // namespace weeesort
