#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <utility>

#include <json.hpp>

#include "weeesort/augment.hpp"
#include "weeesort/dataset.hpp"
#include "weeesort/nn.hpp"

namespace weeesort {

struct ModelConfig {
    std::string backbone = "vgg16";
    bool pretrained = true;
    int num_classes = 4;
    int input_size = kCropSize;
    /// Directory holding pretrained weight files; falls back to the
    /// WEEESORT_WEIGHTS_DIR environment variable.
    std::optional<std::string> weights_dir;

    void validate() const;
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
    bool operator==(const ModelConfig&) const = default;
};

struct TrainingConfig {
    int max_epochs = 100;
    int patience = 10;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::string optimizer = "adam";
    std::string loss = "categorical_cross_entropy";
    std::int64_t seed = 0;
    std::string monitor = "val_accuracy";
    bool freeze_backbone = false;
    /// Reserved for class-weighted losses; configuring it is an error for now.
    std::optional<nlohmann::json> class_weights;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j);
    bool operator==(const TrainingConfig&) const = default;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

struct TrainingHistory {
    std::vector<EpochRecord> records;
    int best_epoch = 0;
    int stopped_epoch = 0;
};

/// Patience-based monitor on a maximized metric. Ties keep the earlier epoch.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience);

    /// Feeds one epoch; returns true when training should stop after it.
    bool update(int epoch, double value);

    int best_epoch() const { return best_epoch_; }
    double best_value() const { return best_value_; }
    bool improved() const { return improved_; }

private:
    int patience_;
    int best_epoch_ = 0;
    double best_value_;
    bool improved_ = false;
};

/// Replays the recorded val-accuracy series: (stop now?, best epoch).
std::pair<bool, int> should_stop(const TrainingHistory& history, int patience);

struct Checkpoint {
    int format_version = 1;
    ModelConfig model_config;
    TrainingConfig training_config;
    std::vector<std::string> classes;
    int epoch = 0;
    double val_accuracy = 0.0;
    std::vector<std::pair<std::string, Tensor>> tensors;

    void save(const std::filesystem::path& path) const;  // atomic (tmp + rename)
    static Checkpoint load(const std::filesystem::path& path);
};

struct Classifier {
    ModelConfig config;
    std::vector<std::string> classes;
    Network net;
};

/// Builds the backbone with a seeded init; when config.pretrained is set the
/// backbone weights (everything but the "head" layer) are loaded from
/// "{weights_dir}/{backbone}_imagenet.wts".
Classifier build_classifier(const ModelConfig& config, std::vector<std::string> classes,
                            std::uint64_t init_seed);

Classifier classifier_from_checkpoint(const Checkpoint& checkpoint);

Checkpoint snapshot_checkpoint(Classifier& classifier, const TrainingConfig& training,
                               int epoch, double val_accuracy);

/// Writes the model's weights as a pretrained-weights file.
void save_weights_file(Classifier& classifier, const std::filesystem::path& path);

struct TrainOptions {
    /// Best checkpoint is persisted here on every improvement; empty keeps it
    /// in memory only.
    std::filesystem::path checkpoint_path;
    /// Base directory for the manifest's relative crop paths.
    std::filesystem::path dataset_dir;
    bool cache_images = true;
    /// Protocol-test seam: replaces the computed validation accuracy.
    std::function<double(int epoch, double computed)> val_accuracy_override;
    std::function<void(const EpochRecord&)> on_epoch_end;
};

/// Runs the training protocol: per epoch a shuffled, augmented train pass and
/// an un-augmented validation pass, with early stopping on val accuracy and
/// atomic best-checkpoint persistence.
std::pair<TrainingHistory, Checkpoint> train(Classifier& classifier,
                                             const DatasetManifest& manifest,
                                             const AugmentationPolicy& augmentation,
                                             const TrainingConfig& config,
                                             const TrainOptions& options);

struct Prediction {
    int class_index = 0;
    std::string class_label;
    std::vector<double> probabilities;
};

/// Deterministic eval-mode inference on 500x500 crops.
std::vector<Prediction> predict(Classifier& classifier, std::span<const Image> crops);

void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path);
TrainingHistory read_history_csv(const std::filesystem::path& path);

/// Index of a crop's class in the classifier's class list. Classes missing
/// from the list fall back to its "other" entry (the binary collapse).
int label_index_for(const std::string& crop_class, const std::vector<std::string>& classes);

}  // namespace weeesort
