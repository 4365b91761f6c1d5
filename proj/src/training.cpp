#include "weeesort/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "weeesort/errors.hpp"

namespace weeesort {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr char kContainerMagic[8] = {'W', 'S', 'T', 'E', 'N', 'S', 'R', '1'};
constexpr int kCheckpointVersion = 1;

// Channel statistics of the standard large-scale pretraining corpus, applied
// after scaling to [0, 1] when pretrained weights are in use.
constexpr double kPretrainMean[3] = {0.485, 0.456, 0.406};
constexpr double kPretrainStd[3] = {0.229, 0.224, 0.225};

void write_container(const std::filesystem::path& path, ordered_json header,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    ordered_json index = ordered_json::array();
    std::size_t offset = 0;
    for (const auto& [name, tensor] : tensors) {
        ordered_json jt;
        jt["name"] = name;
        jt["shape"] = tensor->shape;
        jt["offset"] = offset;
        jt["numel"] = tensor->numel();
        index.push_back(std::move(jt));
        offset += tensor->numel();
    }
    header["tensors"] = std::move(index);
    const std::string header_text = header.dump();

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write checkpoint: " + tmp.string());
        }
        out.write(kContainerMagic, sizeof(kContainerMagic));
        const std::uint64_t len = header_text.size();
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
        for (const auto& [name, tensor] : tensors) {
            out.write(reinterpret_cast<const char*>(tensor->data.data()),
                      static_cast<std::streamsize>(tensor->data.size() * sizeof(float)));
        }
        if (!out) {
            throw IoError("short write while saving: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::pair<json, std::vector<std::pair<std::string, Tensor>>>
read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path.string());
    }
    char magic[sizeof(kContainerMagic)];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kContainerMagic))) {
        throw SchemaError(path.string() + ": not a weeesort tensor container");
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string header_text(len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(len));
    if (!in) {
        throw SchemaError(path.string() + ": truncated container header");
    }
    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::parse_error& e) {
        throw SchemaError(fmt::format("{}: bad container header: {}", path.string(), e.what()));
    }
    std::vector<std::pair<std::string, Tensor>> tensors;
    for (const json& jt : header.at("tensors")) {
        Tensor t(jt.at("shape").get<std::vector<int>>());
        if (t.numel() != jt.at("numel").get<std::size_t>()) {
            throw SchemaError(path.string() + ": tensor index is inconsistent");
        }
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!in) {
            throw SchemaError(fmt::format("{}: truncated tensor payload for '{}'",
                                          path.string(), jt.at("name").get<std::string>()));
        }
        tensors.emplace_back(jt.at("name").get<std::string>(), std::move(t));
    }
    return {std::move(header), std::move(tensors)};
}

}  // namespace

// ---- configs ----

void ModelConfig::validate() const {
    if (backbone.empty()) throw ConfigError("model backbone must be set");
    if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
    if (input_size < backbone_min_input(backbone)) {
        throw ConfigError(fmt::format("input_size {} is below the minimum {} for '{}'",
                                      input_size, backbone_min_input(backbone), backbone));
    }
}

nlohmann::json ModelConfig::to_json() const {
    ordered_json j;
    j["backbone"] = backbone;
    j["pretrained"] = pretrained;
    j["num_classes"] = num_classes;
    j["input_size"] = input_size;
    if (weights_dir) j["weights_dir"] = *weights_dir;
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    if (j.contains("backbone")) c.backbone = j["backbone"].get<std::string>();
    if (j.contains("pretrained")) c.pretrained = j["pretrained"].get<bool>();
    if (j.contains("num_classes")) c.num_classes = j["num_classes"].get<int>();
    if (j.contains("input_size")) c.input_size = j["input_size"].get<int>();
    if (j.contains("weights_dir") && !j["weights_dir"].is_null()) {
        c.weights_dir = j["weights_dir"].get<std::string>();
    }
    return c;
}

void TrainingConfig::validate() const {
    if (patience >= max_epochs) {
        throw ConfigError(fmt::format("patience ({}) must be below max_epochs ({})",
                                      patience, max_epochs));
    }
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (optimizer != "adam") {
        throw ConfigError(fmt::format("optimizer '{}' is not available (use \"adam\")",
                                      optimizer));
    }
    if (loss != "categorical_cross_entropy") {
        throw ConfigError(fmt::format(
            "loss '{}' is not available (use \"categorical_cross_entropy\")", loss));
    }
    if (monitor != "val_accuracy") {
        throw ConfigError(fmt::format("monitor '{}' is not available (use \"val_accuracy\")",
                                      monitor));
    }
    if (class_weights && !class_weights->is_null()) {
        throw ConfigError("class_weights is reserved for a future weighted loss");
    }
}

nlohmann::json TrainingConfig::to_json() const {
    ordered_json j;
    j["max_epochs"] = max_epochs;
    j["patience"] = patience;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["optimizer"] = optimizer;
    j["loss"] = loss;
    j["seed"] = seed;
    j["monitor"] = monitor;
    j["freeze_backbone"] = freeze_backbone;
    return j;
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
    TrainingConfig c;
    if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<int>();
    if (j.contains("patience")) c.patience = j["patience"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("optimizer")) c.optimizer = j["optimizer"].get<std::string>();
    if (j.contains("loss")) c.loss = j["loss"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::int64_t>();
    if (j.contains("monitor")) c.monitor = j["monitor"].get<std::string>();
    if (j.contains("freeze_backbone")) c.freeze_backbone = j["freeze_backbone"].get<bool>();
    if (j.contains("class_weights") && !j["class_weights"].is_null()) {
        c.class_weights = j["class_weights"];
    }
    return c;
}

// ---- early stopping ----

EarlyStopper::EarlyStopper(int patience)
    : patience_(patience), best_value_(-std::numeric_limits<double>::infinity()) {
    if (patience < 1) throw ArgumentError("patience must be at least 1");
}

bool EarlyStopper::update(int epoch, double value) {
    improved_ = value > best_value_;
    if (improved_) {
        best_value_ = value;
        best_epoch_ = epoch;
    }
    return epoch - best_epoch_ >= patience_;
}

std::pair<bool, int> should_stop(const TrainingHistory& history, int patience) {
    if (history.records.empty()) {
        throw ArgumentError("cannot evaluate early stopping on an empty history");
    }
    EarlyStopper stopper(patience);
    bool stop = false;
    for (const EpochRecord& r : history.records) {
        stop = stopper.update(r.epoch, r.val_accuracy);
    }
    return {stop, stopper.best_epoch()};
}

// ---- checkpoints ----

void Checkpoint::save(const std::filesystem::path& path) const {
    ordered_json header;
    header["format_version"] = format_version;
    header["kind"] = "checkpoint";
    header["model_config"] = model_config.to_json();
    header["training_config"] = training_config.to_json();
    header["classes"] = classes;
    header["epoch"] = epoch;
    header["val_accuracy"] = val_accuracy;
    std::vector<std::pair<std::string, const Tensor*>> refs;
    refs.reserve(tensors.size());
    for (const auto& [name, tensor] : tensors) refs.emplace_back(name, &tensor);
    write_container(path, std::move(header), refs);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    auto [header, tensors] = read_container(path);
    Checkpoint cp;
    cp.format_version = header.at("format_version").get<int>();
    if (cp.format_version != kCheckpointVersion) {
        throw SchemaError(fmt::format("{}: checkpoint format {} is not supported (expected {})",
                                      path.string(), cp.format_version, kCheckpointVersion));
    }
    cp.model_config = ModelConfig::from_json(header.at("model_config"));
    if (header.contains("training_config")) {
        cp.training_config = TrainingConfig::from_json(header.at("training_config"));
    }
    if (header.contains("classes")) {
        cp.classes = header.at("classes").get<std::vector<std::string>>();
    }
    if (header.contains("epoch")) cp.epoch = header.at("epoch").get<int>();
    if (header.contains("val_accuracy")) {
        cp.val_accuracy = header.at("val_accuracy").get<double>();
    }
    cp.tensors = std::move(tensors);
    return cp;
}

// ---- classifier construction ----

namespace {

void copy_tensors_into(Network& net,
                       const std::vector<std::pair<std::string, Tensor>>& tensors,
                       bool skip_head, const std::string& source) {
    std::unordered_map<std::string, const Tensor*> by_name;
    for (const auto& [name, tensor] : tensors) by_name[name] = &tensor;
    for (Param& p : net.params()) {
        if (skip_head && p.name.rfind("head.", 0) == 0) continue;
        const auto it = by_name.find(p.name);
        if (it == by_name.end()) {
            throw SchemaError(fmt::format("{} has no tensor '{}'", source, p.name));
        }
        if (it->second->shape != p.value->shape) {
            throw ConfigError(fmt::format(
                "{}: tensor '{}' has shape mismatch (stored {} vs model {}); check the "
                "backbone and input_size",
                source, p.name, fmt::join(it->second->shape, "x"),
                fmt::join(p.value->shape, "x")));
        }
        p.value->data = it->second->data;
    }
}

std::filesystem::path pretrained_weights_path(const ModelConfig& config) {
    std::string dir;
    if (config.weights_dir) {
        dir = *config.weights_dir;
    } else if (const char* env = std::getenv("WEEESORT_WEIGHTS_DIR")) {
        dir = env;
    }
    if (dir.empty()) {
        throw PretrainedWeightsError(fmt::format(
            "pretrained weights requested for backbone '{}' but no weights directory is "
            "configured; set model.weights_dir or WEEESORT_WEIGHTS_DIR, or use "
            "pretrained=false",
            config.backbone));
    }
    return std::filesystem::path(dir) / (config.backbone + "_imagenet.wts");
}

}  // namespace

Classifier build_classifier(const ModelConfig& config, std::vector<std::string> classes,
                            std::uint64_t init_seed) {
    config.validate();
    if (static_cast<int>(classes.size()) != config.num_classes) {
        throw ArgumentError(fmt::format("num_classes is {} but {} class labels were given",
                                        config.num_classes, classes.size()));
    }
    Classifier clf{config, std::move(classes),
                   build_backbone(config.backbone, config.input_size, config.num_classes,
                                  init_seed)};
    if (config.pretrained) {
        const auto path = pretrained_weights_path(config);
        if (!std::filesystem::exists(path)) {
            throw PretrainedWeightsError(fmt::format(
                "pretrained weights for backbone '{}' not found at {}; provide the file or "
                "set pretrained=false",
                config.backbone, path.string()));
        }
        auto [header, tensors] = read_container(path);
        copy_tensors_into(clf.net, tensors, /*skip_head=*/true,
                          "weights file " + path.string());
    }
    return clf;
}

Classifier classifier_from_checkpoint(const Checkpoint& checkpoint) {
    checkpoint.model_config.validate();
    Classifier clf{checkpoint.model_config, checkpoint.classes,
                   build_backbone(checkpoint.model_config.backbone,
                                  checkpoint.model_config.input_size,
                                  checkpoint.model_config.num_classes, /*init_seed=*/0)};
    copy_tensors_into(clf.net, checkpoint.tensors, /*skip_head=*/false, "checkpoint");
    return clf;
}

Checkpoint snapshot_checkpoint(Classifier& classifier, const TrainingConfig& training,
                               int epoch, double val_accuracy) {
    Checkpoint cp;
    cp.model_config = classifier.config;
    cp.training_config = training;
    cp.classes = classifier.classes;
    cp.epoch = epoch;
    cp.val_accuracy = val_accuracy;
    for (Param& p : classifier.net.params()) {
        cp.tensors.emplace_back(p.name, *p.value);
    }
    return cp;
}

void save_weights_file(Classifier& classifier, const std::filesystem::path& path) {
    ordered_json header;
    header["format_version"] = kCheckpointVersion;
    header["kind"] = "weights";
    header["model_config"] = classifier.config.to_json();
    std::vector<std::pair<std::string, const Tensor*>> refs;
    for (Param& p : classifier.net.params()) refs.emplace_back(p.name, p.value);
    write_container(path, std::move(header), refs);
}

// ---- data plumbing ----

int label_index_for(const std::string& crop_class, const std::vector<std::string>& classes) {
    const auto it = std::find(classes.begin(), classes.end(), crop_class);
    if (it != classes.end()) return static_cast<int>(it - classes.begin());
    const auto other = std::find(classes.begin(), classes.end(), "other");
    if (other != classes.end()) return static_cast<int>(other - classes.begin());
    throw ArgumentError(fmt::format(
        "class '{}' is not in the model's class list ({}) and there is no 'other' class",
        crop_class, fmt::join(classes, ", ")));
}

namespace {

struct Item {
    std::string path;  // resolved
    int label;
};

class CropLoader {
public:
    CropLoader(std::filesystem::path base, bool cache)
        : base_(std::move(base)), cache_(cache) {}

    const Image& load(const std::string& rel_path) {
        if (cache_) {
            auto it = cache_map_.find(rel_path);
            if (it != cache_map_.end()) return it->second;
            auto [pos, inserted] = cache_map_.emplace(rel_path, read(rel_path));
            return pos->second;
        }
        scratch_ = read(rel_path);
        return scratch_;
    }

private:
    Image read(const std::string& rel_path) const {
        std::filesystem::path p(rel_path);
        if (p.is_relative()) p = base_ / p;
        return load_png(p);
    }

    std::filesystem::path base_;
    bool cache_;
    std::unordered_map<std::string, Image> cache_map_;
    Image scratch_;
};

/// Resizes to the model input and scales/standardizes into the batch tensor.
void fill_input(const Image& crop, bool pretrained, int input_size, float* dest) {
    const Image resized = resize_bilinear(crop, input_size, input_size);
    const std::size_t n = resized.data.size();
    if (pretrained) {
        for (std::size_t i = 0; i < n; ++i) {
            const int c = static_cast<int>(i % 3);
            dest[i] = static_cast<float>(
                (resized.data[i] / 255.0 - kPretrainMean[c]) / kPretrainStd[c]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            dest[i] = static_cast<float>(resized.data[i] / 255.0);
        }
    }
}

struct PassStats {
    double loss_sum = 0.0;
    long correct = 0;
    long count = 0;

    double loss() const { return count > 0 ? loss_sum / count : 0.0; }
    double accuracy() const {
        return count > 0 ? static_cast<double>(correct) / count : 0.0;
    }
};

}  // namespace

std::pair<TrainingHistory, Checkpoint> train(Classifier& classifier,
                                             const DatasetManifest& manifest,
                                             const AugmentationPolicy& augmentation,
                                             const TrainingConfig& config,
                                             const TrainOptions& options) {
    config.validate();
    augmentation.validate();

    std::vector<Item> train_items, val_items;
    std::vector<std::size_t> train_ordinals;  // stable per-crop augmentation streams
    for (std::size_t i = 0; i < manifest.crops.size(); ++i) {
        const CropEntry& c = manifest.crops[i];
        const int label = label_index_for(c.class_label, classifier.classes);
        if (c.split == "train") {
            train_items.push_back(Item{c.path, label});
            train_ordinals.push_back(i);
        } else if (c.split == "val") {
            val_items.push_back(Item{c.path, label});
        }
    }
    if (train_items.empty()) throw SchemaError("manifest has an empty train split");
    if (val_items.empty()) throw SchemaError("manifest has an empty val split");

    CropLoader loader(options.dataset_dir, options.cache_images);
    const bool pretrained_norm = classifier.config.pretrained;
    const int input_size = classifier.config.input_size;
    const int batch = config.batch_size;

    std::vector<Param> trainable;
    for (Param& p : classifier.net.params()) {
        if (config.freeze_backbone && p.name.rfind("head.", 0) != 0) continue;
        trainable.push_back(p);
    }
    AdamOptimizer optimizer(trainable, config.learning_rate);

    EarlyStopper stopper(config.patience);
    TrainingHistory history;
    Checkpoint best;
    const std::uint64_t seed = static_cast<std::uint64_t>(config.seed);

    auto eval_pass = [&](const std::vector<Item>& items) {
        PassStats stats;
        for (std::size_t start = 0; start < items.size(); start += batch) {
            const std::size_t n = std::min<std::size_t>(batch, items.size() - start);
            Tensor x({static_cast<int>(n), input_size, input_size, 3});
            std::vector<int> labels(n);
            for (std::size_t s = 0; s < n; ++s) {
                const Item& item = items[start + s];
                // Validation and test batches are never augmented.
                fill_input(loader.load(item.path), pretrained_norm, input_size,
                           x.data.data() + s * Tensor::numel_of({input_size, input_size, 3}));
                labels[s] = item.label;
            }
            const Tensor logits = classifier.net.forward(x, /*training=*/false);
            const LossResult lr = softmax_cross_entropy(logits, labels);
            stats.loss_sum += lr.loss * static_cast<double>(n);
            stats.count += static_cast<long>(n);
            for (std::size_t s = 0; s < n; ++s) {
                const float* row =
                    lr.probabilities.data.data() + s * static_cast<std::size_t>(
                        classifier.config.num_classes);
                const int pred = static_cast<int>(
                    std::max_element(row, row + classifier.config.num_classes) - row);
                if (pred == labels[s]) ++stats.correct;
            }
        }
        return stats;
    };

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<std::size_t> order(train_items.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        RngStream shuffle_rng = RngStream::derive({seed, 0x5Fu, static_cast<std::uint64_t>(epoch)});
        shuffle_rng.shuffle(order);

        PassStats train_stats;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t n = std::min<std::size_t>(batch, order.size() - start);
            Tensor x({static_cast<int>(n), input_size, input_size, 3});
            std::vector<int> labels(n);
            for (std::size_t s = 0; s < n; ++s) {
                const std::size_t idx = order[start + s];
                const Item& item = train_items[idx];
                const Image& crop = loader.load(item.path);
                RngStream aug_rng = RngStream::derive(
                    {seed, 0xA7Cu, static_cast<std::uint64_t>(epoch), train_ordinals[idx]});
                const AugmentationParams params = sample_params(augmentation, aug_rng);
                const Image augmented = apply_augmentation(crop, params, augmentation);
                fill_input(augmented, pretrained_norm, input_size,
                           x.data.data() + s * Tensor::numel_of({input_size, input_size, 3}));
                labels[s] = item.label;
            }
            optimizer.zero_grad();
            const Tensor logits = classifier.net.forward(x, /*training=*/true);
            const LossResult lr = softmax_cross_entropy(logits, labels);
            if (!std::isfinite(lr.loss)) {
                throw TrainingError(
                    fmt::format("non-finite training loss {} at epoch {} (batch at {})",
                                lr.loss, epoch, start),
                    epoch);
            }
            classifier.net.backward(lr.grad);
            optimizer.step();

            train_stats.loss_sum += lr.loss * static_cast<double>(n);
            train_stats.count += static_cast<long>(n);
            for (std::size_t s = 0; s < n; ++s) {
                const float* row = lr.probabilities.data.data() +
                                   s * static_cast<std::size_t>(classifier.config.num_classes);
                const int pred = static_cast<int>(
                    std::max_element(row, row + classifier.config.num_classes) - row);
                if (pred == labels[s]) ++train_stats.correct;
            }
        }

        const PassStats val_stats = eval_pass(val_items);
        if (!std::isfinite(val_stats.loss())) {
            throw TrainingError(
                fmt::format("non-finite validation loss at epoch {}", epoch), epoch);
        }
        double val_accuracy = val_stats.accuracy();
        if (options.val_accuracy_override) {
            val_accuracy = options.val_accuracy_override(epoch, val_accuracy);
        }

        EpochRecord record{epoch, train_stats.loss(), train_stats.accuracy(),
                           val_stats.loss(), val_accuracy};
        history.records.push_back(record);

        const bool stop = stopper.update(epoch, val_accuracy);
        if (stopper.improved()) {
            best = snapshot_checkpoint(classifier, config, epoch, val_accuracy);
            if (!options.checkpoint_path.empty()) {
                best.save(options.checkpoint_path);
            }
        }
        if (options.on_epoch_end) options.on_epoch_end(record);
        history.stopped_epoch = epoch;
        if (stop) break;
    }
    history.best_epoch = stopper.best_epoch();
    return {std::move(history), std::move(best)};
}

std::vector<Prediction> predict(Classifier& classifier, std::span<const Image> crops) {
    const int input_size = classifier.config.input_size;
    const int k = classifier.config.num_classes;
    std::vector<Prediction> out;
    constexpr std::size_t kBatch = 32;
    for (std::size_t start = 0; start < crops.size(); start += kBatch) {
        const std::size_t n = std::min(kBatch, crops.size() - start);
        Tensor x({static_cast<int>(n), input_size, input_size, 3});
        for (std::size_t s = 0; s < n; ++s) {
            const Image& crop = crops[start + s];
            if (crop.height != kCropSize || crop.width != kCropSize || crop.channels != 3) {
                throw ArgumentError(fmt::format(
                    "predict expects {}x{}x3 crops, got {}x{}x{}", kCropSize, kCropSize,
                    crop.width, crop.height, crop.channels));
            }
            fill_input(crop, classifier.config.pretrained, input_size,
                       x.data.data() + s * Tensor::numel_of({input_size, input_size, 3}));
        }
        const Tensor logits = classifier.net.forward(x, /*training=*/false);
        const Tensor probs = softmax(logits);
        for (std::size_t s = 0; s < n; ++s) {
            Prediction p;
            const float* row = probs.data.data() + s * static_cast<std::size_t>(k);
            p.probabilities.assign(row, row + k);
            p.class_index = static_cast<int>(std::max_element(row, row + k) - row);
            p.class_label = classifier.classes[static_cast<std::size_t>(p.class_index)];
            out.push_back(std::move(p));
        }
    }
    return out;
}

// ---- history CSV ----

void write_history_csv(const TrainingHistory& history, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write history: " + path.string());
    }
    out << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
    for (const EpochRecord& r : history.records) {
        out << fmt::format("{},{:.8f},{:.8f},{:.8f},{:.8f}\n", r.epoch, r.train_loss,
                           r.train_accuracy, r.val_loss, r.val_accuracy);
    }
}

TrainingHistory read_history_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open history: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) ||
        line != "epoch,train_loss,train_accuracy,val_loss,val_accuracy") {
        throw ParseError(path.string() +
                         ": expected header \"epoch,train_loss,train_accuracy,val_loss,"
                         "val_accuracy\"");
    }
    TrainingHistory history;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::array<std::string, 5> fields;
        std::size_t pos = 0;
        for (int f = 0; f < 5; ++f) {
            const std::size_t comma = line.find(',', pos);
            if (f < 4 && comma == std::string::npos) {
                throw ParseError(fmt::format("{}: row {} has too few columns", path.string(), row));
            }
            fields[static_cast<std::size_t>(f)] =
                line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            pos = comma == std::string::npos ? line.size() : comma + 1;
        }
        try {
            EpochRecord r;
            r.epoch = std::stoi(fields[0]);
            r.train_loss = std::stod(fields[1]);
            r.train_accuracy = std::stod(fields[2]);
            r.val_loss = std::stod(fields[3]);
            r.val_accuracy = std::stod(fields[4]);
            history.records.push_back(r);
        } catch (const std::exception&) {
            throw ParseError(fmt::format("{}: row {} is not numeric: '{}'", path.string(),
                                         row, line));
        }
    }
    if (!history.records.empty()) {
        history.stopped_epoch = history.records.back().epoch;
        double best = -std::numeric_limits<double>::infinity();
        for (const EpochRecord& r : history.records) {
            if (r.val_accuracy > best) {
                best = r.val_accuracy;
                history.best_epoch = r.epoch;
            }
        }
    }
    return history;
}

}  // namespace weeesort
