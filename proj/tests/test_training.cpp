#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "weeesort/errors.hpp"
#include "weeesort/synthetic.hpp"
#include "weeesort/training.hpp"

using namespace weeesort;

namespace {

/// Tiny on-disk dataset for protocol tests: 4 classes, image_size 96 sources,
/// 500x500 crops, splits over a handful of items.
DatasetManifest tiny_dataset(const std::filesystem::path& dir, int per_class = 12) {
    SyntheticSpec spec;
    spec.per_class = {{"battery", per_class},
                      {"pcb", per_class},
                      {"glass", per_class},
                      {"metal_piece", per_class}};
    spec.image_size = 96;
    spec.seed = 99;
    const auto generated = generate_synthetic_dataset(spec, dir / "source");
    const auto parsed = parse_annotation_file(generated.annotation_file);
    return build_crop_dataset(parsed.records, file_image_loader(dir / "source"), dir, 5);
}

ModelConfig tiny_model() {
    ModelConfig m;
    m.backbone = "smallcnn";
    m.pretrained = false;
    m.num_classes = 4;
    m.input_size = 16;
    return m;
}

TrainingConfig tiny_training(int max_epochs = 3, int patience = 2) {
    TrainingConfig t;
    t.max_epochs = max_epochs;
    t.patience = patience;
    t.batch_size = 8;
    t.seed = 21;
    return t;
}

}  // namespace

TEST_CASE("early stopper: tie keeps the earliest epoch, then patience fires") {
    EarlyStopper stopper(1);
    CHECK_FALSE(stopper.update(1, 0.5));
    CHECK_FALSE(stopper.update(2, 0.6));
    CHECK(stopper.update(3, 0.6));  // no improvement on a tie
    CHECK(stopper.best_epoch() == 2);
}

TEST_CASE("early stopper: two epochs with patience 10 do not stop") {
    EarlyStopper stopper(10);
    CHECK_FALSE(stopper.update(1, 0.5));
    CHECK_FALSE(stopper.update(2, 0.7));
    CHECK(stopper.best_epoch() == 2);
}

TEST_CASE("early stopper reproduces the 10/20 and 22/32 protocol traces") {
    {
        EarlyStopper stopper(10);
        bool stopped = false;
        int stop_epoch = 0;
        for (int e = 1; e <= 100 && !stopped; ++e) {
            const double acc = e <= 10 ? 0.5 + 0.02 * e : 0.65;  // peak at epoch 10
            stopped = stopper.update(e, acc);
            stop_epoch = e;
        }
        CHECK(stopped);
        CHECK(stop_epoch == 20);
        CHECK(stopper.best_epoch() == 10);
    }
    {
        EarlyStopper stopper(10);
        bool stopped = false;
        int stop_epoch = 0;
        for (int e = 1; e <= 100 && !stopped; ++e) {
            const double acc = e <= 22 ? 0.3 + 0.01 * e : 0.5;  // peak at epoch 22
            stopped = stopper.update(e, acc);
            stop_epoch = e;
        }
        CHECK(stopped);
        CHECK(stop_epoch == 32);
        CHECK(stopper.best_epoch() == 22);
    }
}

TEST_CASE("should_stop replays a recorded history") {
    TrainingHistory history;
    history.records = {{1, 0, 0, 0, 0.5}, {2, 0, 0, 0, 0.6}, {3, 0, 0, 0, 0.6}};
    const auto [stop, best] = should_stop(history, 1);
    CHECK(stop);
    CHECK(best == 2);
    const auto [stop10, best10] = should_stop(history, 10);
    CHECK_FALSE(stop10);
    CHECK(best10 == 2);
    CHECK_THROWS_AS(should_stop(TrainingHistory{}, 1), ArgumentError);
}

TEST_CASE("monotonically improving series runs to max_epochs") {
    EarlyStopper stopper(3);
    bool stopped = false;
    for (int e = 1; e <= 8; ++e) {
        stopped = stopper.update(e, 0.1 * e);
    }
    CHECK_FALSE(stopped);
    CHECK(stopper.best_epoch() == 8);
}

TEST_CASE("train honors an injected val-accuracy series and checkpoints the peak") {
    // The canonical protocol trace: peak at epoch 10, patience 10, stop at 20.
    testing::TempDir dir("train");
    const DatasetManifest manifest = tiny_dataset(dir.path(), 10);

    Classifier clf = build_classifier(tiny_model(), manifest.classes, 21);
    TrainingConfig config = tiny_training(/*max_epochs=*/100, /*patience=*/10);
    TrainOptions options;
    options.dataset_dir = dir.path();
    options.checkpoint_path = dir.path() / "best.ckpt";
    options.val_accuracy_override = [](int epoch, double) {
        return epoch <= 10 ? 0.05 * epoch : 0.3;  // peak at epoch 10
    };
    const auto [history, best] =
        train(clf, manifest, AugmentationPolicy::disabled_policy(), config, options);

    CHECK(history.best_epoch == 10);
    CHECK(history.stopped_epoch == 20);
    CHECK(history.stopped_epoch - history.best_epoch == config.patience);
    CHECK(history.records.size() == 20);
    CHECK(history.records[9].val_accuracy == doctest::Approx(0.5));
    CHECK(best.epoch == 10);
    CHECK(best.val_accuracy == doctest::Approx(0.5));
    CHECK(std::filesystem::exists(options.checkpoint_path));

    const Checkpoint loaded = Checkpoint::load(options.checkpoint_path);
    CHECK(loaded.epoch == 10);
    CHECK(loaded.classes == manifest.classes);
    CHECK(loaded.model_config == clf.config);
}

TEST_CASE("non-finite loss aborts with the offending epoch") {
    testing::TempDir dir("nan");
    const DatasetManifest manifest = tiny_dataset(dir.path(), 10);
    Classifier clf = build_classifier(tiny_model(), manifest.classes, 1);
    TrainingConfig config = tiny_training(4, 2);
    config.learning_rate = 1e22;  // guaranteed blow-up
    TrainOptions options;
    options.dataset_dir = dir.path();
    try {
        train(clf, manifest, AugmentationPolicy::disabled_policy(), config, options);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch >= 1);
        CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
    }
}

TEST_CASE("freeze_backbone trains only the head") {
    testing::TempDir dir("freeze");
    const DatasetManifest manifest = tiny_dataset(dir.path(), 10);
    Classifier clf = build_classifier(tiny_model(), manifest.classes, 13);

    std::vector<std::pair<std::string, std::vector<float>>> initial;
    for (Param& p : clf.net.params()) initial.emplace_back(p.name, p.value->data);

    TrainingConfig config = tiny_training(2, 1);
    config.freeze_backbone = true;
    TrainOptions options;
    options.dataset_dir = dir.path();
    train(clf, manifest, AugmentationPolicy::disabled_policy(), config, options);

    for (std::size_t i = 0; i < initial.size(); ++i) {
        const Param p = clf.net.params()[i];
        if (p.name.rfind("head.", 0) == 0) {
            CHECK(p.value->data != initial[i].second);
        } else {
            CHECK(p.value->data == initial[i].second);
        }
    }
}

TEST_CASE("checkpoint round trip reproduces predictions exactly") {
    testing::TempDir dir("ckpt");
    const DatasetManifest manifest = tiny_dataset(dir.path());

    Classifier clf = build_classifier(tiny_model(), manifest.classes, 3);
    TrainOptions options;
    options.dataset_dir = dir.path();
    const auto [history, best] =
        train(clf, manifest, AugmentationPolicy::disabled_policy(), tiny_training(2, 1),
              options);

    // A few val crops as a fixed probe batch.
    std::vector<Image> probe;
    for (const auto& c : manifest.crops) {
        if (c.split == "val" && probe.size() < 6) {
            probe.push_back(load_png(dir.path() / c.path));
        }
    }
    REQUIRE(!probe.empty());

    Classifier restored = classifier_from_checkpoint(best);
    // In-memory classifier holds the last-epoch weights; rebuild the best
    // epoch from the checkpoint on both sides of the comparison.
    const auto file_path = dir.path() / "roundtrip.ckpt";
    best.save(file_path);
    Classifier reloaded = classifier_from_checkpoint(Checkpoint::load(file_path));

    const auto a = predict(restored, probe);
    const auto b = predict(reloaded, probe);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].class_index == b[i].class_index);
        for (std::size_t j = 0; j < a[i].probabilities.size(); ++j) {
            CHECK(std::abs(a[i].probabilities[j] - b[i].probabilities[j]) <= 1e-6);
        }
    }
}

TEST_CASE("train validation metrics come from un-augmented passes") {
    testing::TempDir dir("valiso");
    const DatasetManifest manifest = tiny_dataset(dir.path());

    Classifier clf = build_classifier(tiny_model(), manifest.classes, 4);
    TrainingConfig config = tiny_training(2, 1);
    AugmentationPolicy policy;  // enabled, full ranges
    TrainOptions options;
    options.dataset_dir = dir.path();
    const auto [history, best] = train(clf, manifest, policy, config, options);

    // Recompute the best epoch's val accuracy from its checkpoint with plain
    // inference; any augmentation in the val pass would break the equality.
    Classifier restored = classifier_from_checkpoint(best);
    std::vector<Image> val_crops;
    std::vector<int> labels;
    for (const auto& c : manifest.crops) {
        if (c.split != "val") continue;
        val_crops.push_back(load_png(dir.path() / c.path));
        labels.push_back(label_index_for(c.class_label, restored.classes));
    }
    const auto preds = predict(restored, val_crops);
    long correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].class_index == labels[i]) ++correct;
    }
    const double recomputed = static_cast<double>(correct) / static_cast<double>(preds.size());
    CHECK(recomputed ==
          history.records[static_cast<std::size_t>(best.epoch - 1)].val_accuracy);
}

TEST_CASE("training is deterministic for a fixed seed") {
    testing::TempDir dir("det");
    const DatasetManifest manifest = tiny_dataset(dir.path());
    AugmentationPolicy policy;

    auto run = [&] {
        Classifier clf = build_classifier(tiny_model(), manifest.classes, 77);
        TrainOptions options;
        options.dataset_dir = dir.path();
        TrainingConfig config = tiny_training(2, 1);
        config.seed = 77;
        return train(clf, manifest, policy, config, options).first;
    };
    const TrainingHistory a = run();
    const TrainingHistory b = run();
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i] == b.records[i]);
    }
}

TEST_CASE("train rejects manifests with empty splits") {
    testing::TempDir dir("empty");
    DatasetManifest manifest = tiny_dataset(dir.path());
    for (auto& c : manifest.crops) {
        if (c.split == "val") c.split = "train";
    }
    Classifier clf = build_classifier(tiny_model(), manifest.classes, 1);
    TrainOptions options;
    options.dataset_dir = dir.path();
    CHECK_THROWS_AS(train(clf, manifest, AugmentationPolicy::disabled_policy(),
                          tiny_training(), options),
                    SchemaError);
}

TEST_CASE("pretrained weights load into the backbone but not the head") {
    testing::TempDir dir("weights");
    ModelConfig donor_config = tiny_model();
    Classifier donor = build_classifier(donor_config, kDefaultClasses, 111);
    save_weights_file(donor, dir.path() / "smallcnn_imagenet.wts");

    ModelConfig config = tiny_model();
    config.pretrained = true;
    config.weights_dir = dir.path().string();
    Classifier loaded = build_classifier(config, kDefaultClasses, 222);
    Classifier fresh_config_twin = [&] {
        ModelConfig c = tiny_model();  // pretrained=false
        return build_classifier(c, kDefaultClasses, 222);
    }();

    auto donor_params = donor.net.params();
    auto loaded_params = loaded.net.params();
    auto fresh_params = fresh_config_twin.net.params();
    for (std::size_t i = 0; i < donor_params.size(); ++i) {
        if (donor_params[i].name.rfind("head.", 0) == 0) {
            // Head stays at the seed-222 init, not the donor weights.
            CHECK(loaded_params[i].value->data == fresh_params[i].value->data);
        } else {
            CHECK(loaded_params[i].value->data == donor_params[i].value->data);
            if (donor_params[i].name.ends_with(".weight")) {
                // Biases are zero-initialized everywhere, so only weights
                // can distinguish donor weights from a fresh init.
                CHECK(loaded_params[i].value->data != fresh_params[i].value->data);
            }
        }
    }
}

TEST_CASE("missing pretrained weights raise an availability error") {
    ModelConfig config = tiny_model();
    config.pretrained = true;
    config.weights_dir = "/nonexistent/weights";
    CHECK_THROWS_AS(build_classifier(config, kDefaultClasses, 0), PretrainedWeightsError);
    ModelConfig no_dir = tiny_model();
    no_dir.pretrained = true;
    unsetenv("WEEESORT_WEIGHTS_DIR");
    CHECK_THROWS_AS(build_classifier(no_dir, kDefaultClasses, 0), PretrainedWeightsError);
}

TEST_CASE("label_index_for supports the battery-vs-other collapse") {
    const std::vector<std::string> binary = {"battery", "other"};
    CHECK(label_index_for("battery", binary) == 0);
    CHECK(label_index_for("pcb", binary) == 1);
    CHECK(label_index_for("glass", binary) == 1);
    CHECK(label_index_for("battery", kDefaultClasses) == 1);
    CHECK_THROWS_AS(label_index_for("widget", kDefaultClasses), ArgumentError);
}

TEST_CASE("predict validates crop shapes and sums probabilities to one") {
    Classifier clf = build_classifier(tiny_model(), kDefaultClasses, 8);
    std::vector<Image> bad = {Image(100, 100, 3)};
    CHECK_THROWS_AS(predict(clf, bad), ArgumentError);

    std::vector<Image> crops;
    RngStream rng(5);
    Image crop(kCropSize, kCropSize, 3);
    for (auto& v : crop.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
    crops.push_back(crop);
    const auto preds = predict(clf, crops);
    REQUIRE(preds.size() == 1);
    double sum = 0.0;
    for (double p : preds[0].probabilities) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));

    const auto again = predict(clf, crops);
    CHECK(again[0].probabilities == preds[0].probabilities);
}

TEST_CASE("training config validation") {
    TrainingConfig t;
    t.patience = 100;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = TrainingConfig{};
    t.optimizer = "sgd";
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = TrainingConfig{};
    t.class_weights = nlohmann::json{{"battery", 2.0}};
    CHECK_THROWS_AS(t.validate(), ConfigError);
    CHECK_NOTHROW(TrainingConfig{}.validate());
}

TEST_CASE("history csv round trip and error reporting") {
    testing::TempDir dir("csv");
    TrainingHistory history;
    history.records = {{1, 1.5, 0.3, 1.7, 0.25}, {2, 1.1, 0.5, 1.4, 0.45}};
    history.best_epoch = 2;
    history.stopped_epoch = 2;
    const auto path = dir.path() / "history.csv";
    write_history_csv(history, path);

    const TrainingHistory back = read_history_csv(path);
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[1].val_accuracy == doctest::Approx(0.45));
    CHECK(back.best_epoch == 2);
    CHECK(back.stopped_epoch == 2);

    std::ofstream(dir.path() / "bad_header.csv") << "epoch,loss\n1,2\n";
    CHECK_THROWS_AS(read_history_csv(dir.path() / "bad_header.csv"), ParseError);

    std::ofstream(dir.path() / "bad_row.csv")
        << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n"
        << "1,0.5,0.5,0.5,0.5\n"
        << "2,oops,0.5,0.5,0.5\n";
    try {
        read_history_csv(dir.path() / "bad_row.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
}

TEST_CASE("checkpoint format version mismatch names both versions") {
    testing::TempDir dir("ver");
    const DatasetManifest manifest = tiny_dataset(dir.path(), 10);
    Classifier clf = build_classifier(tiny_model(), manifest.classes, 2);
    Checkpoint cp = snapshot_checkpoint(clf, tiny_training(), 1, 0.5);
    cp.format_version = 3;
    cp.save(dir.path() / "v3.ckpt");
    try {
        Checkpoint::load(dir.path() / "v3.ckpt");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('3') != std::string::npos);
        CHECK(msg.find('1') != std::string::npos);
    }
}
