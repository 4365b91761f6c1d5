#include <doctest.h>

#include <algorithm>

#include "support.hpp"
#include "weeesort/errors.hpp"
#include "weeesort/metrics.hpp"
#include "weeesort/rng.hpp"

using namespace weeesort;

namespace {

const std::vector<std::string> kFour = {"metal_piece", "battery", "pcb", "glass"};

// Reference test matrices from the source experiment's result sheets.
ConfusionMatrix fourclass_matrix() {
    return ConfusionMatrix(kFour, {{13, 2, 6, 0}, {0, 28, 2, 0}, {5, 1, 17, 1}, {4, 0, 2, 30}});
}

ConfusionMatrix scratch_matrix() {
    return ConfusionMatrix(kFour, {{0, 7, 3, 11}, {1, 14, 6, 9}, {3, 3, 7, 11}, {1, 1, 3, 31}});
}

ConfusionMatrix binary_matrix() {
    return ConfusionMatrix({"battery", "other"}, {{26, 4}, {0, 81}});
}

void check_pp(std::optional<double> value, double expected_percent) {
    REQUIRE(value.has_value());
    CHECK(std::abs(*value * 100.0 - expected_percent) < 0.01);
}

}  // namespace

TEST_CASE("accuracy on the reference matrices") {
    CHECK(accuracy(fourclass_matrix()) == doctest::Approx(88.0 / 111.0));
    CHECK(std::abs(accuracy(fourclass_matrix()) * 100.0 - 79.28) < 0.01);
    CHECK(std::abs(accuracy(binary_matrix()) * 100.0 - 96.40) < 0.01);

    ConfusionMatrix ident(kFour);
    for (std::size_t i = 0; i < 4; ++i) ident.at(i, i) = 10;
    CHECK(accuracy(ident) == doctest::Approx(1.0));

    CHECK_THROWS_AS(accuracy(ConfusionMatrix(kFour)), UndefinedMetricError);
}

TEST_CASE("per-class precision and recall on the reference matrices") {
    const auto cm = fourclass_matrix();
    check_pp(precision(cm, "metal_piece"), 59.09);
    check_pp(recall(cm, "metal_piece"), 61.90);
    check_pp(precision(cm, "battery"), 90.32);
    check_pp(recall(cm, "battery"), 93.33);
    check_pp(precision(cm, "pcb"), 62.96);
    check_pp(recall(cm, "pcb"), 70.83);
    check_pp(precision(cm, "glass"), 96.77);
    check_pp(recall(cm, "glass"), 83.33);

    const auto scratch = scratch_matrix();
    check_pp(precision(scratch, "metal_piece"), 0.00);
    check_pp(recall(scratch, "metal_piece"), 0.00);
    check_pp(precision(scratch, "battery"), 56.00);
    check_pp(recall(scratch, "battery"), 46.67);
    check_pp(precision(scratch, "pcb"), 36.84);
    check_pp(recall(scratch, "pcb"), 29.17);
    check_pp(precision(scratch, "glass"), 50.00);
    check_pp(recall(scratch, "glass"), 86.11);

    const auto binary = binary_matrix();
    check_pp(precision(binary, "battery"), 100.00);
    check_pp(recall(binary, "battery"), 86.67);
    check_pp(precision(binary, "other"), 95.29);
    check_pp(recall(binary, "other"), 100.00);

    CHECK_THROWS_AS(precision(cm, "plutonium"), ArgumentError);
}

TEST_CASE("undefined metrics are nullopt, not zero") {
    // Nothing predicted as battery, no actual glass.
    ConfusionMatrix cm(kFour, {{3, 0, 1, 0}, {2, 0, 0, 0}, {0, 0 , 4, 0}, {0, 0, 0, 0}});
    CHECK_FALSE(precision(cm, "battery").has_value());
    CHECK(recall(cm, "battery").has_value());
    CHECK_FALSE(recall(cm, "glass").has_value());
    CHECK_FALSE(precision(cm, "glass").has_value());
    // Scratch metal precision has 5 predictions, so it is a defined 0.
    CHECK(precision(scratch_matrix(), "metal_piece").value() == 0.0);
}

TEST_CASE("macro means on the reference matrices") {
    const auto report = evaluate(fourclass_matrix());
    CHECK(std::abs(report.macro_precision * 100.0 - 77.29) < 0.01);
    CHECK(std::abs(report.macro_recall * 100.0 - 77.35) < 0.01);

    const auto scratch = evaluate(scratch_matrix());
    CHECK(std::abs(scratch.macro_recall * 100.0 - 40.49) < 0.01);
    // The matrix-derived macro precision; the result sheet's 38.71 figure does
    // not follow from its own matrix.
    CHECK(std::abs(scratch.macro_precision * 100.0 - 35.71) < 0.01);

    const std::vector<ClassMetrics> single = {{"battery", 0.5, std::nullopt}};
    const MacroMeans mm = macro_means(single);
    CHECK(mm.precision == doctest::Approx(0.5));
    CHECK_FALSE(mm.recall.has_value());

    const std::vector<ClassMetrics> none = {{"battery", std::nullopt, std::nullopt}};
    CHECK_THROWS_AS(macro_means(none), UndefinedMetricError);
}

TEST_CASE("from_predictions tallies pairs") {
    const std::vector<std::string> actual = {"battery", "battery", "glass", "pcb"};
    const std::vector<std::string> predicted = {"battery", "pcb", "glass", "pcb"};
    const auto cm = ConfusionMatrix::from_predictions(actual, predicted, kFour);
    CHECK(cm.at(1, 1) == 1);
    CHECK(cm.at(1, 2) == 1);
    CHECK(cm.at(3, 3) == 1);
    CHECK(cm.at(2, 2) == 1);
    CHECK(cm.total() == 4);

    // Identical sequences give a diagonal matrix.
    const auto diag = ConfusionMatrix::from_predictions(actual, actual, kFour);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            if (i != j) CHECK(diag.at(i, j) == 0);
        }
    }

    // Empty sequences give the zero matrix.
    const std::vector<std::string> empty;
    const auto zero = ConfusionMatrix::from_predictions(empty, empty, kFour);
    CHECK(zero.total() == 0);

    const std::vector<std::string> one_battery = {"battery"};
    const std::vector<std::string> one_unknown = {"nope"};
    CHECK_THROWS_AS(ConfusionMatrix::from_predictions(actual, one_battery, kFour),
                    ArgumentError);
    CHECK_THROWS_AS(ConfusionMatrix::from_predictions(one_unknown, one_battery, kFour),
                    ArgumentError);
}

TEST_CASE("matrix metrics equal brute-force counting on random label pairs") {
    RngStream rng(314159);
    const std::vector<std::string> labels = {"a", "b", "c", "d", "e"};
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_int(4));
        const std::vector<std::string> classes(labels.begin(), labels.begin() + k);
        const int n = 1 + static_cast<int>(rng.uniform_int(200));
        std::vector<std::string> actual, predicted;
        for (int i = 0; i < n; ++i) {
            actual.push_back(classes[rng.uniform_int(static_cast<std::uint64_t>(k))]);
            predicted.push_back(classes[rng.uniform_int(static_cast<std::uint64_t>(k))]);
        }
        const auto cm = ConfusionMatrix::from_predictions(actual, predicted, classes);
        for (const auto& cls : classes) {
            std::int64_t tp = 0, fp = 0, fn = 0;
            for (int i = 0; i < n; ++i) {
                if (actual[i] == cls && predicted[i] == cls) ++tp;
                if (actual[i] != cls && predicted[i] == cls) ++fp;
                if (actual[i] == cls && predicted[i] != cls) ++fn;
            }
            const auto p = precision(cm, cls);
            const auto r = recall(cm, cls);
            if (tp + fp == 0) {
                CHECK_FALSE(p.has_value());
            } else {
                CHECK(*p == doctest::Approx(static_cast<double>(tp) / (tp + fp)));
            }
            if (tp + fn == 0) {
                CHECK_FALSE(r.has_value());
            } else {
                CHECK(*r == doctest::Approx(static_cast<double>(tp) / (tp + fn)));
            }
        }
    }
}

TEST_CASE("accuracy decomposes into recall weighted by class share") {
    RngStream rng(2718);
    for (int trial = 0; trial < 50; ++trial) {
        ConfusionMatrix cm(kFour);
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                cm.at(i, j) = static_cast<std::int64_t>(rng.uniform_int(20));
            }
        }
        if (cm.total() == 0) continue;
        double acc = 0.0;
        for (const auto& cls : cm.classes()) {
            const auto r = recall(cm, cls);
            if (!r) continue;
            const double share = static_cast<double>(cm.row_total(cm.index_of(cls))) /
                                 static_cast<double>(cm.total());
            acc += *r * share;
        }
        CHECK(acc == doctest::Approx(accuracy(cm)).epsilon(1e-12));
    }
}

TEST_CASE("class permutation leaves accuracy and macros unchanged") {
    const auto cm = fourclass_matrix();
    const std::vector<std::string> permuted = {"glass", "metal_piece", "battery", "pcb"};
    ConfusionMatrix pm(permuted);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            pm.at(pm.index_of(kFour[i]), pm.index_of(kFour[j])) = cm.at(i, j);
        }
    }
    const auto a = evaluate(cm);
    const auto b = evaluate(pm);
    CHECK(a.accuracy == doctest::Approx(b.accuracy));
    CHECK(a.macro_precision == doctest::Approx(b.macro_precision));
    CHECK(a.macro_recall == doctest::Approx(b.macro_recall));
    for (const auto& m : a.per_class) {
        const auto it =
            std::find_if(b.per_class.begin(), b.per_class.end(),
                         [&](const ClassMetrics& x) { return x.class_label == m.class_label; });
        REQUIRE(it != b.per_class.end());
        CHECK(m.precision.value() == doctest::Approx(it->precision.value()));
    }
}

TEST_CASE("material flow for the battery stream") {
    const auto flow = material_flow(fourclass_matrix(), "battery");
    check_pp(flow.purity, 90.32);
    check_pp(flow.recovery, 93.33);
    const std::vector<std::pair<std::string, std::int64_t>> expected = {
        {"metal_piece", 2}, {"battery", 28}, {"pcb", 1}, {"glass", 0}};
    CHECK(flow.stream_composition == expected);
    REQUIRE(flow.findings.size() == 2);
    CHECK(flow.findings[0].class_label == "metal_piece");
    CHECK(flow.findings[0].severity == Severity::benign);
    CHECK(flow.findings[1].class_label == "pcb");
    CHECK(flow.findings[1].severity == Severity::value_loss);
}

TEST_CASE("material flow recovery for the glass stream") {
    const auto flow = material_flow(fourclass_matrix(), "glass");
    check_pp(flow.recovery, 83.33);
}

TEST_CASE("material flow of a diagonal matrix has no contaminants") {
    ConfusionMatrix cm(kFour);
    for (std::size_t i = 0; i < 4; ++i) cm.at(i, i) = 5;
    const auto flow = material_flow(cm, "battery");
    CHECK(flow.purity == doctest::Approx(1.0));
    CHECK(flow.recovery == doctest::Approx(1.0));
    CHECK(flow.findings.empty());
}

TEST_CASE("material flow needs severities only for actual contaminants") {
    // Binary stream with no contamination works without extra severities.
    const auto flow = material_flow(binary_matrix(), "battery");
    check_pp(flow.purity, 100.00);
    CHECK(flow.findings.empty());
    // A contaminated stream with an unmapped class is an error.
    ConfusionMatrix cm({"battery", "widget"}, {{3, 0}, {2, 1}});
    CHECK_THROWS_AS(material_flow(cm, "battery"), ArgumentError);
    CHECK_THROWS_AS(material_flow(binary_matrix(), "unobtanium"), ArgumentError);
}

TEST_CASE("compare_reports against itself is all zero") {
    const auto report = evaluate(fourclass_matrix());
    const auto delta = compare_reports(report, report);
    CHECK(delta.accuracy_delta == doctest::Approx(0.0));
    CHECK(delta.macro_precision_delta == doctest::Approx(0.0));
    for (const auto& d : delta.per_class) {
        CHECK(d.precision_delta.value() == doctest::Approx(0.0));
        CHECK(d.recall_delta.value() == doctest::Approx(0.0));
    }
}

TEST_CASE("compare_reports pretrained vs scratch battery precision delta") {
    const auto a = evaluate(fourclass_matrix());
    const auto b = evaluate(scratch_matrix());
    const auto delta = compare_reports(a, b);
    const auto it = std::find_if(delta.per_class.begin(), delta.per_class.end(),
                                 [](const ClassDelta& d) { return d.class_label == "battery"; });
    REQUIRE(it != delta.per_class.end());
    CHECK(std::abs(it->precision_delta.value() * 100.0 - (-34.32)) < 0.01);
}

TEST_CASE("compare_reports with a class mapping collapses four classes to two") {
    const auto a = evaluate(fourclass_matrix());
    const auto b = evaluate(binary_matrix());
    CHECK_THROWS_AS(compare_reports(a, b), ArgumentError);
    const ClassMapping mapping = {
        {"metal_piece", "other"}, {"pcb", "other"}, {"glass", "other"}};
    const auto delta = compare_reports(a, b, mapping);
    REQUIRE(delta.per_class.size() == 2);
    CHECK(delta.per_class[0].class_label == "battery");
    // Collapsed four-class battery column: 28 TP of 31 predicted, 30 actual.
    CHECK(delta.per_class[0].precision_delta.value() ==
          doctest::Approx(1.0 - 28.0 / 31.0));
    CHECK(delta.per_class[0].recall_delta.value() ==
          doctest::Approx(26.0 / 30.0 - 28.0 / 30.0));
}

TEST_CASE("remap_classes merges rows and columns") {
    const auto merged = remap_classes(
        fourclass_matrix(), {{"metal_piece", "other"}, {"pcb", "other"}, {"glass", "other"}},
        {"battery", "other"});
    CHECK(merged.at(0, 0) == 28);
    CHECK(merged.at(0, 1) == 2);
    CHECK(merged.at(1, 0) == 3);
    CHECK(merged.at(1, 1) == 78);
    CHECK(merged.total() == 111);
}

TEST_CASE("report json serializes undefined metrics as null") {
    ConfusionMatrix cm(kFour, {{3, 0, 1, 0}, {2, 0, 0, 0}, {0, 0, 4, 0}, {0, 0, 0, 0}});
    const auto j = report_to_json(evaluate(cm));
    CHECK(j["classes"].size() == 4);
    CHECK(j["per_class"][1]["precision"].is_null());
    CHECK(j["per_class"][3]["recall"].is_null());
    CHECK(j["confusion"][0][0] == 3);
    CHECK(j["accuracy"].is_number());
}

TEST_CASE("confusion json round trip") {
    const auto cm = fourclass_matrix();
    const auto back = confusion_from_json(confusion_to_json(cm));
    CHECK(back == cm);
}

TEST_CASE("format_percent uses two decimals and half-up rounding") {
    CHECK(format_percent(0.9032258) == "90.32");
    CHECK(format_percent(0.5) == "50.00");
    CHECK(format_percent(1.0) == "100.00");
    CHECK(format_percent(0.0) == "0.00");
    CHECK(format_percent(1.0 / 3.0) == "33.33");
    CHECK(format_percent(2.0 / 3.0) == "66.67");
    CHECK(format_percent(0.03125) == "3.13");  // exact tie rounds up
    CHECK(format_percent(-0.343226) == "-34.32");
}

TEST_CASE("render_confusion uses rows=actual, columns=predicted") {
    const std::string text = render_confusion(fourclass_matrix());
    CHECK(text.find("Prediction") != std::string::npos);
    CHECK(text.find("Actual") != std::string::npos);
    CHECK(text.find("Metal Piece") != std::string::npos);
    // Actual battery row contains "28".
    CHECK(text.find("28") != std::string::npos);
}

TEST_CASE("render_flow summarizes a clean stream") {
    ConfusionMatrix cm(kFour);
    for (std::size_t i = 0; i < 4; ++i) cm.at(i, i) = 2;
    const std::string text = render_flow(material_flow(cm, "battery"));
    CHECK(text.find("No contaminants") != std::string::npos);
}
