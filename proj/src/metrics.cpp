#include "weeesort/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "weeesort/errors.hpp"

namespace weeesort {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string display_name(const std::string& class_label) {
    if (class_label == "metal_piece") return "Metal Piece";
    if (class_label == "battery") return "Battery";
    if (class_label == "pcb") return "PCB";
    if (class_label == "glass") return "Glass";
    if (class_label == "other") return "Other";
    return class_label;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)),
      counts_(classes_.size(), std::vector<std::int64_t>(classes_.size(), 0)) {
    if (classes_.empty()) {
        throw ArgumentError("confusion matrix needs at least one class");
    }
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes,
                                 std::vector<std::vector<std::int64_t>> counts)
    : classes_(std::move(classes)), counts_(std::move(counts)) {
    if (classes_.empty()) {
        throw ArgumentError("confusion matrix needs at least one class");
    }
    if (counts_.size() != classes_.size()) {
        throw ArgumentError("confusion matrix rows do not match the class count");
    }
    for (const auto& row : counts_) {
        if (row.size() != classes_.size()) {
            throw ArgumentError("confusion matrix columns do not match the class count");
        }
        for (std::int64_t v : row) {
            if (v < 0) throw ArgumentError("confusion matrix entries must be non-negative");
        }
    }
}

ConfusionMatrix ConfusionMatrix::from_predictions(std::span<const std::string> actual,
                                                  std::span<const std::string> predicted,
                                                  std::vector<std::string> classes) {
    if (actual.size() != predicted.size()) {
        throw ArgumentError(fmt::format(
            "actual and predicted label counts differ ({} vs {})", actual.size(),
            predicted.size()));
    }
    ConfusionMatrix cm(std::move(classes));
    for (std::size_t k = 0; k < actual.size(); ++k) {
        const std::size_t i = cm.index_of(actual[k]);
        const std::size_t j = cm.index_of(predicted[k]);
        ++cm.counts_[i][j];
    }
    return cm;
}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
    const auto it = std::find(classes_.begin(), classes_.end(), label);
    if (it == classes_.end()) {
        throw ArgumentError(fmt::format("unknown class '{}' (valid: {})", label,
                                        fmt::join(classes_, ", ")));
    }
    return static_cast<std::size_t>(it - classes_.begin());
}

std::int64_t ConfusionMatrix::row_total(std::size_t i) const {
    std::int64_t acc = 0;
    for (std::int64_t v : counts_[i]) acc += v;
    return acc;
}

std::int64_t ConfusionMatrix::col_total(std::size_t j) const {
    std::int64_t acc = 0;
    for (const auto& row : counts_) acc += row[j];
    return acc;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) acc += counts_[i][i];
    return acc;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) acc += row_total(i);
    return acc;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total == 0) {
        throw UndefinedMetricError("accuracy is undefined for an empty confusion matrix");
    }
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

std::optional<double> precision(const ConfusionMatrix& cm, const std::string& class_label) {
    const std::size_t j = cm.index_of(class_label);
    const std::int64_t predicted = cm.col_total(j);
    if (predicted == 0) return std::nullopt;
    return static_cast<double>(cm.at(j, j)) / static_cast<double>(predicted);
}

std::optional<double> recall(const ConfusionMatrix& cm, const std::string& class_label) {
    const std::size_t i = cm.index_of(class_label);
    const std::int64_t actual = cm.row_total(i);
    if (actual == 0) return std::nullopt;
    return static_cast<double>(cm.at(i, i)) / static_cast<double>(actual);
}

MacroMeans macro_means(std::span<const ClassMetrics> per_class) {
    double psum = 0.0, rsum = 0.0;
    int pn = 0, rn = 0;
    for (const auto& m : per_class) {
        if (m.precision) {
            psum += *m.precision;
            ++pn;
        }
        if (m.recall) {
            rsum += *m.recall;
            ++rn;
        }
    }
    if (pn == 0 && rn == 0) {
        throw UndefinedMetricError("macro means are undefined: no class has a defined metric");
    }
    MacroMeans macro;
    if (pn > 0) macro.precision = psum / pn;
    if (rn > 0) macro.recall = rsum / rn;
    return macro;
}

EvaluationReport evaluate(const ConfusionMatrix& cm) {
    EvaluationReport report{cm, {}, accuracy(cm), 0.0, 0.0};
    for (const auto& label : cm.classes()) {
        report.per_class.push_back(
            ClassMetrics{label, precision(cm, label), recall(cm, label)});
    }
    const MacroMeans macro = macro_means(report.per_class);
    // total() > 0 here, so at least one row and one column are non-empty.
    report.macro_precision = macro.precision.value();
    report.macro_recall = macro.recall.value();
    return report;
}

std::string to_string(Severity severity) {
    switch (severity) {
        case Severity::benign: return "benign";
        case Severity::value_loss: return "value_loss";
        case Severity::hindrance: return "hindrance";
    }
    return "benign";
}

Severity severity_from_string(const std::string& s) {
    if (s == "benign") return Severity::benign;
    if (s == "value_loss") return Severity::value_loss;
    if (s == "hindrance") return Severity::hindrance;
    throw ArgumentError(fmt::format("unknown severity '{}'", s));
}

const SeverityMap& default_severity_map() {
    static const SeverityMap map = {
        {"metal_piece", Severity::benign},
        {"pcb", Severity::value_loss},
        {"glass", Severity::hindrance},
    };
    return map;
}

MaterialFlowReport material_flow(const ConfusionMatrix& cm, const std::string& target_class,
                                 const SeverityMap& severity_map) {
    const std::size_t target = cm.index_of(target_class);
    MaterialFlowReport flow;
    flow.target_class = target_class;
    flow.purity = precision(cm, target_class);
    flow.recovery = recall(cm, target_class);
    for (std::size_t i = 0; i < cm.size(); ++i) {
        const std::int64_t count = cm.at(i, target);
        flow.stream_composition.emplace_back(cm.classes()[i], count);
        if (i == target || count == 0) continue;
        const auto it = severity_map.find(cm.classes()[i]);
        if (it == severity_map.end()) {
            throw ArgumentError(fmt::format(
                "no severity configured for contaminant class '{}'", cm.classes()[i]));
        }
        flow.findings.push_back(ContaminantFinding{cm.classes()[i], count, it->second});
    }
    return flow;
}

ConfusionMatrix remap_classes(const ConfusionMatrix& cm, const ClassMapping& mapping,
                              std::vector<std::string> new_classes) {
    ConfusionMatrix out(std::move(new_classes));
    for (std::size_t i = 0; i < cm.size(); ++i) {
        const auto mi = mapping.find(cm.classes()[i]);
        const std::string& ti = mi != mapping.end() ? mi->second : cm.classes()[i];
        for (std::size_t j = 0; j < cm.size(); ++j) {
            const auto mj = mapping.find(cm.classes()[j]);
            const std::string& tj = mj != mapping.end() ? mj->second : cm.classes()[j];
            out.at(out.index_of(ti), out.index_of(tj)) += cm.at(i, j);
        }
    }
    return out;
}

ReportDelta compare_reports(const EvaluationReport& a, const EvaluationReport& b,
                            const std::optional<ClassMapping>& mapping) {
    EvaluationReport base = a;
    if (a.confusion.classes() != b.confusion.classes()) {
        if (!mapping) {
            throw ArgumentError(
                "reports have different class sets; a class mapping is required");
        }
        base = evaluate(remap_classes(a.confusion, *mapping, b.confusion.classes()));
    }
    ReportDelta delta;
    delta.accuracy_delta = b.accuracy - base.accuracy;
    delta.macro_precision_delta = b.macro_precision - base.macro_precision;
    delta.macro_recall_delta = b.macro_recall - base.macro_recall;
    for (std::size_t i = 0; i < b.per_class.size(); ++i) {
        const ClassMetrics& mb = b.per_class[i];
        const ClassMetrics& ma = base.per_class[i];
        ClassDelta d{mb.class_label, std::nullopt, std::nullopt};
        if (ma.precision && mb.precision) d.precision_delta = *mb.precision - *ma.precision;
        if (ma.recall && mb.recall) d.recall_delta = *mb.recall - *ma.recall;
        delta.per_class.push_back(std::move(d));
    }
    return delta;
}

nlohmann::json confusion_to_json(const ConfusionMatrix& cm) {
    ordered_json j;
    j["classes"] = cm.classes();
    j["counts"] = cm.counts();
    return j;
}

ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
    return ConfusionMatrix(j.at("classes").get<std::vector<std::string>>(),
                           j.at("counts").get<std::vector<std::vector<std::int64_t>>>());
}

namespace {

json opt_to_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

nlohmann::json report_to_json(const EvaluationReport& report) {
    ordered_json j;
    j["classes"] = report.confusion.classes();
    j["confusion"] = report.confusion.counts();
    j["accuracy"] = report.accuracy;
    j["per_class"] = ordered_json::array();
    for (const auto& m : report.per_class) {
        ordered_json jm;
        jm["class"] = m.class_label;
        jm["precision"] = opt_to_json(m.precision);
        jm["recall"] = opt_to_json(m.recall);
        j["per_class"].push_back(std::move(jm));
    }
    j["macro_precision"] = report.macro_precision;
    j["macro_recall"] = report.macro_recall;
    return j;
}

nlohmann::json flow_to_json(const MaterialFlowReport& flow) {
    ordered_json j;
    j["target_class"] = flow.target_class;
    ordered_json comp;
    for (const auto& [label, count] : flow.stream_composition) comp[label] = count;
    j["stream_composition"] = std::move(comp);
    j["purity"] = opt_to_json(flow.purity);
    j["recovery"] = opt_to_json(flow.recovery);
    j["contaminant_findings"] = ordered_json::array();
    for (const auto& f : flow.findings) {
        ordered_json jf;
        jf["class"] = f.class_label;
        jf["count"] = f.count;
        jf["severity"] = to_string(f.severity);
        j["contaminant_findings"].push_back(std::move(jf));
    }
    return j;
}

nlohmann::json delta_to_json(const ReportDelta& delta) {
    ordered_json j;
    j["accuracy_delta"] = delta.accuracy_delta;
    j["macro_precision_delta"] = delta.macro_precision_delta;
    j["macro_recall_delta"] = delta.macro_recall_delta;
    j["per_class"] = ordered_json::array();
    for (const auto& d : delta.per_class) {
        ordered_json jd;
        jd["class"] = d.class_label;
        jd["precision_delta"] = opt_to_json(d.precision_delta);
        jd["recall_delta"] = opt_to_json(d.recall_delta);
        j["per_class"].push_back(std::move(jd));
    }
    return j;
}

std::string format_percent(double fraction) {
    const long long v = std::llround(fraction * 10000.0);
    const long long whole = std::llabs(v) / 100;
    const long long frac = std::llabs(v) % 100;
    return fmt::format("{}{}.{:02d}", v < 0 ? "-" : "", whole, frac);
}

std::string render_confusion(const ConfusionMatrix& cm) {
    std::vector<std::string> names;
    std::size_t label_width = 0;
    for (const auto& c : cm.classes()) {
        names.push_back(display_name(c));
        label_width = std::max(label_width, names.back().size());
    }
    std::vector<std::size_t> col_widths;
    for (std::size_t j = 0; j < cm.size(); ++j) {
        std::size_t w = names[j].size();
        for (std::size_t i = 0; i < cm.size(); ++i) {
            w = std::max(w, std::to_string(cm.at(i, j)).size());
        }
        col_widths.push_back(w);
    }
    std::string out = fmt::format("{:<{}}  Prediction\n", "", label_width + 8);
    out += fmt::format("{:<{}}", "Actual", label_width + 8);
    for (std::size_t j = 0; j < cm.size(); ++j) {
        out += fmt::format("  {:>{}}", names[j], col_widths[j]);
    }
    out += '\n';
    for (std::size_t i = 0; i < cm.size(); ++i) {
        out += fmt::format("  {:<{}}", names[i], label_width + 6);
        for (std::size_t j = 0; j < cm.size(); ++j) {
            out += fmt::format("  {:>{}}", cm.at(i, j), col_widths[j]);
        }
        out += '\n';
    }
    return out;
}

std::string render_report(const EvaluationReport& report) {
    std::string out = render_confusion(report.confusion);
    out += '\n';
    std::size_t label_width = 5;
    for (const auto& m : report.per_class) {
        label_width = std::max(label_width, display_name(m.class_label).size());
    }
    out += fmt::format("{:<{}}  {:>9}  {:>9}\n", "Class", label_width, "Precision", "Recall");
    auto cell = [](const std::optional<double>& v) {
        return v ? format_percent(*v) + "%" : std::string("n/a");
    };
    for (const auto& m : report.per_class) {
        out += fmt::format("{:<{}}  {:>9}  {:>9}\n", display_name(m.class_label), label_width,
                           cell(m.precision), cell(m.recall));
    }
    out += fmt::format("{:<{}}  {:>9}  {:>9}\n", "Macro", label_width,
                       format_percent(report.macro_precision) + "%",
                       format_percent(report.macro_recall) + "%");
    out += fmt::format("Accuracy: {}%\n", format_percent(report.accuracy));
    return out;
}

std::string render_flow(const MaterialFlowReport& flow) {
    std::string out =
        fmt::format("Material flow for predicted stream '{}'\n", display_name(flow.target_class));
    std::int64_t stream_total = 0;
    for (const auto& [label, count] : flow.stream_composition) stream_total += count;
    out += fmt::format("  Stream size: {} item(s)\n", stream_total);
    for (const auto& [label, count] : flow.stream_composition) {
        out += fmt::format("    {:<14} {}\n", display_name(label), count);
    }
    auto cell = [](const std::optional<double>& v) {
        return v ? format_percent(*v) + "%" : std::string("n/a");
    };
    out += fmt::format("  Purity (precision): {}\n", cell(flow.purity));
    out += fmt::format("  Recovery (recall):  {}\n", cell(flow.recovery));
    if (flow.findings.empty()) {
        out += "  No contaminants in the stream.\n";
    } else {
        out += "  Contaminants:\n";
        for (const auto& f : flow.findings) {
            out += fmt::format("    {:<14} {}  [{}]\n", display_name(f.class_label), f.count,
                               to_string(f.severity));
        }
    }
    return out;
}

}  // namespace weeesort
