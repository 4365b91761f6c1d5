#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace weeesort {

/// Rows are actual classes, columns are predicted classes.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::vector<std::string> classes);
    ConfusionMatrix(std::vector<std::string> classes,
                    std::vector<std::vector<std::int64_t>> counts);

    static ConfusionMatrix from_predictions(std::span<const std::string> actual,
                                            std::span<const std::string> predicted,
                                            std::vector<std::string> classes);

    const std::vector<std::string>& classes() const { return classes_; }
    std::size_t size() const { return classes_.size(); }
    std::int64_t at(std::size_t actual, std::size_t predicted) const {
        return counts_[actual][predicted];
    }
    std::int64_t& at(std::size_t actual, std::size_t predicted) {
        return counts_[actual][predicted];
    }
    const std::vector<std::vector<std::int64_t>>& counts() const { return counts_; }

    std::size_t index_of(const std::string& label) const;  // throws ArgumentError
    std::int64_t row_total(std::size_t i) const;
    std::int64_t col_total(std::size_t j) const;
    std::int64_t trace() const;
    std::int64_t total() const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::vector<std::string> classes_;
    std::vector<std::vector<std::int64_t>> counts_;
};

/// Correct predictions over all predictions. Throws UndefinedMetricError on an
/// empty matrix.
double accuracy(const ConfusionMatrix& cm);

/// True positives over predicted positives; nullopt when the class was never
/// predicted.
std::optional<double> precision(const ConfusionMatrix& cm, const std::string& class_label);

/// True positives over actual positives; nullopt when the class never occurs.
std::optional<double> recall(const ConfusionMatrix& cm, const std::string& class_label);

struct ClassMetrics {
    std::string class_label;
    std::optional<double> precision;
    std::optional<double> recall;
};

struct MacroMeans {
    std::optional<double> precision;
    std::optional<double> recall;
};

/// Unweighted means over the defined per-class values. Throws
/// UndefinedMetricError when every metric is undefined.
MacroMeans macro_means(std::span<const ClassMetrics> per_class);

struct EvaluationReport {
    ConfusionMatrix confusion;
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
};

EvaluationReport evaluate(const ConfusionMatrix& cm);

enum class Severity { benign, value_loss, hindrance };

std::string to_string(Severity severity);
Severity severity_from_string(const std::string& s);

using SeverityMap = std::map<std::string, Severity>;

/// Domain defaults: stray metal is harmless in a battery stream, board
/// material means lost valuables, glass hinders reprocessing.
const SeverityMap& default_severity_map();

struct ContaminantFinding {
    std::string class_label;
    std::int64_t count = 0;
    Severity severity = Severity::benign;
};

/// The predicted-target column read as a physical sorting stream.
struct MaterialFlowReport {
    std::string target_class;
    std::vector<std::pair<std::string, std::int64_t>> stream_composition;  // by actual class
    std::optional<double> purity;    // precision of the target class
    std::optional<double> recovery;  // recall of the target class
    std::vector<ContaminantFinding> findings;
};

MaterialFlowReport material_flow(const ConfusionMatrix& cm, const std::string& target_class,
                                 const SeverityMap& severity_map = default_severity_map());

/// Class-collapsing projection; labels absent from the mapping map to themselves.
using ClassMapping = std::map<std::string, std::string>;

ConfusionMatrix remap_classes(const ConfusionMatrix& cm, const ClassMapping& mapping,
                              std::vector<std::string> new_classes);

struct ClassDelta {
    std::string class_label;
    std::optional<double> precision_delta;
    std::optional<double> recall_delta;
};

/// Signed differences (b - a), as fractions.
struct ReportDelta {
    double accuracy_delta = 0.0;
    double macro_precision_delta = 0.0;
    double macro_recall_delta = 0.0;
    std::vector<ClassDelta> per_class;
};

/// Compares two reports; when the class sets differ a mapping from report a's
/// classes onto report b's must be supplied.
ReportDelta compare_reports(const EvaluationReport& a, const EvaluationReport& b,
                            const std::optional<ClassMapping>& mapping = std::nullopt);

// --- serialization & rendering ---

nlohmann::json confusion_to_json(const ConfusionMatrix& cm);
ConfusionMatrix confusion_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const EvaluationReport& report);
nlohmann::json flow_to_json(const MaterialFlowReport& flow);
nlohmann::json delta_to_json(const ReportDelta& delta);

/// Fraction as a percentage with two decimals, rounding halves up.
std::string format_percent(double fraction);

std::string render_confusion(const ConfusionMatrix& cm);
std::string render_report(const EvaluationReport& report);
std::string render_flow(const MaterialFlowReport& flow);

}  // namespace weeesort
