#include "weeesort/plotting.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "weeesort/errors.hpp"

namespace weeesort {

namespace {

constexpr int kWidth = 960;
constexpr int kHeight = 640;
constexpr int kMarginLeft = 80;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 50;
constexpr int kMarginBottom = 60;

const cv::Scalar kTrainColor(180, 90, 30);   // BGR: blue-ish
const cv::Scalar kValColor(40, 120, 230);    // orange
const cv::Scalar kAxisColor(40, 40, 40);
const cv::Scalar kGridColor(220, 220, 220);

struct Series {
    std::string label;
    std::vector<double> values;
    cv::Scalar color;
};

void draw_chart(cv::Mat& canvas, const std::string& title,
                const std::vector<int>& epochs, const std::vector<Series>& series,
                double y_min, double y_max) {
    const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;

    double e_min = epochs.front(), e_max = epochs.back();
    if (e_min == e_max) {  // single point: widen the range
        e_min -= 0.5;
        e_max += 0.5;
    }
    auto px = [&](double e) {
        return x0 + static_cast<int>(std::lround((e - e_min) / (e_max - e_min) * (x1 - x0)));
    };
    auto py = [&](double v) {
        return y0 - static_cast<int>(std::lround((v - y_min) / (y_max - y_min) * (y0 - y1)));
    };

    // horizontal grid + y tick labels
    for (int t = 0; t <= 5; ++t) {
        const double v = y_min + (y_max - y_min) * t / 5.0;
        const int y = py(v);
        cv::line(canvas, {x0, y}, {x1, y}, kGridColor, 1, cv::LINE_8);
        cv::putText(canvas, fmt::format("{:.2f}", v), {8, y + 4},
                    cv::FONT_HERSHEY_SIMPLEX, 0.45, kAxisColor, 1, cv::LINE_8);
    }
    // x ticks on integer epochs
    const int n_epochs = epochs.back() - epochs.front() + 1;
    const int step = std::max(1, (n_epochs + 9) / 10);
    for (int e = epochs.front(); e <= epochs.back(); e += step) {
        const int x = px(e);
        cv::line(canvas, {x, y0}, {x, y0 + 5}, kAxisColor, 1, cv::LINE_8);
        cv::putText(canvas, std::to_string(e), {x - 8, y0 + 24}, cv::FONT_HERSHEY_SIMPLEX,
                    0.45, kAxisColor, 1, cv::LINE_8);
    }
    cv::line(canvas, {x0, y0}, {x1, y0}, kAxisColor, 2, cv::LINE_8);
    cv::line(canvas, {x0, y0}, {x0, y1}, kAxisColor, 2, cv::LINE_8);
    cv::putText(canvas, title, {kMarginLeft, 30}, cv::FONT_HERSHEY_SIMPLEX, 0.7, kAxisColor,
                2, cv::LINE_8);
    cv::putText(canvas, "epoch", {(x0 + x1) / 2 - 20, kHeight - 16},
                cv::FONT_HERSHEY_SIMPLEX, 0.5, kAxisColor, 1, cv::LINE_8);

    int legend_y = y1 + 18;
    for (const Series& s : series) {
        std::vector<cv::Point> pts;
        for (std::size_t i = 0; i < epochs.size(); ++i) {
            pts.emplace_back(px(epochs[i]), py(s.values[i]));
        }
        if (pts.size() > 1) {
            cv::polylines(canvas, pts, false, s.color, 2, cv::LINE_8);
        }
        for (const cv::Point& p : pts) {
            cv::circle(canvas, p, 3, s.color, cv::FILLED, cv::LINE_8);
        }
        cv::line(canvas, {x1 - 150, legend_y - 4}, {x1 - 120, legend_y - 4}, s.color, 2,
                 cv::LINE_8);
        cv::putText(canvas, s.label, {x1 - 112, legend_y}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                    kAxisColor, 1, cv::LINE_8);
        legend_y += 20;
    }
}

void save_chart(const cv::Mat& canvas, const std::filesystem::path& path) {
    if (!cv::imwrite(path.string(), canvas)) {
        throw IoError("cannot write plot: " + path.string());
    }
}

}  // namespace

PlotPaths render_history_plots(const TrainingHistory& history, const std::string& run_id,
                               const std::filesystem::path& out_dir) {
    if (history.records.empty()) {
        throw ArgumentError("cannot plot an empty training history");
    }
    std::filesystem::create_directories(out_dir);

    std::vector<int> epochs;
    std::vector<double> train_acc, val_acc, train_loss, val_loss;
    for (const EpochRecord& r : history.records) {
        epochs.push_back(r.epoch);
        train_acc.push_back(r.train_accuracy);
        val_acc.push_back(r.val_accuracy);
        train_loss.push_back(r.train_loss);
        val_loss.push_back(r.val_loss);
    }

    PlotPaths paths;
    {
        cv::Mat canvas(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
        draw_chart(canvas, "Accuracy (" + run_id + ")", epochs,
                   {{"train", train_acc, kTrainColor}, {"validation", val_acc, kValColor}},
                   0.0, 1.0);
        paths.accuracy_plot = out_dir / (run_id + "_accuracy.png");
        save_chart(canvas, paths.accuracy_plot);
    }
    {
        double max_loss = 0.0;
        for (double v : train_loss) max_loss = std::max(max_loss, v);
        for (double v : val_loss) max_loss = std::max(max_loss, v);
        if (max_loss <= 0.0) max_loss = 1.0;
        cv::Mat canvas(kHeight, kWidth, CV_8UC3, cv::Scalar(255, 255, 255));
        draw_chart(canvas, "Loss (" + run_id + ")", epochs,
                   {{"train", train_loss, kTrainColor}, {"validation", val_loss, kValColor}},
                   0.0, max_loss * 1.05);
        paths.loss_plot = out_dir / (run_id + "_loss.png");
        save_chart(canvas, paths.loss_plot);
    }
    return paths;
}

}  // namespace weeesort
