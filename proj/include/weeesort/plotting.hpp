#pragma once

#include <filesystem>
#include <string>

#include "weeesort/training.hpp"

namespace weeesort {

struct PlotPaths {
    std::filesystem::path accuracy_plot;
    std::filesystem::path loss_plot;
};

/// Renders the training curves as "{run_id}_accuracy.png" and
/// "{run_id}_loss.png" under out_dir. Output bytes are stable for identical
/// input and renderer version.
PlotPaths render_history_plots(const TrainingHistory& history, const std::string& run_id,
                               const std::filesystem::path& out_dir);

}  // namespace weeesort
