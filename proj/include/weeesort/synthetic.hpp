#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "weeesort/annotations.hpp"

namespace weeesort {

/// Desk-scale stand-in for the captured corpus: procedurally drawn components
/// with exact polygon annotations.
struct SyntheticSpec {
    std::map<std::string, int> per_class;  // class label -> component count
    int image_size = 320;
    std::int64_t seed = 0;
    std::vector<Background> palette = {Background::gray, Background::black,
                                       Background::white};

    void validate() const;
};

struct SyntheticOutput {
    std::filesystem::path annotation_file;
    std::vector<std::filesystem::path> image_files;
    int total_components = 0;
};

/// Writes images/*.png plus annotations.json under out_dir. Deterministic for
/// a fixed spec: rerunning produces byte-identical annotation files.
SyntheticOutput generate_synthetic_dataset(const SyntheticSpec& spec,
                                           const std::filesystem::path& out_dir);

}  // namespace weeesort
