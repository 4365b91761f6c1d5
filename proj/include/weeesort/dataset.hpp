#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "weeesort/annotations.hpp"
#include "weeesort/image.hpp"

namespace weeesort {

/// Classifier input size; every extracted crop is resized to this.
inline constexpr int kCropSize = 500;

struct CropSource {
    std::string image_id;
    int annotation_index = 0;
    Face face = Face::A;
};

/// One extracted component image plus provenance.
struct ComponentCrop {
    std::string crop_id;
    Image pixels;
    std::string class_label;
    CropSource source;
    std::string split;  // "train" | "val" | "test" | "" (unassigned)
};

/// Crop metadata as stored in the manifest (pixels live in the crop PNG).
struct CropEntry {
    std::string crop_id;
    std::string class_label;
    std::string image_id;
    int annotation_index = 0;
    Face face = Face::A;
    std::string split;
    std::string path;  // relative to the manifest directory

    bool operator==(const CropEntry&) const = default;
};

struct SplitRatios {
    int train = 70;
    int val = 20;
    int test = 10;
};

struct SplitCounts {
    int train = 0;
    int val = 0;
    int test = 0;

    int total() const { return train + val + test; }
    bool operator==(const SplitCounts&) const = default;
};

struct DatasetManifest {
    std::vector<std::string> classes;
    std::int64_t split_seed = 0;
    std::vector<CropEntry> crops;
    std::map<std::string, SplitCounts> counts;

    bool operator==(const DatasetManifest&) const = default;
};

using ImageLoader = std::function<Image(const std::string& path)>;

/// Loader that reads PNG/JPEG files relative to a base directory.
ImageLoader file_image_loader(const std::filesystem::path& base_dir);

/// Per-class split sizes: test takes floor(n * test/total), val scales from
/// test by the ratio between the two shares, train gets the remainder.
SplitCounts split_counts_for(int n, const SplitRatios& ratios = {});

std::string crop_id_for(const std::string& image_id, int annotation_index);
std::string crop_filename(const std::string& crop_id);

/// One crop per annotation: polygon -> oriented box -> circumscribed square ->
/// fitted window -> crop + replicate-pad -> bilinear resize to kCropSize.
/// Output is ordered by (image_id, annotation_index).
std::vector<ComponentCrop> extract_crops(std::span<const AnnotatedImageRecord> records,
                                         const ImageLoader& loader);

/// Deterministic per-class split assignment with a seeded shuffle.
/// `classes` fixes the class order; when empty it is derived from the data
/// (known classes first in their table order, then extras alphabetically).
DatasetManifest stratified_split(std::vector<CropEntry> crops, const SplitRatios& ratios,
                                 std::int64_t seed,
                                 std::vector<std::string> classes = {},
                                 std::vector<std::string>* warnings = nullptr);

/// Fraction of crops per class; fractions sum to 1.
std::map<std::string, double> class_distribution(const DatasetManifest& manifest);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

/// Full dataset build: extracts crops record by record, writes the PNG files
/// under out_dir/crops/, assigns splits and writes out_dir/manifest.json.
DatasetManifest build_crop_dataset(std::span<const AnnotatedImageRecord> records,
                                   const ImageLoader& loader,
                                   const std::filesystem::path& out_dir,
                                   std::int64_t seed, const SplitRatios& ratios = {},
                                   std::vector<std::string>* warnings = nullptr);

/// The per-class split table in the dataset's reporting layout
/// (rows train/val/test/total, columns per class plus a total column).
std::string render_split_table(const DatasetManifest& manifest);

}  // namespace weeesort
