#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "weeesort/geometry.hpp"

namespace weeesort {

enum class Face { A, B };
enum class Background { gray, black, white };

std::string to_string(Face face);
std::string to_string(Background background);
Face face_from_string(const std::string& s);
Background background_from_string(const std::string& s);

/// The four component classes of the source dataset, in its table order.
inline const std::vector<std::string> kDefaultClasses = {"metal_piece", "battery",
                                                         "pcb", "glass"};

struct Annotation {
    Polygon polygon;
    std::string class_label;
    int annotation_index = 0;
};

struct AnnotatedImageRecord {
    std::string image_id;
    std::string image_path;
    int width = 0;
    int height = 0;
    Face face = Face::A;
    Background background = Background::gray;
    std::vector<Annotation> annotations;
};

struct ParseResult {
    std::vector<AnnotatedImageRecord> records;
    /// Number of polygon vertices that had to be clamped into image bounds.
    int clamped_vertices = 0;
};

/// Parses the annotation JSON file (see the README for the schema). Polygons
/// are validated and their vertices clamped into image bounds; the clamp count
/// is reported in the result.
ParseResult parse_annotation_file(const std::filesystem::path& path,
                                  const std::vector<std::string>& classes = kDefaultClasses);

/// Serializes records back into the same schema, deterministically.
void write_annotation_file(const std::filesystem::path& path,
                           const std::vector<AnnotatedImageRecord>& records);

}  // namespace weeesort
