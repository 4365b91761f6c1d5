#include "weeesort/annotations.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "weeesort/errors.hpp"

namespace weeesort {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

/// Line/column of a byte offset, for parse diagnostics.
std::pair<int, int> line_of_offset(const std::string& text, std::size_t offset) {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

const json& require(const json& obj, const char* key, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(fmt::format("missing field '{}' in {}", key, context));
    }
    return *it;
}

}  // namespace

std::string to_string(Face face) { return face == Face::A ? "A" : "B"; }

std::string to_string(Background background) {
    switch (background) {
        case Background::gray: return "gray";
        case Background::black: return "black";
        case Background::white: return "white";
    }
    return "gray";
}

Face face_from_string(const std::string& s) {
    if (s == "A") return Face::A;
    if (s == "B") return Face::B;
    throw SchemaError(fmt::format("unknown face '{}', expected \"A\" or \"B\"", s));
}

Background background_from_string(const std::string& s) {
    if (s == "gray") return Background::gray;
    if (s == "black") return Background::black;
    if (s == "white") return Background::white;
    throw SchemaError(fmt::format("unknown background '{}'", s));
}

ParseResult parse_annotation_file(const std::filesystem::path& path,
                                  const std::vector<std::string>& classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open annotation file: " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(fmt::format("{}: malformed JSON at line {}, column {}: {}",
                                     path.string(), line, col, e.what()));
    }

    if (!root.is_object() || !root.contains("images") || !root["images"].is_array()) {
        throw SchemaError(path.string() + ": top level must be an object with an \"images\" array");
    }

    const std::unordered_set<std::string> class_set(classes.begin(), classes.end());
    ParseResult result;
    std::unordered_set<std::string> seen_ids;

    for (const json& jimg : root["images"]) {
        AnnotatedImageRecord rec;
        rec.image_id = require(jimg, "image_id", "image entry").get<std::string>();
        const std::string ctx = fmt::format("image '{}'", rec.image_id);
        if (!seen_ids.insert(rec.image_id).second) {
            throw SchemaError(fmt::format("duplicate image_id '{}'", rec.image_id));
        }
        rec.image_path = require(jimg, "image_path", ctx).get<std::string>();
        rec.width = require(jimg, "width", ctx).get<int>();
        rec.height = require(jimg, "height", ctx).get<int>();
        if (rec.width <= 0 || rec.height <= 0) {
            throw SchemaError(fmt::format("{}: width and height must be positive", ctx));
        }
        rec.face = face_from_string(require(jimg, "face", ctx).get<std::string>());
        rec.background =
            background_from_string(require(jimg, "background", ctx).get<std::string>());

        const json& janns = require(jimg, "annotations", ctx);
        if (!janns.is_array()) {
            throw SchemaError(fmt::format("{}: \"annotations\" must be an array", ctx));
        }
        int index = 0;
        for (const json& jann : janns) {
            Annotation ann;
            ann.annotation_index = index++;
            ann.class_label = require(jann, "class", ctx).get<std::string>();
            if (!class_set.count(ann.class_label)) {
                throw SchemaError(fmt::format("{}: unknown class label '{}'", ctx,
                                              ann.class_label));
            }
            const json& jpoly = require(jann, "polygon", ctx);
            if (!jpoly.is_array() || jpoly.size() < 3) {
                throw SchemaError(fmt::format(
                    "{}: annotation {} polygon needs at least 3 vertices", ctx,
                    ann.annotation_index));
            }
            for (const json& jv : jpoly) {
                if (!jv.is_array() || jv.size() != 2) {
                    throw SchemaError(fmt::format(
                        "{}: annotation {} polygon vertices must be [x, y] pairs", ctx,
                        ann.annotation_index));
                }
                Point p{jv[0].get<double>(), jv[1].get<double>()};
                const double cx = std::clamp(p.x, 0.0, static_cast<double>(rec.width));
                const double cy = std::clamp(p.y, 0.0, static_cast<double>(rec.height));
                if (cx != p.x || cy != p.y) ++result.clamped_vertices;
                ann.polygon.vertices.push_back(Point{cx, cy});
            }
            // Clamping can collapse neighbours onto the border; keep the
            // polygon well formed before validating.
            auto& vs = ann.polygon.vertices;
            vs.erase(std::unique(vs.begin(), vs.end(),
                                 [](const Point& a, const Point& b) {
                                     return a.x == b.x && a.y == b.y;
                                 }),
                     vs.end());
            if (vs.size() > 1 && vs.front().x == vs.back().x && vs.front().y == vs.back().y) {
                vs.pop_back();
            }
            try {
                validate_polygon(ann.polygon);
            } catch (const GeometryError& e) {
                throw GeometryError(fmt::format("{}: annotation {}: {}", ctx,
                                                ann.annotation_index, e.what()));
            }
            rec.annotations.push_back(std::move(ann));
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

void write_annotation_file(const std::filesystem::path& path,
                           const std::vector<AnnotatedImageRecord>& records) {
    ordered_json root;
    root["images"] = ordered_json::array();
    for (const auto& rec : records) {
        ordered_json jimg;
        jimg["image_id"] = rec.image_id;
        jimg["image_path"] = rec.image_path;
        jimg["width"] = rec.width;
        jimg["height"] = rec.height;
        jimg["face"] = to_string(rec.face);
        jimg["background"] = to_string(rec.background);
        jimg["annotations"] = ordered_json::array();
        for (const auto& ann : rec.annotations) {
            ordered_json jann;
            jann["class"] = ann.class_label;
            ordered_json jpoly = ordered_json::array();
            for (const Point& p : ann.polygon.vertices) {
                jpoly.push_back(ordered_json::array({p.x, p.y}));
            }
            jann["polygon"] = std::move(jpoly);
            jimg["annotations"].push_back(std::move(jann));
        }
        root["images"].push_back(std::move(jimg));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write annotation file: " + path.string());
    }
    out << root.dump(2) << '\n';
}

}  // namespace weeesort
