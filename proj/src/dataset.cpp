#include "weeesort/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "weeesort/errors.hpp"
#include "weeesort/rng.hpp"

namespace weeesort {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kManifestVersion = 1;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string display_name(const std::string& class_label) {
    static const std::unordered_map<std::string, std::string> names = {
        {"metal_piece", "Metal Piece"},
        {"battery", "Battery"},
        {"pcb", "PCB"},
        {"glass", "Glass"},
        {"other", "Other"},
    };
    auto it = names.find(class_label);
    return it != names.end() ? it->second : class_label;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write file: " + tmp.string());
        }
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

ImageLoader file_image_loader(const std::filesystem::path& base_dir) {
    return [base_dir](const std::string& path) {
        std::filesystem::path p(path);
        if (p.is_relative()) p = base_dir / p;
        return load_png(p);
    };
}

SplitCounts split_counts_for(int n, const SplitRatios& ratios) {
    if (n < 0) throw ArgumentError("split size must be non-negative");
    if (ratios.train <= 0 || ratios.val <= 0 || ratios.test <= 0) {
        throw ArgumentError("split ratios must be positive");
    }
    const std::int64_t total = ratios.train + ratios.val + ratios.test;
    SplitCounts c;
    c.test = static_cast<int>(static_cast<std::int64_t>(n) * ratios.test / total);
    c.val = static_cast<int>(static_cast<std::int64_t>(c.test) * ratios.val / ratios.test);
    c.train = n - c.val - c.test;
    return c;
}

std::string crop_id_for(const std::string& image_id, int annotation_index) {
    return fmt::format("{}:{}", image_id, annotation_index);
}

std::string crop_filename(const std::string& crop_id) {
    std::string name = crop_id;
    std::replace(name.begin(), name.end(), ':', '_');
    return name + ".png";
}

std::vector<ComponentCrop> extract_crops(std::span<const AnnotatedImageRecord> records,
                                         const ImageLoader& loader) {
    std::vector<const AnnotatedImageRecord*> ordered;
    ordered.reserve(records.size());
    for (const auto& r : records) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->image_id < b->image_id; });

    std::vector<ComponentCrop> crops;
    for (const AnnotatedImageRecord* rec : ordered) {
        Image img;
        try {
            img = loader(rec->image_path);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw IoError(fmt::format("cannot load '{}': {}", rec->image_path, e.what()));
        }
        if (img.height != rec->height || img.width != rec->width) {
            throw ConsistencyError(fmt::format(
                "image '{}' is {}x{} but the record declares {}x{}", rec->image_id,
                img.width, img.height, rec->width, rec->height));
        }
        for (const Annotation& ann : rec->annotations) {
            const OrientedBox obb = min_area_obb(ann.polygon);
            const AxisAlignedSquare sq = circumscribe_square(obb);

            // Snap to an integer window before fitting so crop arithmetic is exact.
            const int side = std::max(1, static_cast<int>(std::ceil(sq.side - 1e-9)));
            const double cx = sq.min_x + sq.side / 2.0;
            const double cy = sq.min_y + sq.side / 2.0;
            AxisAlignedSquare snapped{std::round(cx - side / 2.0),
                                      std::round(cy - side / 2.0),
                                      static_cast<double>(side)};
            const auto [fitted, pad] =
                fit_square_to_image(snapped, rec->width, rec->height);

            const int pl = static_cast<int>(std::llround(pad.left));
            const int pr = static_cast<int>(std::llround(pad.right));
            const int pt = static_cast<int>(std::llround(pad.top));
            const int pb = static_cast<int>(std::llround(pad.bottom));
            const int x0 = static_cast<int>(std::llround(fitted.min_x)) + pl;
            const int y0 = static_cast<int>(std::llround(fitted.min_y)) + pt;
            const int w = side - pl - pr;
            const int h = side - pt - pb;

            Image window = crop(img, x0, y0, w, h);
            if (pl || pr || pt || pb) {
                window = pad_replicate(window, pl, pr, pt, pb);
            }
            ComponentCrop out;
            out.crop_id = crop_id_for(rec->image_id, ann.annotation_index);
            out.pixels = resize_bilinear(window, kCropSize, kCropSize);
            out.class_label = ann.class_label;
            out.source = CropSource{rec->image_id, ann.annotation_index, rec->face};
            crops.push_back(std::move(out));
        }
    }
    return crops;
}

DatasetManifest stratified_split(std::vector<CropEntry> crops, const SplitRatios& ratios,
                                 std::int64_t seed, std::vector<std::string> classes,
                                 std::vector<std::string>* warnings) {
    if (crops.empty()) {
        throw ArgumentError("cannot split an empty crop list");
    }
    std::set<std::string> labels;
    for (const auto& c : crops) labels.insert(c.class_label);

    if (classes.empty()) {
        for (const auto& known : kDefaultClasses) {
            if (labels.count(known)) classes.push_back(known);
        }
        for (const auto& label : labels) {
            if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
                classes.push_back(label);
            }
        }
    } else {
        for (const auto& label : labels) {
            if (std::find(classes.begin(), classes.end(), label) == classes.end()) {
                throw ArgumentError(
                    fmt::format("crop class '{}' is not in the class list", label));
            }
        }
    }

    DatasetManifest manifest;
    manifest.classes = classes;
    manifest.split_seed = seed;

    std::unordered_map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < crops.size(); ++i) {
        by_class[crops[i].class_label].push_back(i);
    }

    for (const std::string& label : classes) {
        auto it = by_class.find(label);
        if (it == by_class.end()) {
            manifest.counts[label] = SplitCounts{};
            continue;
        }
        auto& indices = it->second;
        const int n = static_cast<int>(indices.size());
        const SplitCounts counts = split_counts_for(n, ratios);
        if (counts.test == 0 && warnings) {
            warnings->push_back(fmt::format(
                "class '{}' has only {} crops; its test/val splits are empty", label, n));
        }
        RngStream rng = RngStream::derive({static_cast<std::uint64_t>(seed), fnv1a(label)});
        rng.shuffle(indices);
        for (int k = 0; k < n; ++k) {
            std::string split = "train";
            if (k >= counts.train && k < counts.train + counts.val) split = "val";
            if (k >= counts.train + counts.val) split = "test";
            crops[indices[static_cast<std::size_t>(k)]].split = split;
        }
        manifest.counts[label] = counts;
    }

    std::sort(crops.begin(), crops.end(), [](const CropEntry& a, const CropEntry& b) {
        return std::tie(a.image_id, a.annotation_index) <
               std::tie(b.image_id, b.annotation_index);
    });
    manifest.crops = std::move(crops);
    return manifest;
}

std::map<std::string, double> class_distribution(const DatasetManifest& manifest) {
    if (manifest.crops.empty()) {
        throw ArgumentError("cannot compute a class distribution for an empty manifest");
    }
    std::map<std::string, double> fractions;
    for (const auto& c : manifest.crops) fractions[c.class_label] += 1.0;
    for (auto& [label, value] : fractions) {
        value /= static_cast<double>(manifest.crops.size());
    }
    return fractions;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    ordered_json root;
    root["version"] = kManifestVersion;
    root["classes"] = manifest.classes;
    root["split_seed"] = manifest.split_seed;
    root["crops"] = ordered_json::array();
    std::set<std::string> paths;
    for (const auto& c : manifest.crops) {
        if (c.split != "train" && c.split != "val" && c.split != "test") {
            throw SchemaError(fmt::format("crop '{}' has no split assignment", c.crop_id));
        }
        if (!paths.insert(c.path).second) {
            throw SchemaError(fmt::format("duplicate crop path '{}'", c.path));
        }
        ordered_json jc;
        jc["crop_id"] = c.crop_id;
        jc["class"] = c.class_label;
        jc["image_id"] = c.image_id;
        jc["annotation_index"] = c.annotation_index;
        jc["face"] = to_string(c.face);
        jc["split"] = c.split;
        jc["path"] = c.path;
        root["crops"].push_back(std::move(jc));
    }
    ordered_json jcounts;
    for (const auto& label : manifest.classes) {
        auto it = manifest.counts.find(label);
        const SplitCounts c = it != manifest.counts.end() ? it->second : SplitCounts{};
        jcounts[label] = {{"train", c.train}, {"val", c.val}, {"test", c.test}};
    }
    root["counts"] = std::move(jcounts);
    atomic_write_text(path, root.dump(2) + "\n");
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open manifest: " + path.string());
    }
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(fmt::format("{}: malformed JSON: {}", path.string(), e.what()));
    }
    if (!root.contains("version")) {
        throw SchemaError(path.string() + ": manifest has no version field");
    }
    const int version = root["version"].get<int>();
    if (version != kManifestVersion) {
        throw SchemaError(fmt::format("{}: manifest version {} is not supported (expected {})",
                                      path.string(), version, kManifestVersion));
    }
    DatasetManifest manifest;
    manifest.classes = root.at("classes").get<std::vector<std::string>>();
    manifest.split_seed = root.at("split_seed").get<std::int64_t>();

    std::set<std::string> paths;
    std::map<std::string, SplitCounts> recomputed;
    for (const json& jc : root.at("crops")) {
        CropEntry c;
        c.crop_id = jc.at("crop_id").get<std::string>();
        c.class_label = jc.at("class").get<std::string>();
        c.image_id = jc.at("image_id").get<std::string>();
        c.annotation_index = jc.at("annotation_index").get<int>();
        c.face = face_from_string(jc.at("face").get<std::string>());
        if (!jc.contains("split")) {
            throw SchemaError(fmt::format("{}: crop '{}' is missing its split field",
                                          path.string(), c.crop_id));
        }
        c.split = jc.at("split").get<std::string>();
        c.path = jc.at("path").get<std::string>();
        if (c.split != "train" && c.split != "val" && c.split != "test") {
            throw SchemaError(fmt::format("{}: crop '{}' has invalid split '{}'",
                                          path.string(), c.crop_id, c.split));
        }
        if (std::find(manifest.classes.begin(), manifest.classes.end(), c.class_label) ==
            manifest.classes.end()) {
            throw SchemaError(fmt::format("{}: crop '{}' has unknown class '{}'",
                                          path.string(), c.crop_id, c.class_label));
        }
        if (!paths.insert(c.path).second) {
            throw SchemaError(fmt::format("{}: duplicate crop path '{}'", path.string(), c.path));
        }
        auto& counts = recomputed[c.class_label];
        if (c.split == "train") ++counts.train;
        if (c.split == "val") ++counts.val;
        if (c.split == "test") ++counts.test;
        manifest.crops.push_back(std::move(c));
    }
    for (const auto& [label, jc] : root.at("counts").items()) {
        SplitCounts c{jc.at("train").get<int>(), jc.at("val").get<int>(),
                      jc.at("test").get<int>()};
        manifest.counts[label] = c;
        auto it = recomputed.find(label);
        const SplitCounts actual = it != recomputed.end() ? it->second : SplitCounts{};
        if (!(actual == c)) {
            throw SchemaError(fmt::format(
                "{}: counts for class '{}' do not match the crop list", path.string(), label));
        }
    }
    return manifest;
}

DatasetManifest build_crop_dataset(std::span<const AnnotatedImageRecord> records,
                                   const ImageLoader& loader,
                                   const std::filesystem::path& out_dir,
                                   std::int64_t seed, const SplitRatios& ratios,
                                   std::vector<std::string>* warnings) {
    if (records.empty()) {
        throw SchemaError("no annotated images to build a dataset from");
    }
    const std::filesystem::path crops_dir = out_dir / "crops";
    std::filesystem::create_directories(crops_dir);

    std::vector<CropEntry> entries;
    // One record at a time keeps peak memory at a single source image.
    for (const auto& rec : records) {
        const AnnotatedImageRecord* one = &rec;
        auto crops = extract_crops(std::span(one, 1), loader);
        for (auto& c : crops) {
            const std::string filename = crop_filename(c.crop_id);
            save_png(crops_dir / filename, c.pixels);
            CropEntry e;
            e.crop_id = c.crop_id;
            e.class_label = c.class_label;
            e.image_id = c.source.image_id;
            e.annotation_index = c.source.annotation_index;
            e.face = c.source.face;
            e.path = "crops/" + filename;
            entries.push_back(std::move(e));
        }
    }
    DatasetManifest manifest = stratified_split(std::move(entries), ratios, seed, {}, warnings);
    write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

std::string render_split_table(const DatasetManifest& manifest) {
    const std::vector<std::pair<std::string, std::string>> rows = {
        {"Training", "train"}, {"Validation", "val"}, {"Test", "test"}};

    std::vector<std::string> headers = {"Set"};
    for (const auto& label : manifest.classes) headers.push_back(display_name(label));
    headers.push_back("Total");

    auto count_of = [&](const std::string& label, const std::string& split) {
        auto it = manifest.counts.find(label);
        if (it == manifest.counts.end()) return 0;
        if (split == "train") return it->second.train;
        if (split == "val") return it->second.val;
        if (split == "test") return it->second.test;
        return it->second.total();
    };

    std::vector<std::vector<std::string>> table;
    table.push_back(headers);
    for (const auto& [title, split] : rows) {
        std::vector<std::string> row = {title};
        int total = 0;
        for (const auto& label : manifest.classes) {
            const int n = count_of(label, split);
            total += n;
            row.push_back(std::to_string(n));
        }
        row.push_back(std::to_string(total));
        table.push_back(std::move(row));
    }
    std::vector<std::string> row = {"Total"};
    int grand = 0;
    for (const auto& label : manifest.classes) {
        const int n = count_of(label, "total");
        grand += n;
        row.push_back(std::to_string(n));
    }
    row.push_back(std::to_string(grand));
    table.push_back(std::move(row));

    std::vector<std::size_t> widths(table[0].size(), 0);
    for (const auto& r : table) {
        for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
    }
    std::string out;
    for (const auto& r : table) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i == 0) {
                out += fmt::format("{:<{}}", r[i], widths[i]);
            } else {
                out += fmt::format("  {:>{}}", r[i], widths[i]);
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace weeesort
