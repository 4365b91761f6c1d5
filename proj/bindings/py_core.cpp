#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

#include "weeesort/augment.hpp"
#include "weeesort/dataset.hpp"
#include "weeesort/errors.hpp"
#include "weeesort/experiment.hpp"
#include "weeesort/geometry.hpp"
#include "weeesort/metrics.hpp"
#include "weeesort/synthetic.hpp"
#include "weeesort/training.hpp"

namespace py = pybind11;
using namespace weeesort;

namespace {

Polygon polygon_from_list(const std::vector<std::pair<double, double>>& vertices) {
    Polygon poly;
    for (const auto& [x, y] : vertices) poly.vertices.push_back(Point{x, y});
    return poly;
}

Image image_from_array(const py::array_t<std::uint8_t, py::array::c_style>& array) {
    if (array.ndim() != 3 || array.shape(2) != 3) {
        throw ArgumentError("expected a HxWx3 uint8 array");
    }
    Image img(static_cast<int>(array.shape(0)), static_cast<int>(array.shape(1)), 3);
    std::copy_n(array.data(), img.data.size(), img.data.data());
    return img;
}

py::array_t<std::uint8_t> array_from_image(const Image& img) {
    py::array_t<std::uint8_t> array({img.height, img.width, img.channels});
    std::copy_n(img.data.data(), img.data.size(), array.mutable_data());
    return array;
}

py::object opt_to_py(const std::optional<double>& v) {
    return v ? py::cast(*v) : py::none();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of weeesort: geometry, dataset pipeline, augmentation, "
              "metrics and the training runner.";

    py::register_exception<Error>(m, "WeeesortError", PyExc_RuntimeError);

    // ---- geometry ----
    py::class_<OrientedBox>(m, "OrientedBox")
        .def_property_readonly(
            "center", [](const OrientedBox& b) { return py::make_tuple(b.center.x, b.center.y); })
        .def_readonly("width", &OrientedBox::width)
        .def_readonly("height", &OrientedBox::height)
        .def_readonly("angle_deg", &OrientedBox::angle_deg)
        .def("area", &OrientedBox::area)
        .def("corners",
             [](const OrientedBox& b) {
                 std::vector<std::pair<double, double>> out;
                 for (const Point& c : b.corners()) out.emplace_back(c.x, c.y);
                 return out;
             })
        .def("__repr__", [](const OrientedBox& b) {
            std::ostringstream os;
            os << "OrientedBox(center=(" << b.center.x << ", " << b.center.y << "), width="
               << b.width << ", height=" << b.height << ", angle_deg=" << b.angle_deg << ")";
            return os.str();
        });

    py::class_<AxisAlignedSquare>(m, "Square")
        .def(py::init([](double min_x, double min_y, double side) {
                 return AxisAlignedSquare{min_x, min_y, side};
             }),
             py::arg("min_x"), py::arg("min_y"), py::arg("side"))
        .def_readonly("min_x", &AxisAlignedSquare::min_x)
        .def_readonly("min_y", &AxisAlignedSquare::min_y)
        .def_readonly("side", &AxisAlignedSquare::side)
        .def("__repr__", [](const AxisAlignedSquare& s) {
            std::ostringstream os;
            os << "Square(min_x=" << s.min_x << ", min_y=" << s.min_y << ", side=" << s.side
               << ")";
            return os.str();
        });

    m.def(
        "min_area_obb",
        [](const std::vector<std::pair<double, double>>& vertices) {
            return min_area_obb(polygon_from_list(vertices));
        },
        py::arg("vertices"),
        "Minimum-area enclosing rotated rectangle of a polygon (rotating calipers).");

    m.def("circumscribe_square", &circumscribe_square, py::arg("obb"),
          "Smallest axis-aligned square containing the box corners.");

    m.def(
        "fit_square_to_image",
        [](const AxisAlignedSquare& square, double width, double height) {
            const auto [fitted, pad] = fit_square_to_image(square, width, height);
            py::dict padding;
            padding["left"] = pad.left;
            padding["right"] = pad.right;
            padding["top"] = pad.top;
            padding["bottom"] = pad.bottom;
            return py::make_tuple(fitted, padding);
        },
        py::arg("square"), py::arg("width"), py::arg("height"));

    // ---- dataset ----
    m.def(
        "split_counts",
        [](int n, int train, int val, int test) {
            const SplitCounts c = split_counts_for(n, SplitRatios{train, val, test});
            return py::make_tuple(c.train, c.val, c.test);
        },
        py::arg("n"), py::arg("train") = 70, py::arg("val") = 20, py::arg("test") = 10,
        "Per-class (train, val, test) sizes under the stratified split rule.");

    m.def(
        "generate_synthetic_dataset",
        [](const std::map<std::string, int>& per_class, const std::string& out_dir,
           int image_size, std::int64_t seed) {
            SyntheticSpec spec;
            spec.per_class = per_class;
            spec.image_size = image_size;
            spec.seed = seed;
            const auto out = generate_synthetic_dataset(spec, out_dir);
            return out.annotation_file.string();
        },
        py::arg("per_class"), py::arg("out_dir"), py::arg("image_size") = 320,
        py::arg("seed") = 0,
        "Procedural desk-scale dataset; returns the annotation file path.");

    m.def(
        "parse_annotation_summary",
        [](const std::string& path) {
            const ParseResult result = parse_annotation_file(path);
            int annotations = 0;
            std::map<std::string, int> per_class;
            for (const auto& rec : result.records) {
                annotations += static_cast<int>(rec.annotations.size());
                for (const auto& ann : rec.annotations) ++per_class[ann.class_label];
            }
            py::dict d;
            d["images"] = result.records.size();
            d["annotations"] = annotations;
            d["clamped_vertices"] = result.clamped_vertices;
            d["per_class"] = per_class;
            return d;
        },
        py::arg("path"), "Validates and summarizes an annotation file.");

    m.def(
        "build_dataset",
        [](const std::string& annotation_file, const std::string& out_dir, std::int64_t seed,
           bool force) {
            const std::filesystem::path manifest_path =
                std::filesystem::path(out_dir) / "manifest.json";
            if (std::filesystem::exists(manifest_path) && !force) {
                throw IoError(manifest_path.string() + " already exists; pass force=True");
            }
            const ParseResult parsed = parse_annotation_file(annotation_file);
            if (parsed.records.empty()) {
                throw SchemaError(annotation_file + ": annotation file contains no images");
            }
            const auto base = std::filesystem::path(annotation_file).parent_path();
            build_crop_dataset(parsed.records, file_image_loader(base), out_dir, seed);
            return manifest_path.string();
        },
        py::arg("annotation_file"), py::arg("out_dir"), py::arg("seed") = 0,
        py::arg("force") = false,
        "Extracts 500x500 crops, assigns splits, writes crops plus manifest.json.");

    m.def(
        "manifest_summary",
        [](const std::string& path) {
            const DatasetManifest manifest = read_manifest(path);
            py::dict counts;
            for (const auto& [label, c] : manifest.counts) {
                py::dict row;
                row["train"] = c.train;
                row["val"] = c.val;
                row["test"] = c.test;
                counts[py::str(label)] = row;
            }
            py::dict d;
            d["classes"] = manifest.classes;
            d["split_seed"] = manifest.split_seed;
            d["crops"] = manifest.crops.size();
            d["counts"] = counts;
            return d;
        },
        py::arg("path"));

    m.def(
        "class_distribution",
        [](const std::string& manifest_path) {
            return class_distribution(read_manifest(manifest_path));
        },
        py::arg("manifest_path"), "Per-class fraction of crops in a manifest.");

    // ---- augmentation ----
    m.def(
        "sample_augmentation_params",
        [](std::int64_t seed, bool enabled) {
            AugmentationPolicy policy;
            policy.enabled = enabled;
            RngStream rng(static_cast<std::uint64_t>(seed));
            const AugmentationParams p = sample_params(policy, rng);
            py::dict d;
            d["rotation_deg"] = p.rotation_deg;
            d["shear_deg"] = p.shear_deg;
            d["zoom"] = p.zoom;
            d["channel_shift"] = py::make_tuple(p.channel_shift[0], p.channel_shift[1],
                                                p.channel_shift[2]);
            d["h_flip"] = p.h_flip;
            d["v_flip"] = p.v_flip;
            return d;
        },
        py::arg("seed"), py::arg("enabled") = true,
        "Draws one parameter set from the training augmentation policy.");

    m.def(
        "apply_augmentation",
        [](const py::array_t<std::uint8_t, py::array::c_style>& image, double rotation_deg,
           double shear_deg, double zoom, std::tuple<double, double, double> channel_shift,
           bool h_flip, bool v_flip) {
            AugmentationParams params;
            params.rotation_deg = rotation_deg;
            params.shear_deg = shear_deg;
            params.zoom = zoom;
            params.channel_shift = {std::get<0>(channel_shift), std::get<1>(channel_shift),
                                    std::get<2>(channel_shift)};
            params.h_flip = h_flip;
            params.v_flip = v_flip;
            return array_from_image(apply_augmentation(image_from_array(image), params));
        },
        py::arg("image"), py::arg("rotation_deg") = 0.0, py::arg("shear_deg") = 0.0,
        py::arg("zoom") = 1.0, py::arg("channel_shift") = std::make_tuple(0.0, 0.0, 0.0),
        py::arg("h_flip") = false, py::arg("v_flip") = false,
        "Flips, rotation/shear/zoom about the center, then channel shift with clipping.");

    // ---- metrics ----
    py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
        .def(py::init<std::vector<std::string>, std::vector<std::vector<std::int64_t>>>(),
             py::arg("classes"), py::arg("counts"))
        .def_static(
            "from_predictions",
            [](const std::vector<std::string>& actual,
               const std::vector<std::string>& predicted,
               const std::vector<std::string>& classes) {
                return ConfusionMatrix::from_predictions(actual, predicted, classes);
            },
            py::arg("actual"), py::arg("predicted"), py::arg("classes"))
        .def_property_readonly("classes",
                               [](const ConfusionMatrix& cm) { return cm.classes(); })
        .def("counts", [](const ConfusionMatrix& cm) { return cm.counts(); })
        .def("accuracy", [](const ConfusionMatrix& cm) { return accuracy(cm); })
        .def(
            "precision",
            [](const ConfusionMatrix& cm, const std::string& label) {
                return opt_to_py(precision(cm, label));
            },
            py::arg("class_label"))
        .def(
            "recall",
            [](const ConfusionMatrix& cm, const std::string& label) {
                return opt_to_py(recall(cm, label));
            },
            py::arg("class_label"))
        .def("macro_means",
             [](const ConfusionMatrix& cm) {
                 const EvaluationReport r = evaluate(cm);
                 return py::make_tuple(r.macro_precision, r.macro_recall);
             })
        .def(
            "report_json",
            [](const ConfusionMatrix& cm) { return report_to_json(evaluate(cm)).dump(2); },
            "Full evaluation report as a JSON string.")
        .def(
            "material_flow_json",
            [](const ConfusionMatrix& cm, const std::string& target) {
                return flow_to_json(material_flow(cm, target)).dump(2);
            },
            py::arg("target_class") = "battery");

    m.def("format_percent", &format_percent, py::arg("fraction"),
          "Two-decimal percentage with half-up rounding.");

    // ---- experiment runner ----
    m.def(
        "run_training",
        [](const std::string& config_json, const std::string& out_dir, bool force) {
            const ExperimentConfig config =
                ExperimentConfig::from_json(nlohmann::json::parse(config_json));
            CommandContext ctx;
            ctx.out_dir = out_dir;
            ctx.force = force;
            std::ostringstream sink;
            ctx.out = &sink;
            const RunManifest rm = cmd_train(config, ctx);
            py::dict d;
            d["run_id"] = rm.run_id;
            for (const auto& [key, value] : rm.artifacts) d[py::str(key)] = value;
            d["log"] = sink.str();
            return d;
        },
        py::arg("config_json"), py::arg("out_dir"), py::arg("force") = false,
        "Runs the training protocol from an experiment config JSON string.");

    m.def(
        "evaluate_checkpoint",
        [](const std::string& checkpoint, const std::string& manifest,
           const std::string& split, const std::string& target, const std::string& out_dir) {
            CommandContext ctx;
            ctx.out_dir = out_dir;
            std::ostringstream sink;
            ctx.out = &sink;
            const EvaluationReport report =
                cmd_evaluate(checkpoint, manifest, split, target, ctx);
            return report_to_json(report).dump(2);
        },
        py::arg("checkpoint"), py::arg("manifest"), py::arg("split") = "test",
        py::arg("target") = "battery", py::arg("out_dir") = "out",
        "Evaluates a checkpoint on one split; returns the report JSON.");

    m.attr("CROP_SIZE") = kCropSize;
    m.attr("__version__") = "0.1.0";
}
