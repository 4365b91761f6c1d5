#include "weeesort/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "weeesort/errors.hpp"
#include "weeesort/image.hpp"
#include "weeesort/rng.hpp"

namespace weeesort {

namespace {

struct Rgb {
    double r, g, b;
};

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

void put(Image& img, int x, int y, const Rgb& c) {
    img.at(y, x, 0) = static_cast<std::uint8_t>(std::clamp(c.r, 0.0, 255.0));
    img.at(y, x, 1) = static_cast<std::uint8_t>(std::clamp(c.g, 0.0, 255.0));
    img.at(y, x, 2) = static_cast<std::uint8_t>(std::clamp(c.b, 0.0, 255.0));
}

bool point_in_polygon(const std::vector<Point>& poly, double x, double y) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Point& a = poly[i];
        const Point& b = poly[j];
        if ((a.y > y) != (b.y > y)) {
            const double t = (y - a.y) / (b.y - a.y);
            if (x < a.x + t * (b.x - a.x)) inside = !inside;
        }
    }
    return inside;
}

struct ComponentStyle {
    std::vector<Point> local;  // polygon in local (unrotated) coordinates
    double extent_u = 1.0;     // half extents used by the texture functions
    double extent_v = 1.0;
};

/// Chamfered rectangle, striped lengthwise with a bright middle band and a
/// contact cap at one end.
ComponentStyle battery_shape(double R, RngStream& rng) {
    ComponentStyle s;
    const double a = R;
    const double b = R * rng.uniform(0.34, 0.46);
    const double c = 0.3 * b;
    s.local = {{-a + c, -b}, {a - c, -b}, {a, -b + c}, {a, b - c},
               {a - c, b},  {-a + c, b}, {-a, b - c}, {-a, -b + c}};
    s.extent_u = a;
    s.extent_v = b;
    return s;
}

ComponentStyle pcb_shape(double R, RngStream& rng) {
    ComponentStyle s;
    const double a = R;
    const double b = R * rng.uniform(0.6, 0.85);
    auto j = [&] { return rng.uniform(-0.08, 0.08) * R; };
    s.local = {{-a + j(), -b + j()}, {a + j(), -b + j()}, {a + j(), b + j()},
               {-a + j(), b + j()}};
    s.extent_u = a;
    s.extent_v = b;
    return s;
}

ComponentStyle glass_shape(double R, RngStream& rng) {
    ComponentStyle s;
    const double a = R;
    const double b = R * rng.uniform(0.65, 0.95);
    s.local = {{-a, -b}, {a, -b}, {a, b}, {-a, b}};
    s.extent_u = a;
    s.extent_v = b;
    return s;
}

/// Irregular convex-ish blob: perturbed regular polygon.
ComponentStyle metal_shape(double R, RngStream& rng) {
    ComponentStyle s;
    const int m = 6 + static_cast<int>(rng.uniform_int(4));
    for (int i = 0; i < m; ++i) {
        const double ang = 2.0 * M_PI * i / m + rng.uniform(-0.2, 0.2) / m;
        const double r = R * rng.uniform(0.68, 1.0);
        s.local.push_back(Point{r * std::cos(ang), r * std::sin(ang)});
    }
    s.extent_u = R;
    s.extent_v = R;
    return s;
}

Rgb texture_color(const std::string& class_label, const ComponentStyle& style, double u,
                  double v, double base_jitter, double pixel_noise) {
    if (class_label == "battery") {
        Rgb color{62 + base_jitter, 70 + base_jitter, 88 + base_jitter};
        if (std::abs(v) < 0.28 * style.extent_v) color = {188, 192, 202};  // silver band
        if (u > style.extent_u * 0.68) color = {198, 166, 64};             // contact cap
        return {color.r + pixel_noise, color.g + pixel_noise, color.b + pixel_noise};
    }
    if (class_label == "pcb") {
        Rgb color{36 + base_jitter, 110 + base_jitter, 54 + base_jitter};
        const double pitch = 0.24 * style.extent_u;
        const double du = u - pitch * std::round(u / pitch);
        const double dv = v - pitch * std::round(v / pitch);
        if (std::hypot(du, dv) < 0.28 * pitch) color = {16, 50, 26};  // via grid
        const double trace = u - 3 * pitch * std::round(u / (3 * pitch));
        if (std::abs(trace) < 0.08 * pitch) color = {70, 160, 92};  // traces
        return {color.r + pixel_noise, color.g + pixel_noise, color.b + pixel_noise};
    }
    if (class_label == "glass") {
        const double t = std::clamp((v / style.extent_v + 1.0) / 2.0, 0.0, 1.0);
        Rgb color = lerp({148 + base_jitter, 184 + base_jitter, 214 + base_jitter},
                         {230, 240, 250}, t);
        if (std::abs(u - v) < 0.22 * style.extent_u) {  // diagonal highlight
            color = {color.r + 22, color.g + 22, color.b + 22};
        }
        return {color.r + pixel_noise, color.g + pixel_noise, color.b + pixel_noise};
    }
    // metal_piece and any unknown class: flat metallic gray, lightly brushed
    const double gray = 138 + base_jitter + 6.0 * std::sin(u * 1.7);
    return {gray + pixel_noise, gray + pixel_noise, gray + pixel_noise};
}

Rgb background_color(Background bg) {
    switch (bg) {
        case Background::gray: return {128, 128, 128};
        case Background::black: return {24, 24, 24};
        case Background::white: return {234, 234, 234};
    }
    return {128, 128, 128};
}

}  // namespace

void SyntheticSpec::validate() const {
    if (image_size < 32) {
        throw ConfigError("synthetic image_size must be at least 32");
    }
    if (palette.empty()) {
        throw ConfigError("synthetic background palette must not be empty");
    }
    for (const auto& [label, count] : per_class) {
        if (label.empty()) throw ConfigError("synthetic class labels must be non-empty");
        if (count < 0) {
            throw ConfigError(fmt::format("synthetic count for '{}' must be >= 0", label));
        }
    }
}

SyntheticOutput generate_synthetic_dataset(const SyntheticSpec& spec,
                                           const std::filesystem::path& out_dir) {
    spec.validate();

    // Component queue in a stable class order, then a seeded shuffle.
    std::vector<std::string> queue;
    std::vector<std::string> order;
    for (const auto& known : kDefaultClasses) {
        if (spec.per_class.count(known)) order.push_back(known);
    }
    for (const auto& [label, count] : spec.per_class) {
        if (std::find(order.begin(), order.end(), label) == order.end()) {
            order.push_back(label);
        }
    }
    for (const auto& label : order) {
        const int count = spec.per_class.at(label);
        for (int i = 0; i < count; ++i) queue.push_back(label);
    }
    if (queue.empty()) {
        throw ArgumentError("synthetic spec has zero components in total");
    }

    RngStream rng = RngStream::derive({static_cast<std::uint64_t>(spec.seed), 0x71u});
    rng.shuffle(queue);

    const auto images_dir = out_dir / "images";
    std::filesystem::create_directories(images_dir);

    SyntheticOutput output;
    std::vector<AnnotatedImageRecord> records;
    const int S = spec.image_size;
    std::size_t cursor = 0;
    int image_index = 0;

    while (cursor < queue.size()) {
        const std::size_t remaining = queue.size() - cursor;
        const std::size_t k =
            1 + rng.uniform_int(std::min<std::size_t>(4, remaining));
        RngStream img_rng = RngStream::derive(
            {static_cast<std::uint64_t>(spec.seed), 0x9a2u, static_cast<std::uint64_t>(image_index)});

        AnnotatedImageRecord rec;
        rec.image_id = fmt::format("synth_{:04d}", image_index);
        rec.image_path = fmt::format("images/synth_{:04d}.png", image_index);
        rec.width = S;
        rec.height = S;
        rec.face = image_index % 2 == 0 ? Face::A : Face::B;
        rec.background = spec.palette[static_cast<std::size_t>(image_index) % spec.palette.size()];

        Image img(S, S, 3);
        const Rgb bg = background_color(rec.background);
        for (int y = 0; y < S; ++y) {
            for (int x = 0; x < S; ++x) {
                const double n = img_rng.uniform(-3.0, 3.0);
                put(img, x, y, {bg.r + n, bg.g + n, bg.b + n});
            }
        }

        // One component per quadrant cell so shapes never overlap.
        std::vector<int> cells = {0, 1, 2, 3};
        img_rng.shuffle(cells);
        for (std::size_t ci = 0; ci < k; ++ci) {
            const std::string label = queue[cursor++];
            const int cell = cells[ci];
            const double half = S / 2.0;
            const double cx0 = (cell % 2) * half;
            const double cy0 = (cell / 2) * half;
            const double cx = cx0 + half / 2 + img_rng.uniform(-half / 10, half / 10);
            const double cy = cy0 + half / 2 + img_rng.uniform(-half / 10, half / 10);
            const double R = (half / 2) * img_rng.uniform(0.55, 0.8);
            const double theta = img_rng.uniform(0.0, M_PI);
            const double base_jitter = img_rng.uniform(-10.0, 10.0);

            ComponentStyle style;
            if (label == "battery") style = battery_shape(R, img_rng);
            else if (label == "pcb") style = pcb_shape(R, img_rng);
            else if (label == "glass") style = glass_shape(R, img_rng);
            else style = metal_shape(R, img_rng);

            // Corner vertices can reach past R (quads hit ~1.4R); rescale the
            // shape so every vertex stays inside the cell under any rotation.
            double r_max = 0.0;
            for (const Point& p : style.local) {
                r_max = std::max(r_max, std::hypot(p.x, p.y));
            }
            const double allowed = half / 2.0 - half / 10.0 - 2.0;
            if (r_max > allowed) {
                const double rescale = allowed / r_max;
                for (Point& p : style.local) {
                    p.x *= rescale;
                    p.y *= rescale;
                }
                style.extent_u *= rescale;
                style.extent_v *= rescale;
            }

            const double ct = std::cos(theta);
            const double st = std::sin(theta);
            std::vector<Point> world;
            for (const Point& p : style.local) {
                world.push_back(Point{cx + p.x * ct - p.y * st, cy + p.x * st + p.y * ct});
            }

            double min_x = world[0].x, max_x = world[0].x;
            double min_y = world[0].y, max_y = world[0].y;
            for (const Point& p : world) {
                min_x = std::min(min_x, p.x);
                max_x = std::max(max_x, p.x);
                min_y = std::min(min_y, p.y);
                max_y = std::max(max_y, p.y);
            }
            const int x0 = std::max(0, static_cast<int>(std::floor(min_x)));
            const int x1 = std::min(S - 1, static_cast<int>(std::ceil(max_x)));
            const int y0 = std::max(0, static_cast<int>(std::floor(min_y)));
            const int y1 = std::min(S - 1, static_cast<int>(std::ceil(max_y)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    if (!point_in_polygon(world, x + 0.5, y + 0.5)) continue;
                    const double dx = (x + 0.5) - cx;
                    const double dy = (y + 0.5) - cy;
                    const double u = dx * ct + dy * st;
                    const double v = -dx * st + dy * ct;
                    const double noise = img_rng.uniform(-5.0, 5.0);
                    put(img, x, y, texture_color(label, style, u, v, base_jitter, noise));
                }
            }

            Annotation ann;
            ann.class_label = label;
            ann.annotation_index = static_cast<int>(ci);
            for (const Point& p : world) {
                ann.polygon.vertices.push_back(
                    Point{std::round(p.x * 100.0) / 100.0, std::round(p.y * 100.0) / 100.0});
            }
            rec.annotations.push_back(std::move(ann));
        }

        const auto file = images_dir / fmt::format("synth_{:04d}.png", image_index);
        save_png(file, img);
        output.image_files.push_back(file);
        records.push_back(std::move(rec));
        ++image_index;
    }

    output.annotation_file = out_dir / "annotations.json";
    write_annotation_file(output.annotation_file, records);
    output.total_components = static_cast<int>(queue.size());
    return output;
}

}  // namespace weeesort
