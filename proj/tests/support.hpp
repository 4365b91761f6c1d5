#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "weeesort/geometry.hpp"
#include "weeesort/rng.hpp"

namespace weeesort::testing {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("weeesort_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Brute-force minimum-area enclosing rectangle: tries the direction of every
/// hull edge and projects every vertex. Independent of the calipers route.
inline double brute_force_min_rect_area(const Polygon& polygon) {
    const auto hull = convex_hull(polygon.vertices);
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = hull.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = hull[i];
        const Point b = hull[(i + 1) % n];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (len == 0) continue;
        const double dx = (b.x - a.x) / len;
        const double dy = (b.y - a.y) / len;
        double min_d = 1e300, max_d = -1e300, min_n = 1e300, max_n = -1e300;
        for (const Point& p : polygon.vertices) {
            const double pd = p.x * dx + p.y * dy;
            const double pn = -p.x * dy + p.y * dx;
            min_d = std::min(min_d, pd);
            max_d = std::max(max_d, pd);
            min_n = std::min(min_n, pn);
            max_n = std::max(max_n, pn);
        }
        best = std::min(best, (max_d - min_d) * (max_n - min_n));
    }
    return best;
}

/// True when the minimum-area rectangle is isolated: no second hull-edge
/// orientation comes within rel_gap of the best area. Acute triangles, for
/// example, tie all three orientations exactly.
inline bool min_rect_is_isolated(const Polygon& polygon, double rel_gap = 1e-7) {
    const auto hull = convex_hull(polygon.vertices);
    const std::size_t n = hull.size();
    double best = std::numeric_limits<double>::infinity();
    double second = best;
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = hull[i];
        const Point b = hull[(i + 1) % n];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (len == 0) continue;
        const double dx = (b.x - a.x) / len;
        const double dy = (b.y - a.y) / len;
        double min_d = 1e300, max_d = -1e300, min_n = 1e300, max_n = -1e300;
        for (const Point& p : hull) {
            const double pd = p.x * dx + p.y * dy;
            const double pn = -p.x * dy + p.y * dx;
            min_d = std::min(min_d, pd);
            max_d = std::max(max_d, pd);
            min_n = std::min(min_n, pn);
            max_n = std::max(max_n, pn);
        }
        const double area = (max_d - min_d) * (max_n - min_n);
        if (area < best) {
            second = best;
            best = area;
        } else if (area < second) {
            second = area;
        }
    }
    return (second - best) / best > rel_gap;
}

/// Random simple polygon: points on a jittered circle (star-shaped, so simple).
inline Polygon random_polygon(RngStream& rng, int max_vertices = 30) {
    const int n = 3 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_vertices - 2)));
    const double cx = rng.uniform(100.0, 900.0);
    const double cy = rng.uniform(100.0, 900.0);
    const double base_r = rng.uniform(10.0, 90.0);
    Polygon poly;
    for (int i = 0; i < n; ++i) {
        const double ang = 2.0 * M_PI * i / n + rng.uniform(-0.25, 0.25) / n;
        const double r = base_r * rng.uniform(0.35, 1.0);
        poly.vertices.push_back(Point{cx + r * std::cos(ang), cy + r * std::sin(ang)});
    }
    return poly;
}

}  // namespace weeesort::testing
