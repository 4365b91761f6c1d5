#include "weeesort/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "weeesort/errors.hpp"

namespace weeesort {

namespace {

constexpr double kEps = 1e-12;

double cross3(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }

Point sub(const Point& a, const Point& b) { return {a.x - b.x, a.y - b.y}; }

/// Orientation tolerance scaled to the magnitude of the operands.
double orient_tol(const Point& a, const Point& b, const Point& c) {
    const double m = std::max({1.0, std::abs(a.x), std::abs(a.y), std::abs(b.x),
                               std::abs(b.y), std::abs(c.x), std::abs(c.y)});
    return 1e-9 * m * m;
}

bool on_segment(const Point& a, const Point& b, const Point& p) {
    return std::min(a.x, b.x) - kEps <= p.x && p.x <= std::max(a.x, b.x) + kEps &&
           std::min(a.y, b.y) - kEps <= p.y && p.y <= std::max(a.y, b.y) + kEps;
}

/// Closed-segment intersection test, including collinear overlap.
bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d) {
    const double d1 = cross3(c, d, a);
    const double d2 = cross3(c, d, b);
    const double d3 = cross3(a, b, c);
    const double d4 = cross3(a, b, d);
    const double t1 = orient_tol(c, d, a);
    const double t2 = orient_tol(a, b, c);

    if (((d1 > t1 && d2 < -t1) || (d1 < -t1 && d2 > t1)) &&
        ((d3 > t2 && d4 < -t2) || (d3 < -t2 && d4 > t2))) {
        return true;
    }
    if (std::abs(d1) <= t1 && on_segment(c, d, a)) return true;
    if (std::abs(d2) <= t1 && on_segment(c, d, b)) return true;
    if (std::abs(d3) <= t2 && on_segment(a, b, c)) return true;
    if (std::abs(d4) <= t2 && on_segment(a, b, d)) return true;
    return false;
}

}  // namespace

std::array<Point, 4> OrientedBox::corners() const {
    const double rad = angle_deg * M_PI / 180.0;
    const Point d{std::cos(rad), std::sin(rad)};
    const Point n{-d.y, d.x};
    const double hw = width / 2.0;
    const double hh = height / 2.0;
    return {Point{center.x - d.x * hw - n.x * hh, center.y - d.y * hw - n.y * hh},
            Point{center.x + d.x * hw - n.x * hh, center.y + d.y * hw - n.y * hh},
            Point{center.x + d.x * hw + n.x * hh, center.y + d.y * hw + n.y * hh},
            Point{center.x - d.x * hw + n.x * hh, center.y - d.y * hw + n.y * hh}};
}

bool OrientedBox::contains(const Point& p, double tol) const {
    const double rad = angle_deg * M_PI / 180.0;
    const Point d{std::cos(rad), std::sin(rad)};
    const Point n{-d.y, d.x};
    const Point v = sub(p, center);
    return std::abs(dot(v, d)) <= width / 2.0 + tol &&
           std::abs(dot(v, n)) <= height / 2.0 + tol;
}

double polygon_signed_area(const Polygon& polygon) {
    const auto& v = polygon.vertices;
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % v.size()];
        acc += a.x * b.y - b.x * a.y;
    }
    return acc / 2.0;
}

bool polygon_is_simple(const Polygon& polygon) {
    const auto& v = polygon.vertices;
    const std::size_t n = v.size();
    if (n < 3) return false;

    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % n];
        if (std::hypot(b.x - a.x, b.y - a.y) <= kEps) return false;  // zero-length edge
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            const Point& a = v[i];
            const Point& b = v[(i + 1) % n];
            const Point& c = v[j];
            const Point& d = v[(j + 1) % n];
            if (adjacent) {
                // A doubled-back spike: consecutive edges collinear and opposed.
                const Point e1 = sub(b, a);
                const Point e2 = sub(d, c);
                const double cr = e1.x * e2.y - e1.y * e2.x;
                if (std::abs(cr) <= orient_tol(a, b, d) && dot(e1, e2) < 0) return false;
                continue;
            }
            if (segments_intersect(a, b, c, d)) return false;
        }
    }
    return true;
}

void validate_polygon(const Polygon& polygon) {
    if (polygon.vertices.size() < 3) {
        throw GeometryError("polygon needs at least 3 vertices");
    }
    for (const Point& p : polygon.vertices) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw GeometryError("polygon has non-finite coordinates");
        }
    }
    if (!polygon_is_simple(polygon)) {
        throw GeometryError("polygon is self-intersecting or has degenerate edges");
    }
    if (convex_hull(polygon.vertices).size() < 3) {
        throw GeometryError("polygon has zero area (collinear vertices)");
    }
}

std::vector<Point> convex_hull(std::span<const Point> points) {
    std::vector<Point> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point& a, const Point& b) {
                              return std::abs(a.x - b.x) <= kEps && std::abs(a.y - b.y) <= kEps;
                          }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;

    std::vector<Point> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {  // lower hull
        while (k >= 2 && cross3(hull[k - 2], hull[k - 1], pts[i]) <=
                             orient_tol(hull[k - 2], hull[k - 1], pts[i])) {
            --k;
        }
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper hull
        while (k >= t && cross3(hull[k - 2], hull[k - 1], pts[i]) <=
                             orient_tol(hull[k - 2], hull[k - 1], pts[i])) {
            --k;
        }
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

namespace {

/// Maps any angle to [0, 90) by the rectangle's 90-degree symmetry, swapping
/// the side lengths when the quarter-turn is folded away.
void canonicalize(double& angle_deg, double& width, double& height) {
    double a = std::fmod(angle_deg, 180.0);
    if (a < 0) a += 180.0;
    if (a >= 180.0) a -= 180.0;
    if (a >= 90.0) {
        a -= 90.0;
        std::swap(width, height);
    }
    if (a >= 90.0 || a < 0.0) a = 0.0;  // numeric backstop
    angle_deg = a;
}

}  // namespace

OrientedBox min_area_obb(const Polygon& polygon) {
    const auto hull = convex_hull(polygon.vertices);
    if (hull.size() < 3) {
        throw GeometryError("degenerate polygon: zero area");
    }
    const int n = static_cast<int>(hull.size());
    auto at = [&](int i) -> const Point& { return hull[static_cast<std::size_t>(i % n)]; };
    auto proj = [&](int i, const Point& dir) { return dot(at(i), dir); };
    auto edge_dir = [&](int i) {
        const Point a = at(i);
        const Point b = at(i + 1);
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        return Point{(b.x - a.x) / len, (b.y - a.y) / len};
    };

    // Initial support points for the first edge direction.
    const Point d0 = edge_dir(0);
    const Point n0{-d0.y, d0.x};
    int far_along = 0, far_across = 0, near_along = 0;
    for (int i = 1; i < n; ++i) {
        if (proj(i, d0) > proj(far_along, d0)) far_along = i;
        if (proj(i, n0) > proj(far_across, n0)) far_across = i;
        if (proj(i, d0) < proj(near_along, d0)) near_along = i;
    }

    double best_area = std::numeric_limits<double>::infinity();
    OrientedBox best;

    for (int i = 0; i < n; ++i) {
        const Point d = edge_dir(i);
        const Point nr{-d.y, d.x};  // inward normal (hull is CCW)

        // Rotate the three support points forward with the caliper.
        while (proj(far_along + 1, d) > proj(far_along, d) + kEps) ++far_along;
        while (proj(far_across + 1, nr) > proj(far_across, nr) + kEps) ++far_across;
        while (proj(near_along + 1, d) < proj(near_along, d) - kEps) ++near_along;

        const double min_d = proj(near_along, d);
        const double max_d = proj(far_along, d);
        const double min_n = proj(i, nr);
        const double max_n = proj(far_across, nr);
        const double area = (max_d - min_d) * (max_n - min_n);
        if (area < best_area) {
            best_area = area;
            double width = max_d - min_d;
            double height = max_n - min_n;
            double angle = std::atan2(d.y, d.x) * 180.0 / M_PI;
            const double cd = (min_d + max_d) / 2.0;
            const double cn = (min_n + max_n) / 2.0;
            canonicalize(angle, width, height);
            best = OrientedBox{Point{d.x * cd + nr.x * cn, d.y * cd + nr.y * cn},
                               width, height, angle};
        }
    }
    return best;
}

AxisAlignedSquare circumscribe_square(const OrientedBox& box) {
    if (!(box.width > 0.0) || !(box.height > 0.0)) {
        throw ArgumentError("oriented box must have positive width and height");
    }
    const auto cs = box.corners();
    double min_x = cs[0].x, max_x = cs[0].x, min_y = cs[0].y, max_y = cs[0].y;
    for (const Point& c : cs) {
        min_x = std::min(min_x, c.x);
        max_x = std::max(max_x, c.x);
        min_y = std::min(min_y, c.y);
        max_y = std::max(max_y, c.y);
    }
    const double side = std::max(max_x - min_x, max_y - min_y);
    const double cx = (min_x + max_x) / 2.0;
    const double cy = (min_y + max_y) / 2.0;
    return AxisAlignedSquare{cx - side / 2.0, cy - side / 2.0, side};
}

std::pair<AxisAlignedSquare, PaddingSpec>
fit_square_to_image(const AxisAlignedSquare& square, double width, double height) {
    if (!(width > 0.0) || !(height > 0.0)) {
        throw ArgumentError("image dimensions must be positive");
    }
    if (!(square.side > 0.0)) {
        throw ArgumentError("square side must be positive");
    }
    if (square.side <= std::min(width, height)) {
        AxisAlignedSquare fitted = square;
        fitted.min_x = std::clamp(fitted.min_x, 0.0, width - fitted.side);
        fitted.min_y = std::clamp(fitted.min_y, 0.0, height - fitted.side);
        return {fitted, PaddingSpec{}};
    }
    const double x0 = std::max(square.min_x, 0.0);
    const double y0 = std::max(square.min_y, 0.0);
    const double x1 = std::min(square.min_x + square.side, width);
    const double y1 = std::min(square.min_y + square.side, height);
    if (x1 <= x0 || y1 <= y0) {
        throw GeometryError("crop window lies entirely outside the image");
    }
    PaddingSpec pad;
    pad.left = x0 - square.min_x;
    pad.right = (square.min_x + square.side) - x1;
    pad.top = y0 - square.min_y;
    pad.bottom = (square.min_y + square.side) - y1;
    return {square, pad};
}

}  // namespace weeesort
