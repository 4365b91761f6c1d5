#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

namespace weeesort {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Simple polygon in pixel coordinates. Use validate_polygon() after
/// constructing from untrusted input.
struct Polygon {
    std::vector<Point> vertices;
};

/// Rotated rectangle. angle_deg is the rotation of the width axis from the
/// image x-axis, canonicalized to [0, 90).
struct OrientedBox {
    Point center;
    double width = 0.0;
    double height = 0.0;
    double angle_deg = 0.0;

    double area() const { return width * height; }
    std::array<Point, 4> corners() const;
    /// True when p lies inside the box, expanded by tol on each side.
    bool contains(const Point& p, double tol = 1e-6) const;
};

struct AxisAlignedSquare {
    double min_x = 0.0;
    double min_y = 0.0;
    double side = 0.0;
};

/// Per-edge padding, in pixels, needed to restore a crop window that ran off
/// the image. All zero means the window fit.
struct PaddingSpec {
    double left = 0.0;
    double right = 0.0;
    double top = 0.0;
    double bottom = 0.0;

    bool empty() const { return left == 0 && right == 0 && top == 0 && bottom == 0; }
};

/// Signed shoelace area (positive for counter-clockwise vertex order).
double polygon_signed_area(const Polygon& polygon);

/// True when no two non-adjacent edges intersect and no edge has zero length.
bool polygon_is_simple(const Polygon& polygon);

/// Throws GeometryError when the polygon has fewer than 3 vertices, non-finite
/// coordinates, zero area as a point set, or self-intersections.
void validate_polygon(const Polygon& polygon);

/// Counter-clockwise convex hull (strict turns, no collinear points).
std::vector<Point> convex_hull(std::span<const Point> points);

/// Minimum-area enclosing rotated rectangle, via rotating calipers over the
/// convex hull. Throws GeometryError on degenerate input.
OrientedBox min_area_obb(const Polygon& polygon);

/// Smallest axis-aligned square containing all four box corners, centered on
/// their axis-aligned bounding box.
AxisAlignedSquare circumscribe_square(const OrientedBox& box);

/// Fits a crop window into an image of the given size. When the side fits, the
/// square is translated minimally inside and the padding is empty. Otherwise
/// the square is kept in place and the padding records how much of it hangs
/// past each image edge; crop code replicates border pixels over those bands.
std::pair<AxisAlignedSquare, PaddingSpec>
fit_square_to_image(const AxisAlignedSquare& square, double width, double height);

}  // namespace weeesort
