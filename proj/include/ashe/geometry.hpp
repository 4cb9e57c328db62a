#pragma once

#include <cmath>
#include <vector>

#include "ashe/errors.hpp"

namespace ashe {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// z-component of the cross product; sign gives turn direction.
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Rectangle with arbitrary in-plane rotation. Convention: w >= h and
// angle in (-90, 90]; for near-square rects (|w - h| <= 1e-9) the angle is
// additionally folded into (-45, 45]. normalized() enforces this.
struct OrientedRect {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double angle_deg = 0.0;

    OrientedRect normalized() const;
    // Corner points in consistent winding order.
    std::vector<Vec2> corners() const;
    double area() const { return w * h; }
};

// Andrew monotone chain. Returns the hull in counter-clockwise order for a
// y-up frame (consistent winding either way); collinear points are dropped.
// Fewer than 3 distinct non-collinear inputs yield a degenerate hull
// (size < 3) rather than an error.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts);

// Rotating calipers over the hull edges. Requires a hull with >= 3 vertices
// and nonzero area.
OrientedRect min_area_rect(const std::vector<Vec2>& hull);

// Sutherland-Hodgman clip of a polygon against a convex clip polygon.
// Result may be empty.
std::vector<Vec2> clip_polygon(const std::vector<Vec2>& subject,
                               const std::vector<Vec2>& clip);

// Shoelace area, sign dropped.
double polygon_area(const std::vector<Vec2>& poly);

// area(a intersect b) / area(b). The second argument is the reference
// footprint. Result in [0, 1] up to floating-point rounding.
double overlap_fraction(const OrientedRect& a, const OrientedRect& b);

// Smallest angular difference treating orientations as equivalent mod 90
// degrees. Result in [0, 45].
double rotation_mismatch(const OrientedRect& a, const OrientedRect& b);

constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace ashe
