#include "ashe/geometry.hpp"

#include <algorithm>
#include <limits>

namespace ashe {

OrientedRect OrientedRect::normalized() const {
    OrientedRect r = *this;
    if (r.w < r.h) {
        std::swap(r.w, r.h);
        r.angle_deg += 90.0;
    }
    // Fold into (-90, 90].
    r.angle_deg = std::fmod(r.angle_deg, 180.0);
    if (r.angle_deg > 90.0) r.angle_deg -= 180.0;
    if (r.angle_deg <= -90.0) r.angle_deg += 180.0;
    if (std::abs(r.w - r.h) <= 1e-9) {
        // Square: 90-degree symmetry, fold into (-45, 45].
        if (r.angle_deg > 45.0) r.angle_deg -= 90.0;
        if (r.angle_deg <= -45.0) r.angle_deg += 90.0;
    }
    return r;
}

std::vector<Vec2> OrientedRect::corners() const {
    const double a = deg2rad(angle_deg);
    const Vec2 u{std::cos(a), std::sin(a)};   // along w
    const Vec2 v{-std::sin(a), std::cos(a)};  // along h
    const Vec2 c{cx, cy};
    const Vec2 hw = (w * 0.5) * u;
    const Vec2 hh = (h * 0.5) * v;
    return {c - hw - hh, c + hw - hh, c + hw + hh, c - hw + hh};
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2& a, const Vec2& b) {
                              return a.x == b.x && a.y == b.y;
                          }),
              pts.end());
    const size_t n = pts.size();
    if (n < 3) return pts;

    std::vector<Vec2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 &&
               cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0)
            --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower &&
               cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0)
            --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);  // last point equals the first
    return hull;
}

OrientedRect min_area_rect(const std::vector<Vec2>& hull) {
    require(hull.size() >= 3, "min_area_rect: degenerate hull");
    double best_area = std::numeric_limits<double>::infinity();
    OrientedRect best;
    const size_t n = hull.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2 e = hull[(i + 1) % n] - hull[i];
        const double len = std::hypot(e.x, e.y);
        if (len == 0.0) continue;
        const Vec2 u{e.x / len, e.y / len};
        const Vec2 v{-u.y, u.x};
        double umin = std::numeric_limits<double>::infinity(), umax = -umin;
        double vmin = umin, vmax = -umin;
        for (const Vec2& p : hull) {
            const double pu = dot(p, u);
            const double pv = dot(p, v);
            umin = std::min(umin, pu);
            umax = std::max(umax, pu);
            vmin = std::min(vmin, pv);
            vmax = std::max(vmax, pv);
        }
        const double area = (umax - umin) * (vmax - vmin);
        if (area < best_area - 1e-12) {
            best_area = area;
            const double cu = 0.5 * (umin + umax);
            const double cv = 0.5 * (vmin + vmax);
            best.cx = cu * u.x + cv * v.x;
            best.cy = cu * u.y + cv * v.y;
            best.w = umax - umin;
            best.h = vmax - vmin;
            best.angle_deg = rad2deg(std::atan2(u.y, u.x));
        }
    }
    require(best_area > 0.0 && std::isfinite(best_area),
            "min_area_rect: zero-area hull");
    return best.normalized();
}

std::vector<Vec2> clip_polygon(const std::vector<Vec2>& subject,
                               const std::vector<Vec2>& clip) {
    require(clip.size() >= 3, "clip_polygon: clip polygon degenerate");
    // Winding sign of the clip polygon decides which half-plane is inside.
    double w = 0.0;
    for (size_t i = 0; i < clip.size(); ++i) {
        const Vec2& a = clip[i];
        const Vec2& b = clip[(i + 1) % clip.size()];
        w += cross(a, b);
    }
    const double sign = w >= 0.0 ? 1.0 : -1.0;

    std::vector<Vec2> out = subject;
    for (size_t i = 0; i < clip.size() && !out.empty(); ++i) {
        const Vec2 a = clip[i];
        const Vec2 b = clip[(i + 1) % clip.size()];
        const Vec2 edge = b - a;
        std::vector<Vec2> in;
        in.swap(out);
        for (size_t j = 0; j < in.size(); ++j) {
            const Vec2 p = in[j];
            const Vec2 q = in[(j + 1) % in.size()];
            const double dp = sign * cross(edge, p - a);
            const double dq = sign * cross(edge, q - a);
            const bool pin = dp >= 0.0;
            const bool qin = dq >= 0.0;
            if (pin) out.push_back(p);
            if (pin != qin) {
                const double t = dp / (dp - dq);
                out.push_back(p + t * (q - p));
            }
        }
    }
    return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
    if (poly.size() < 3) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        s += cross(a, b);
    }
    return std::abs(s) * 0.5;
}

double overlap_fraction(const OrientedRect& a, const OrientedRect& b) {
    require(a.w > 0 && a.h > 0 && b.w > 0 && b.h > 0,
            "overlap_fraction: empty rect");
    const auto inter = clip_polygon(a.corners(), b.corners());
    const double f = polygon_area(inter) / b.area();
    return std::clamp(f, 0.0, 1.0);
}

double rotation_mismatch(const OrientedRect& a, const OrientedRect& b) {
    double d = std::abs(a.angle_deg - b.angle_deg);
    d = std::fmod(d, 90.0);
    return std::min(d, 90.0 - d);
}

}  // namespace ashe
