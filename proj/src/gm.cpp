#include "ashe/gm.hpp"

#include <algorithm>
#include <cmath>

namespace ashe {

GmConfig GmConfig::from_scene(const SceneConfig& scene) {
    GmConfig cfg;
    cfg.scene = scene;
    return cfg;
}

OrientedRect GmConfig::footprint_nominal_px() const {
    return slot_footprint_px(scene);
}

OrientedRect GmConfig::substrate_detect_nominal_px() const {
    OrientedRect r = footprint_nominal_px();
    r.w += substrate_inflation_w_px;
    r.h += substrate_inflation_h_px;
    return r;
}

OrientedRect GmConfig::slot_detect_nominal_px() const {
    OrientedRect r = footprint_nominal_px();
    r.w += slot_inflation_px;
    r.h += slot_inflation_px;
    return r;
}

namespace {

struct Window {
    int x, y, w, h;
};

// Working window around the slot: the pose envelope (20 mm), glow reach and
// blur support bound how far the substrate can appear from the slot center.
Window detect_window(const GmConfig& cfg) {
    const SceneConfig& s = cfg.scene;
    const double margin = 20.0 / s.mm_per_px + 3.5 * s.glow_width_px * 0.5 +
                          cfg.blur_ksize + 4.0;
    const double hw = s.sub_w_px() * 0.5 + margin;
    const double hh = s.sub_h_px() * 0.5 + margin;
    int x0 = static_cast<int>(std::floor(s.slot_cx_px - hw));
    int y0 = static_cast<int>(std::floor(s.slot_cy_px - hh));
    int x1 = static_cast<int>(std::ceil(s.slot_cx_px + hw));
    int y1 = static_cast<int>(std::ceil(s.slot_cy_px + hh));
    x0 = std::max(0, x0);
    y0 = std::max(0, y0);
    x1 = std::min(s.frame_w - 1, x1);
    y1 = std::min(s.frame_h - 1, y1);
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

std::optional<OrientedRect> slot_rect_one_frame(const Image& frame,
                                                const GmConfig& cfg,
                                                const Window& win) {
    const Image sub = crop(frame, win.x, win.y, win.w, win.h);
    const GrayImage gray = to_grayscale(sub);
    const GrayImage blurred = gaussian_blur(gray, cfg.blur_sigma, cfg.blur_ksize);
    const Bitmap edges = canny_edges(blurred, cfg.canny_low, cfg.canny_high);
    const Bitmap pruned = prune_short_edges(edges, cfg.prune_min_px);
    std::vector<Vec2> pts;
    for (int y = 0; y < pruned.h; ++y)
        for (int x = 0; x < pruned.w; ++x)
            if (pruned.at(x, y))
                pts.push_back({static_cast<double>(x), static_cast<double>(y)});
    const std::vector<Vec2> hull = convex_hull(std::move(pts));
    if (hull.size() < 3) return std::nullopt;
    OrientedRect r = min_area_rect(hull);
    r.cx += win.x;
    r.cy += win.y;
    return r;
}

}  // namespace

OrientedRect detect_slot_reference(const std::vector<Image>& frames,
                                   const GmConfig& cfg) {
    require(!frames.empty(), "detect_slot_reference: no frames");
    const Window win = detect_window(cfg);
    std::vector<OrientedRect> rects;
    for (const Image& f : frames) {
        const auto r = slot_rect_one_frame(f, cfg, win);
        if (r) rects.push_back(*r);
    }
    if (rects.empty())
        throw DataError("detect_slot_reference: reference not found in any frame");
    OrientedRect agg;
    try {
        agg = aggregate_detections(rects, cfg.slot_detect_nominal_px(),
                                   cfg.size_tol);
    } catch (const DataError&) {
        throw DataError(
            "detect_slot_reference: no frame passed the size filter");
    }
    agg.w = std::max(1.0, agg.w - cfg.slot_inflation_px);
    agg.h = std::max(1.0, agg.h - cfg.slot_inflation_px);
    return agg.normalized();
}

std::optional<OrientedRect> detect_substrate_quad(const Image& frame,
                                                  const GmConfig& cfg) {
    require(frame.w == cfg.scene.frame_w && frame.h == cfg.scene.frame_h,
            "detect_substrate_quad: frame does not match configured geometry");
    const Window win = detect_window(cfg);
    const Image sub = crop(frame, win.x, win.y, win.w, win.h);
    const Image blurred = gaussian_blur(sub, cfg.blur_sigma, cfg.blur_ksize);
    const Bitmap mask = blue_mask(blurred, cfg.min_blue, cfg.dominance);
    const Bitmap edges =
        canny_edges(bitmap_to_gray(mask), cfg.canny_low, cfg.canny_high);
    const std::vector<LineSegment> segs = hough_segments(edges, cfg.hough);
    if (segs.empty()) return std::nullopt;
    std::vector<Vec2> pts;
    pts.reserve(segs.size() * 2);
    for (const LineSegment& s : segs) {
        pts.push_back(s.p0);
        pts.push_back(s.p1);
    }
    const std::vector<Vec2> hull = convex_hull(std::move(pts));
    if (hull.size() < 3) return std::nullopt;
    OrientedRect r = min_area_rect(hull);
    r.cx += win.x;
    r.cy += win.y;
    return r;
}

OrientedRect aggregate_detections(const std::vector<OrientedRect>& rects,
                                  const OrientedRect& nominal, double size_tol,
                                  int* kept) {
    require(!rects.empty(), "aggregate_detections: no rects");
    require(nominal.w > 0 && nominal.h > 0, "aggregate_detections: bad nominal");
    double sx = 0, sy = 0, sw = 0, sh = 0, sc = 0, ss = 0;
    int n = 0;
    for (const OrientedRect& raw : rects) {
        const OrientedRect r = raw.normalized();
        if (std::abs(r.w - nominal.w) > size_tol * nominal.w) continue;
        if (std::abs(r.h - nominal.h) > size_tol * nominal.h) continue;
        sx += r.cx;
        sy += r.cy;
        sw += r.w;
        sh += r.h;
        // Rect orientations live on a half-circle; doubling maps them onto a
        // full circle where the vector mean is well defined.
        sc += std::cos(2.0 * deg2rad(r.angle_deg));
        ss += std::sin(2.0 * deg2rad(r.angle_deg));
        ++n;
    }
    if (kept) *kept = n;
    if (n == 0)
        throw DataError("aggregate_detections: detection unstable, all rects rejected");
    OrientedRect out;
    out.cx = sx / n;
    out.cy = sy / n;
    out.w = sw / n;
    out.h = sh / n;
    out.angle_deg = rad2deg(0.5 * std::atan2(ss, sc));
    return out.normalized();
}

GmVerdict gm_classify(const OrientedRect& slot,
                      const std::function<Image(int)>& frame_at, int n_frames,
                      const GmConfig& cfg) {
    require(n_frames >= 1, "gm_classify: need at least one frame");
    GmVerdict v;
    v.slot_rect = slot;
    std::vector<OrientedRect> rects;
    rects.reserve(n_frames);
    for (int i = 0; i < n_frames; ++i) {
        const auto r = detect_substrate_quad(frame_at(i), cfg);
        if (r) rects.push_back(*r);
    }
    const int missing = n_frames - static_cast<int>(rects.size());
    if (missing >= static_cast<int>(std::ceil(cfg.missing_frac * n_frames))) {
        v.overlap = 0.0;
        v.success = false;
        v.unstable = true;
        v.frames_used = static_cast<int>(rects.size());
        return v;
    }
    OrientedRect agg;
    int kept = 0;
    try {
        agg = aggregate_detections(rects, cfg.substrate_detect_nominal_px(),
                                   cfg.size_tol, &kept);
    } catch (const DataError&) {
        v.overlap = 0.0;
        v.success = false;
        v.unstable = true;
        v.frames_used = 0;
        return v;
    }
    agg.w = std::max(1.0, agg.w - cfg.substrate_inflation_w_px);
    agg.h = std::max(1.0, agg.h - cfg.substrate_inflation_h_px);
    v.substrate_rect = agg.normalized();
    v.frames_used = kept;
    v.overlap = overlap_fraction(v.substrate_rect, slot);
    v.rot_mismatch_deg = rotation_mismatch(v.substrate_rect, slot);
    v.success = v.overlap >= cfg.overlap_min &&
                v.rot_mismatch_deg <= cfg.rot_fail_deg;
    return v;
}

GmVerdict gm_classify(const OrientedRect& slot, const std::vector<Image>& frames,
                      const GmConfig& cfg) {
    return gm_classify(
        slot, [&frames](int i) -> Image { return frames[static_cast<size_t>(i)]; },
        static_cast<int>(frames.size()), cfg);
}

}  // namespace ashe
