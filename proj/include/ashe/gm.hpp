#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ashe/raster_ops.hpp"
#include "ashe/scene.hpp"

namespace ashe {

// Macro-error (geometric) detector configuration. Scene geometry supplies the
// nominal footprints and the working window; thresholds mirror the deployed
// pipeline: hysteresis (30, 300), component floor 100 px, overlap floor 0.90.
struct GmConfig {
    SceneConfig scene;
    double blur_sigma = 1.4;
    int blur_ksize = 5;
    double canny_low = 30.0;
    double canny_high = 300.0;
    int prune_min_px = 100;
    int min_blue = 120;
    int dominance = 40;
    // Finer bins than the library defaults: the tight corridor drops the
    // aliasing stair corners of the mask contour, which otherwise become the
    // hull's support points and drag the fitted rectangle off-center.
    HoughParams hough{0.5, 0.5, 50, 40.0, 5.0};
    double size_tol = 0.15;
    double overlap_min = 0.90;
    double rot_fail_deg = 5.0;
    int frames = 100;
    // Fraction of frames without a detectable substrate that forces a failure
    // verdict (empty-slot safety).
    double missing_frac = 0.90;
    // Calibrated detection offsets (detected size minus physical footprint),
    // removed before overlap so the verdict matches the analytic geometry.
    // The glow mask hugs the footprint, so the substrate offsets are zero;
    // the slot stroke's outer contour sits one pixel outside per side.
    double substrate_inflation_w_px = 0.0;
    double substrate_inflation_h_px = 0.0;
    double slot_inflation_px = 2.0;

    static GmConfig from_scene(const SceneConfig& scene);

    OrientedRect footprint_nominal_px() const;  // physical w x h, angle 0
    OrientedRect substrate_detect_nominal_px() const;
    OrientedRect slot_detect_nominal_px() const;
};

struct GmVerdict {
    double overlap = 0.0;
    double rot_mismatch_deg = 0.0;
    OrientedRect slot_rect;
    OrientedRect substrate_rect;
    bool success = false;
    int frames_used = 0;
    bool unstable = false;  // detection degraded; verdict forced to failure
};

// Empty-transporter reference: per frame grayscale -> blur -> canny -> prune
// -> hull of edge pixels -> min-area rect; frames aggregated with the size
// filter. Throws DataError when no frame yields a usable rect.
OrientedRect detect_slot_reference(const std::vector<Image>& frames,
                                   const GmConfig& cfg);

// Substrate bound from one frame: blur -> blue mask -> canny -> hough ->
// hull of segment endpoints -> min-area rect. nullopt when nothing usable.
std::optional<OrientedRect> detect_substrate_quad(const Image& frame,
                                                  const GmConfig& cfg);

// Size-filter against nominal (fractional tolerance per dimension), then
// average: arithmetic mean of centers and sizes, circular mean of angles
// (angle-doubled, respecting the rect's orientation symmetry). Throws
// DataError when every rect is rejected. kept reports the retained count.
OrientedRect aggregate_detections(const std::vector<OrientedRect>& rects,
                                  const OrientedRect& nominal, double size_tol,
                                  int* kept = nullptr);

// Full verdict over n_frames frames supplied lazily by frame_at(i).
// Exceptional paths degrade to a failure verdict with unstable = true.
GmVerdict gm_classify(const OrientedRect& slot,
                      const std::function<Image(int)>& frame_at, int n_frames,
                      const GmConfig& cfg);
GmVerdict gm_classify(const OrientedRect& slot, const std::vector<Image>& frames,
                      const GmConfig& cfg);

}  // namespace ashe
