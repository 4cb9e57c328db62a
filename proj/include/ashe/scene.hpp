#pragma once

#include <cstdint>
#include <string>

#include "ashe/geometry.hpp"
#include "ashe/image.hpp"

namespace ashe {

// Commanded placement error of the substrate relative to the slot.
// dx/dy are image-frame displacements in mm (y grows downward), theta is the
// in-plane rotation in degrees.
struct PoseError {
    double dx_mm = 0.0;
    double dy_mm = 0.0;
    double theta_deg = 0.0;

    bool operator==(const PoseError&) const = default;

    // Renderer envelope.
    void validate() const;
};

struct SceneConfig {
    int frame_w = 1920;
    int frame_h = 1080;
    double mm_per_px = 0.1;
    double slot_cx_px = 960.0;
    double slot_cy_px = 540.0;
    double substrate_short_mm = 50.8;
    double substrate_long_mm = 76.2;
    uint8_t glow_r = 30;
    uint8_t glow_g = 60;
    uint8_t glow_b = 220;
    double glow_width_px = 6.0;       // band width = 2 sigma of the cross-section
    double glow_near_factor = 0.85;   // edge brightness on the LED side
    double sensor_noise_sigma = 4.0;  // gray levels, i.i.d. per channel
    int background_level = 25;
    int slot_line_contrast = 170;     // slot outline gray above background
    int slot_line_thickness_px = 3;   // stroke drawn inward from the nominal boundary
    // Fixed crop used by the micro-error classifier: covers the far glow edge
    // and the adjacent corner so x, y and rotation offsets are all visible.
    int roi_x = 1061;
    int roi_y = 196;
    int roi_w = 380;
    int roi_h = 250;

    // Substrate footprint in pixels; the long edge runs horizontally.
    double sub_w_px() const { return substrate_long_mm / mm_per_px; }
    double sub_h_px() const { return substrate_short_mm / mm_per_px; }

    bool operator==(const SceneConfig&) const = default;
    void validate() const;  // throws ConfigError
};

struct GroundTruth {
    PoseError pose;
    bool seated = false;
};

// Seated basin: inside the arm's jitter, strictly inside the small band.
constexpr double kSeatedTransMm = 0.3;
constexpr double kSeatedRotDeg = 0.2;

GroundTruth ground_truth_label(const PoseError& pose);

enum class Band { Seated, Small, Medium, Large };
enum class Kind { Rotation, Translation, Combined };

const char* band_name(Band b);
const char* kind_name(Kind k);
Band parse_band(const std::string& s);
Kind parse_kind(const std::string& s);

// Error-band magnitude ranges (half-open (lo, hi]); translation magnitudes are
// Chebyshev (max-axis) displacements so band membership and the seated basin
// use the same per-axis norm.
struct BandRange {
    double lo;
    double hi;
};
BandRange translation_band(Band b);
BandRange rotation_band(Band b);

// Uniform draw within the band. kind picks which components are nonzero
// (seated draws fill all three inside the basin).
PoseError sample_pose_error(Band band, Kind kind, uint64_t seed);

// Dark frame with the slot outline and sensor noise; no substrate.
Image render_empty(const SceneConfig& cfg, uint64_t seed);

// render_empty content plus the laterally lit substrate edge glow at the
// commanded pose. Noise is applied last.
Image render_scene(const PoseError& pose, const SceneConfig& cfg, uint64_t seed);

// Analytic footprints in pixel coordinates.
OrientedRect slot_footprint_px(const SceneConfig& cfg);
OrientedRect substrate_footprint_px(const PoseError& pose, const SceneConfig& cfg);

}  // namespace ashe
