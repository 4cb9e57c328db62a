#include "ashe/scene.hpp"

#include <algorithm>
#include <cmath>

#include "ashe/rng.hpp"

namespace ashe {

void PoseError::validate() const {
    const bool ok = std::isfinite(dx_mm) && std::isfinite(dy_mm) &&
                    std::isfinite(theta_deg) && std::abs(dx_mm) <= 20.0 &&
                    std::abs(dy_mm) <= 20.0 && std::abs(theta_deg) <= 20.0;
    require(ok, "PoseError: pose outside renderer envelope");
}

void SceneConfig::validate() const {
    if (frame_w < 16 || frame_h < 16) throw ConfigError("scene: frame too small");
    if (mm_per_px <= 0.0) throw ConfigError("scene: mm_per_px must be positive");
    if (substrate_short_mm <= 0.0 || substrate_long_mm <= 0.0)
        throw ConfigError("scene: substrate dimensions must be positive");
    if (sub_w_px() >= frame_w || sub_h_px() >= frame_h)
        throw ConfigError("scene: substrate footprint does not fit in frame");
    if (glow_width_px <= 0.0) throw ConfigError("scene: glow width must be positive");
    if (glow_near_factor <= 0.0 || glow_near_factor > 1.0)
        throw ConfigError("scene: glow_near_factor must be in (0, 1]");
    if (sensor_noise_sigma < 0.0) throw ConfigError("scene: negative noise sigma");
    if (background_level < 0 || background_level > 255)
        throw ConfigError("scene: background level out of range");
    if (slot_line_thickness_px < 1) throw ConfigError("scene: slot stroke too thin");
    if (roi_w <= 0 || roi_h <= 0 || roi_x < 0 || roi_y < 0 ||
        roi_x + roi_w > frame_w || roi_y + roi_h > frame_h)
        throw ConfigError("scene: roi outside frame");
}

GroundTruth ground_truth_label(const PoseError& pose) {
    GroundTruth gt;
    gt.pose = pose;
    gt.seated = std::abs(pose.dx_mm) <= kSeatedTransMm &&
                std::abs(pose.dy_mm) <= kSeatedTransMm &&
                std::abs(pose.theta_deg) <= kSeatedRotDeg;
    return gt;
}

const char* band_name(Band b) {
    switch (b) {
        case Band::Seated: return "seated";
        case Band::Small: return "small";
        case Band::Medium: return "medium";
        case Band::Large: return "large";
    }
    return "?";
}

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::Rotation: return "rotation";
        case Kind::Translation: return "translation";
        case Kind::Combined: return "combined";
    }
    return "?";
}

Band parse_band(const std::string& s) {
    if (s == "seated") return Band::Seated;
    if (s == "small") return Band::Small;
    if (s == "medium") return Band::Medium;
    if (s == "large") return Band::Large;
    throw ConfigError("unknown band: " + s);
}

Kind parse_kind(const std::string& s) {
    if (s == "rotation") return Kind::Rotation;
    if (s == "translation") return Kind::Translation;
    if (s == "combined") return Kind::Combined;
    throw ConfigError("unknown kind: " + s);
}

BandRange translation_band(Band b) {
    switch (b) {
        case Band::Seated: return {0.0, kSeatedTransMm};
        case Band::Small: return {kSeatedTransMm, 2.4};
        case Band::Medium: return {2.4, 5.6};
        case Band::Large: return {5.6, 12.0};
    }
    return {0.0, 0.0};
}

BandRange rotation_band(Band b) {
    switch (b) {
        case Band::Seated: return {0.0, kSeatedRotDeg};
        case Band::Small: return {kSeatedRotDeg, 1.7};
        case Band::Medium: return {1.7, 5.4};
        case Band::Large: return {5.4, 12.0};
    }
    return {0.0, 0.0};
}

namespace {

// Draw in (lo, hi]: the band ranges are half-open at the bottom.
double draw_half_open(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * (1.0 - rng.uniform());
}

// Uniform point on the Chebyshev circle of radius m (the square of side 2m),
// so max(|dx|, |dy|) equals m exactly.
void draw_translation(Rng& rng, double m, double& dx, double& dy) {
    const int edge = static_cast<int>(rng.uniform_int(0, 3));
    const double u = rng.uniform(-m, m);
    switch (edge) {
        case 0: dx = m; dy = u; break;
        case 1: dx = -m; dy = u; break;
        case 2: dx = u; dy = m; break;
        default: dx = u; dy = -m; break;
    }
}

}  // namespace

PoseError sample_pose_error(Band band, Kind kind, uint64_t seed) {
    Rng rng(seed);
    PoseError p;
    if (band == Band::Seated) {
        p.dx_mm = rng.uniform(-kSeatedTransMm, kSeatedTransMm);
        p.dy_mm = rng.uniform(-kSeatedTransMm, kSeatedTransMm);
        p.theta_deg = rng.uniform(-kSeatedRotDeg, kSeatedRotDeg);
        return p;
    }
    const BandRange tb = translation_band(band);
    const BandRange rb = rotation_band(band);
    if (kind == Kind::Translation || kind == Kind::Combined) {
        const double m = draw_half_open(rng, tb.lo, tb.hi);
        draw_translation(rng, m, p.dx_mm, p.dy_mm);
    }
    if (kind == Kind::Rotation || kind == Kind::Combined) {
        const double m = draw_half_open(rng, rb.lo, rb.hi);
        p.theta_deg = rng.bernoulli(0.5) ? m : -m;
    }
    return p;
}

OrientedRect slot_footprint_px(const SceneConfig& cfg) {
    return OrientedRect{cfg.slot_cx_px, cfg.slot_cy_px, cfg.sub_w_px(),
                        cfg.sub_h_px(), 0.0}
        .normalized();
}

OrientedRect substrate_footprint_px(const PoseError& pose, const SceneConfig& cfg) {
    return OrientedRect{cfg.slot_cx_px + pose.dx_mm / cfg.mm_per_px,
                        cfg.slot_cy_px + pose.dy_mm / cfg.mm_per_px,
                        cfg.sub_w_px(), cfg.sub_h_px(), pose.theta_deg}
        .normalized();
}

namespace {

// Background plus the slot outline, no substrate and no noise.
Image render_base(const SceneConfig& cfg) {
    const uint8_t bg = static_cast<uint8_t>(cfg.background_level);
    Image img(cfg.frame_w, cfg.frame_h, bg, bg, bg);
    const uint8_t line = static_cast<uint8_t>(
        std::min(255, cfg.background_level + cfg.slot_line_contrast));
    const double hw = cfg.sub_w_px() * 0.5;
    const double hh = cfg.sub_h_px() * 0.5;
    const double t = cfg.slot_line_thickness_px - 1.0;
    const int x0 = std::max(0, static_cast<int>(std::ceil(cfg.slot_cx_px - hw)));
    const int x1 = std::min(cfg.frame_w - 1,
                            static_cast<int>(std::floor(cfg.slot_cx_px + hw)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(cfg.slot_cy_px - hh)));
    const int y1 = std::min(cfg.frame_h - 1,
                            static_cast<int>(std::floor(cfg.slot_cy_px + hh)));
    for (int y = y0; y <= y1; ++y) {
        const double ay = std::abs(y - cfg.slot_cy_px);
        const bool yband = ay >= hh - t;
        for (int x = x0; x <= x1; ++x) {
            const double ax = std::abs(x - cfg.slot_cx_px);
            if (yband || ax >= hw - t) {
                uint8_t* p = img.at(x, y);
                p[0] = p[1] = p[2] = line;
            }
        }
    }
    return img;
}

void add_glow(Image& img, const PoseError& pose, const SceneConfig& cfg) {
    const double sigma = cfg.glow_width_px * 0.5;
    const double reach = 3.5 * sigma;
    const double scx = cfg.slot_cx_px + pose.dx_mm / cfg.mm_per_px;
    const double scy = cfg.slot_cy_px + pose.dy_mm / cfg.mm_per_px;
    const double hw = cfg.sub_w_px() * 0.5;
    const double hh = cfg.sub_h_px() * 0.5;
    const double c = std::cos(deg2rad(pose.theta_deg));
    const double s = std::sin(deg2rad(pose.theta_deg));
    // Frame-space bounding box of the rotated footprint, padded by the reach.
    const double bw = hw * std::abs(c) + hh * std::abs(s) + reach + 1.0;
    const double bh = hw * std::abs(s) + hh * std::abs(c) + reach + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(scx - bw)));
    const int x1 = std::min(cfg.frame_w - 1, static_cast<int>(std::ceil(scx + bw)));
    const int y0 = std::max(0, static_cast<int>(std::floor(scy - bh)));
    const int y1 = std::min(cfg.frame_h - 1, static_cast<int>(std::ceil(scy + bh)));
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            // Substrate-local coordinates; +y is the LED (near) side.
            const double fx = x - scx;
            const double fy = y - scy;
            const double lx = c * fx + s * fy;
            const double ly = -s * fx + c * fy;
            const double ddx = std::abs(lx) - hw;
            const double ddy = std::abs(ly) - hh;
            double d;
            if (ddx <= 0.0 && ddy <= 0.0) {
                d = std::max(ddx, ddy);  // negative: inside, distance to boundary
            } else {
                const double ox = std::max(ddx, 0.0);
                const double oy = std::max(ddy, 0.0);
                d = std::hypot(ox, oy);
            }
            // The edge face is the emitter: peak brightness at the boundary,
            // Gaussian falloff into the interior, nothing beyond the footprint
            // except the sub-pixel coverage ramp of the edge itself.
            if (d > 0.5 || d < -reach) continue;
            const double cov = std::clamp(0.5 - d, 0.0, 1.0);
            const double g =
                cov * (d >= 0.0 ? 1.0 : std::exp(-d * d * inv2s2));
            // Light enters from the near edge; emission brightens toward the
            // far edge, which is what the classifier's crop looks at.
            const double tfar = std::clamp((hh - ly) / (2.0 * hh), 0.0, 1.0);
            const double f = cfg.glow_near_factor +
                             (1.0 - cfg.glow_near_factor) * tfar;
            uint8_t* p = img.at(x, y);
            const double k = f * g;
            // The emission outshines whatever lies beneath the glass (the slot
            // stroke in particular), so the band replaces rather than adds.
            p[0] = static_cast<uint8_t>(
                std::min(255.0, cfg.background_level + cfg.glow_r * k + 0.5));
            p[1] = static_cast<uint8_t>(
                std::min(255.0, cfg.background_level + cfg.glow_g * k + 0.5));
            p[2] = static_cast<uint8_t>(
                std::min(255.0, cfg.background_level + cfg.glow_b * k + 0.5));
        }
    }
}

void add_noise(Image& img, double sigma, uint64_t seed) {
    if (sigma <= 0.0) return;
    Rng rng(rng_stream(seed, "sensor_noise"));
    for (uint8_t& v : img.px) {
        const double nv = v + sigma * rng.normal();
        v = static_cast<uint8_t>(std::clamp(nv + 0.5, 0.0, 255.0));
    }
}

}  // namespace

Image render_empty(const SceneConfig& cfg, uint64_t seed) {
    cfg.validate();
    Image img = render_base(cfg);
    add_noise(img, cfg.sensor_noise_sigma, seed);
    return img;
}

Image render_scene(const PoseError& pose, const SceneConfig& cfg, uint64_t seed) {
    cfg.validate();
    pose.validate();
    Image img = render_base(cfg);
    add_glow(img, pose, cfg);
    add_noise(img, cfg.sensor_noise_sigma, seed);
    return img;
}

}  // namespace ashe
