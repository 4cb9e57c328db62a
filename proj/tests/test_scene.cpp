#include <cmath>
#include <vector>

#include "ashe/errors.hpp"
#include "ashe/geometry.hpp"
#include "ashe/raster_ops.hpp"
#include "ashe/rng.hpp"
#include "ashe/scene.hpp"
#include "doctest.h"

using namespace ashe;

namespace {

OrientedRect mask_rect(const Image& frame) {
    const Bitmap m = blue_mask(frame);
    std::vector<Vec2> pts;
    for (int y = 0; y < m.h; ++y)
        for (int x = 0; x < m.w; ++x)
            if (m.at(x, y)) pts.push_back({double(x), double(y)});
    return min_area_rect(convex_hull(std::move(pts))).normalized();
}

SceneConfig noiseless() {
    SceneConfig cfg;
    cfg.sensor_noise_sigma = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("rendering is deterministic per seed") {
    const SceneConfig cfg;
    const PoseError pose{1.0, -0.5, 0.7};
    const Image a = render_scene(pose, cfg, 42);
    const Image b = render_scene(pose, cfg, 42);
    CHECK(a.px == b.px);
    const Image c = render_scene(pose, cfg, 43);
    CHECK(a.px != c.px);

    const Image e1 = render_empty(cfg, 7);
    const Image e2 = render_empty(cfg, 7);
    CHECK(e1.px == e2.px);
}

TEST_CASE("noiseless rendering does not consume the seed") {
    const SceneConfig cfg = noiseless();
    const PoseError pose{2.0, 1.0, -1.0};
    CHECK(render_scene(pose, cfg, 1).px == render_scene(pose, cfg, 999).px);
}

TEST_CASE("empty frame shows the slot outline against the background") {
    const SceneConfig cfg = noiseless();
    const Image img = render_empty(cfg, 0);
    const uint8_t bg = static_cast<uint8_t>(cfg.background_level);
    const uint8_t line =
        static_cast<uint8_t>(cfg.background_level + cfg.slot_line_contrast);
    CHECK(int(line) - int(bg) >= 30);

    // Far corner: plain background.
    CHECK(img.at(5, 5)[0] == bg);
    CHECK(img.at(5, 5)[1] == bg);
    CHECK(img.at(5, 5)[2] == bg);

    // The stroke runs inward from the nominal boundary on every side.
    const int left = int(std::ceil(cfg.slot_cx_px - cfg.sub_w_px() / 2));
    const int top = int(std::ceil(cfg.slot_cy_px - cfg.sub_h_px() / 2));
    const int cy = int(cfg.slot_cy_px);
    const int cx = int(cfg.slot_cx_px);
    for (int t = 0; t < cfg.slot_line_thickness_px; ++t) {
        CHECK(img.at(left + t, cy)[0] == line);
        CHECK(img.at(cx, top + t)[1] == line);
    }
    CHECK(img.at(left + cfg.slot_line_thickness_px, cy)[0] == bg);
    CHECK(img.at(left - 1, cy)[0] == bg);

    // Slot center: inside the outline, plain background.
    CHECK(img.at(cx, cy)[0] == bg);
    CHECK(img.at(cx, cy)[2] == bg);
}

TEST_CASE("seated substrate mask matches the analytic footprint") {
    const SceneConfig cfg = noiseless();
    const Image img = render_scene(PoseError{}, cfg, 0);
    const OrientedRect got = mask_rect(img);
    const OrientedRect want = substrate_footprint_px(PoseError{}, cfg);
    CHECK(std::abs(got.cx - want.cx) <= 1.0);
    CHECK(std::abs(got.cy - want.cy) <= 1.0);
    CHECK(std::abs(got.w - want.w) <= 2.0);
    CHECK(std::abs(got.h - want.h) <= 2.0);
    CHECK(rotation_mismatch(got, want) <= 0.2);
}

TEST_CASE("substrate interior renders as plain background") {
    const SceneConfig cfg = noiseless();
    const Image img = render_scene(PoseError{}, cfg, 0);
    const uint8_t bg = static_cast<uint8_t>(cfg.background_level);
    const int cx = int(cfg.slot_cx_px), cy = int(cfg.slot_cy_px);
    for (const auto [x, y] : {std::pair{cx, cy}, {cx - 100, cy + 50},
                              {cx + 150, cy - 80}}) {
        CHECK(img.at(x, y)[0] == bg);
        CHECK(img.at(x, y)[1] == bg);
        CHECK(img.at(x, y)[2] == bg);
    }
}

TEST_CASE("a 5.6 mm offset displaces the mask by 56 px") {
    const SceneConfig cfg = noiseless();
    const OrientedRect seated = mask_rect(render_scene(PoseError{}, cfg, 0));
    const OrientedRect moved =
        mask_rect(render_scene(PoseError{5.6, 0.0, 0.0}, cfg, 0));
    CHECK(std::abs((moved.cx - seated.cx) - 56.0) <= 1.0);
    CHECK(std::abs(moved.cy - seated.cy) <= 1.0);

    const OrientedRect moved_y =
        mask_rect(render_scene(PoseError{0.0, -5.6, 0.0}, cfg, 0));
    CHECK(std::abs((moved_y.cy - seated.cy) + 56.0) <= 1.0);
}

TEST_CASE("a rotated substrate leaves a rotated mask") {
    const SceneConfig cfg = noiseless();
    const OrientedRect got =
        mask_rect(render_scene(PoseError{0.0, 0.0, 6.0}, cfg, 0));
    const OrientedRect want =
        substrate_footprint_px(PoseError{0.0, 0.0, 6.0}, cfg);
    CHECK(rotation_mismatch(got, want) <= 0.3);
    CHECK(std::abs(got.cx - want.cx) <= 1.5);
    CHECK(std::abs(got.cy - want.cy) <= 1.5);
}

TEST_CASE("sensor noise has the configured spread") {
    SceneConfig cfg;
    cfg.sensor_noise_sigma = 4.0;
    const Image img = render_empty(cfg, 11);
    // Sample a flat background patch away from the slot outline.
    double sum = 0.0, sum2 = 0.0;
    int n = 0;
    for (int y = 10; y < 110; ++y)
        for (int x = 10; x < 110; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = img.at(x, y)[c];
                sum += v;
                sum2 += v * v;
                ++n;
            }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::abs(mean - cfg.background_level) < 0.5);
    CHECK(std::abs(sd - 4.0) < 0.5);
}

TEST_CASE("band draws stay in their half-open magnitude ranges") {
    for (const Band band : {Band::Small, Band::Medium, Band::Large}) {
        const BandRange tb = translation_band(band);
        const BandRange rb = rotation_band(band);
        for (const Kind kind :
             {Kind::Rotation, Kind::Translation, Kind::Combined}) {
            for (uint64_t i = 0; i < 1000; ++i) {
                const PoseError p = sample_pose_error(band, kind, i);
                const double tmag = std::max(std::abs(p.dx_mm), std::abs(p.dy_mm));
                const double rmag = std::abs(p.theta_deg);
                if (kind == Kind::Rotation) {
                    CHECK(tmag == 0.0);
                    CHECK(rmag > rb.lo);
                    CHECK(rmag <= rb.hi);
                } else if (kind == Kind::Translation) {
                    CHECK(rmag == 0.0);
                    CHECK(tmag > tb.lo);
                    CHECK(tmag <= tb.hi);
                } else {
                    CHECK(tmag > tb.lo);
                    CHECK(tmag <= tb.hi);
                    CHECK(rmag > rb.lo);
                    CHECK(rmag <= rb.hi);
                }
            }
        }
    }
}

TEST_CASE("seated draws fill the full basin") {
    double max_t = 0.0, max_r = 0.0;
    for (uint64_t i = 0; i < 1000; ++i) {
        const PoseError p = sample_pose_error(Band::Seated, Kind::Combined, i);
        const double tmag = std::max(std::abs(p.dx_mm), std::abs(p.dy_mm));
        CHECK(tmag <= kSeatedTransMm);
        CHECK(std::abs(p.theta_deg) <= kSeatedRotDeg);
        max_t = std::max(max_t, tmag);
        max_r = std::max(max_r, std::abs(p.theta_deg));
    }
    CHECK(max_t > 0.9 * kSeatedTransMm);
    CHECK(max_r > 0.9 * kSeatedRotDeg);
}

TEST_CASE("band sampling is deterministic in the seed") {
    const PoseError a = sample_pose_error(Band::Medium, Kind::Combined, 5);
    const PoseError b = sample_pose_error(Band::Medium, Kind::Combined, 5);
    CHECK(a == b);
    const PoseError c = sample_pose_error(Band::Medium, Kind::Combined, 6);
    CHECK(a != c);
}

TEST_CASE("ground truth labels follow the seated basin") {
    CHECK(ground_truth_label({0.3, 0.0, 0.0}).seated);
    CHECK_FALSE(ground_truth_label({0.31, 0.0, 0.0}).seated);
    CHECK(ground_truth_label({0.0, -0.3, 0.0}).seated);
    CHECK(ground_truth_label({0.0, 0.0, 0.2}).seated);
    CHECK_FALSE(ground_truth_label({0.0, 0.0, -0.21}).seated);
    CHECK(ground_truth_label({0.2, 0.2, 0.1}).seated);
    CHECK_FALSE(ground_truth_label({0.2, 0.4, 0.1}).seated);
    CHECK(ground_truth_label({}).seated);
}

TEST_CASE("band and kind names round-trip through their parsers") {
    for (const Band b : {Band::Seated, Band::Small, Band::Medium, Band::Large})
        CHECK(parse_band(band_name(b)) == b);
    for (const Kind k : {Kind::Rotation, Kind::Translation, Kind::Combined})
        CHECK(parse_kind(kind_name(k)) == k);
    CHECK_THROWS_AS(parse_band("tiny"), ConfigError);
    CHECK_THROWS_AS(parse_kind("shear"), ConfigError);
}

TEST_CASE("analytic footprints use image-frame pixel coordinates") {
    const SceneConfig cfg;
    const OrientedRect slot = slot_footprint_px(cfg);
    CHECK(slot.cx == doctest::Approx(960.0));
    CHECK(slot.cy == doctest::Approx(540.0));
    CHECK(slot.w == doctest::Approx(762.0));
    CHECK(slot.h == doctest::Approx(508.0));
    CHECK(slot.angle_deg == doctest::Approx(0.0));

    const OrientedRect sub = substrate_footprint_px({1.0, -2.0, 3.0}, cfg);
    CHECK(sub.cx == doctest::Approx(970.0));
    CHECK(sub.cy == doctest::Approx(520.0));
    CHECK(sub.angle_deg == doctest::Approx(3.0));
}

TEST_CASE("pose envelope and scene config are validated") {
    const PoseError edge{20.0, -20.0, 20.0};
    CHECK_NOTHROW(edge.validate());
    const PoseError far_x{20.1, 0.0, 0.0};
    CHECK_THROWS_AS(far_x.validate(), ContractError);
    const PoseError far_y{0.0, -20.1, 0.0};
    CHECK_THROWS_AS(far_y.validate(), ContractError);
    const PoseError far_t{0.0, 0.0, 25.0};
    CHECK_THROWS_AS(far_t.validate(), ContractError);

    const SceneConfig defaults;
    CHECK_NOTHROW(defaults.validate());
    SceneConfig bad_roi;
    bad_roi.roi_x = bad_roi.frame_w - 10;
    CHECK_THROWS_AS(bad_roi.validate(), ConfigError);
    SceneConfig bad_noise;
    bad_noise.sensor_noise_sigma = -1.0;
    CHECK_THROWS_AS(bad_noise.validate(), ConfigError);
    SceneConfig bad_glow;
    bad_glow.glow_near_factor = 0.0;
    CHECK_THROWS_AS(bad_glow.validate(), ConfigError);
}
