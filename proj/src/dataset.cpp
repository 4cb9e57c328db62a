#include "ashe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "ashe/errors.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace ashe {

Image crop_roi(const Image& frame, const SceneConfig& cfg) {
    if (frame.w == cfg.roi_w && frame.h == cfg.roi_h) return frame;
    return crop(frame, cfg.roi_x, cfg.roi_y, cfg.roi_w, cfg.roi_h);
}

void write_input_chw(const Image& img, int side, float* dst) {
    require(side > 0, "input: bad side");
    require(img.w > 0 && img.h > 0, "input: empty image");
    const double sx_scale = static_cast<double>(img.w) / side;
    const double sy_scale = static_cast<double>(img.h) / side;
    for (int y = 0; y < side; ++y) {
        const double sy = (y + 0.5) * sy_scale - 0.5;
        int y0 = static_cast<int>(std::floor(sy));
        const double fy = sy - y0;
        const int y1 = std::clamp(y0 + 1, 0, img.h - 1);
        y0 = std::clamp(y0, 0, img.h - 1);
        for (int x = 0; x < side; ++x) {
            const double sx = (x + 0.5) * sx_scale - 0.5;
            int x0 = static_cast<int>(std::floor(sx));
            const double fx = sx - x0;
            const int x1 = std::clamp(x0 + 1, 0, img.w - 1);
            x0 = std::clamp(x0, 0, img.w - 1);
            const uint8_t* p00 = img.at(x0, y0);
            const uint8_t* p10 = img.at(x1, y0);
            const uint8_t* p01 = img.at(x0, y1);
            const uint8_t* p11 = img.at(x1, y1);
            for (int ch = 0; ch < 3; ++ch) {
                const double top = p00[ch] + fx * (p10[ch] - p00[ch]);
                const double bot = p01[ch] + fx * (p11[ch] - p01[ch]);
                const double v = top + fy * (bot - top);
                dst[(static_cast<size_t>(ch) * side + y) * side + x] =
                    static_cast<float>(v / 255.0);
            }
        }
    }
}

Tensor single_input(const Image& roi, int side) {
    Tensor x({1, 3, side, side});
    write_input_chw(roi, side, x.ptr());
    return x;
}

AugmentParams sample_augment_params(Rng& rng, const AugmentConfig& cfg) {
    AugmentParams p;
    p.shift_x = rng.uniform(-cfg.shift_px, cfg.shift_px);
    p.shift_y = rng.uniform(-cfg.shift_px, cfg.shift_px);
    p.rot_deg = rng.uniform(-cfg.rot_deg, cfg.rot_deg);
    p.zoom = rng.uniform(1.0 - cfg.zoom_frac, 1.0 + cfg.zoom_frac);
    p.brightness = rng.uniform(-cfg.brightness, cfg.brightness);
    p.contrast = rng.uniform(1.0 - cfg.contrast_frac, 1.0 + cfg.contrast_frac);
    p.noise_sigma = rng.uniform(0.0, cfg.noise_sigma_max);
    return p;
}

Image apply_augment(const Image& img, const AugmentParams& p, Rng& rng) {
    require(p.zoom > 0.0, "augment: nonpositive zoom");
    Image out(img.w, img.h);
    const double cx = (img.w - 1) * 0.5;
    const double cy = (img.h - 1) * 0.5;
    const double th = deg2rad(p.rot_deg);
    // Inverse of dst = C + zoom * R(theta) * (src - C) + shift.
    const double ca = std::cos(th) / p.zoom;
    const double sa = std::sin(th) / p.zoom;
    const bool warp = p.shift_x != 0.0 || p.shift_y != 0.0 || p.rot_deg != 0.0 ||
                      p.zoom != 1.0;
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            double sxd = x, syd = y;
            if (warp) {
                const double u = x - cx - p.shift_x;
                const double v = y - cy - p.shift_y;
                sxd = cx + ca * u + sa * v;
                syd = cy - sa * u + ca * v;
            }
            int x0 = static_cast<int>(std::floor(sxd));
            int y0 = static_cast<int>(std::floor(syd));
            const double fx = sxd - x0;
            const double fy = syd - y0;
            const int x1 = std::clamp(x0 + 1, 0, img.w - 1);
            const int y1 = std::clamp(y0 + 1, 0, img.h - 1);
            x0 = std::clamp(x0, 0, img.w - 1);
            y0 = std::clamp(y0, 0, img.h - 1);
            const uint8_t* p00 = img.at(x0, y0);
            const uint8_t* p10 = img.at(x1, y0);
            const uint8_t* p01 = img.at(x0, y1);
            const uint8_t* p11 = img.at(x1, y1);
            uint8_t* q = out.at(x, y);
            for (int ch = 0; ch < 3; ++ch) {
                const double top = p00[ch] + fx * (p10[ch] - p00[ch]);
                const double bot = p01[ch] + fx * (p11[ch] - p01[ch]);
                double v = top + fy * (bot - top);
                v = (v - 128.0) * p.contrast + 128.0 + p.brightness;
                q[ch] = static_cast<uint8_t>(std::clamp<long>(
                    std::lround(v), 0, 255));
            }
        }
    }
    if (p.noise_sigma > 0.0) {
        for (uint8_t& v : out.px) {
            const double n = v + p.noise_sigma * rng.normal();
            v = static_cast<uint8_t>(std::clamp<long>(std::lround(n), 0, 255));
        }
    }
    return out;
}

void write_labels(const std::string& dir, const std::vector<DatasetEntry>& entries) {
    nlohmann::json j;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : entries) {
        j["entries"].push_back({{"file", e.file},
                                {"label", e.label},
                                {"band", band_name(e.band)},
                                {"kind", kind_name(e.kind)},
                                {"dx_mm", e.pose.dx_mm},
                                {"dy_mm", e.pose.dy_mm},
                                {"theta_deg", e.pose.theta_deg}});
    }
    std::ofstream f(fs::path(dir) / "labels.json", std::ios::trunc);
    require(static_cast<bool>(f), "write_labels: cannot open labels.json");
    f << j.dump(2) << "\n";
}

std::vector<DatasetEntry> read_labels(const std::string& dir) {
    std::ifstream f(fs::path(dir) / "labels.json");
    if (!f) throw DataError("read_labels: missing labels.json in " + dir);
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_discarded() || !j.contains("entries") || !j["entries"].is_array())
        throw DataError("read_labels: malformed labels.json in " + dir);
    std::vector<DatasetEntry> out;
    for (const auto& e : j["entries"]) {
        DatasetEntry d;
        d.file = e.at("file").get<std::string>();
        d.label = e.at("label").get<int>();
        if (d.label != kLabelFailure && d.label != kLabelSuccess)
            throw DataError("read_labels: label out of range for " + d.file);
        d.band = parse_band(e.at("band").get<std::string>());
        d.kind = parse_kind(e.at("kind").get<std::string>());
        d.pose.dx_mm = e.at("dx_mm").get<double>();
        d.pose.dy_mm = e.at("dy_mm").get<double>();
        d.pose.theta_deg = e.at("theta_deg").get<double>();
        out.push_back(std::move(d));
    }
    if (out.empty()) throw DataError("read_labels: empty dataset in " + dir);
    return out;
}

SynthStats synth_dataset(const std::string& dir, const SceneConfig& cfg,
                         uint64_t seed, int n_failure, int n_success) {
    cfg.validate();
    require(n_failure >= 0 && n_success >= 0 && n_failure + n_success > 0,
            "synth_dataset: nothing to generate");
    fs::create_directories(dir);
    const Band bands[3] = {Band::Small, Band::Medium, Band::Large};
    const Kind kinds[3] = {Kind::Rotation, Kind::Translation, Kind::Combined};
    std::vector<DatasetEntry> entries;
    entries.reserve(static_cast<size_t>(n_failure) + n_success);
    char name[32];
    for (int i = 0; i < n_failure; ++i) {
        DatasetEntry e;
        e.band = bands[i % 3];
        e.kind = kinds[(i / 3) % 3];
        e.label = kLabelFailure;
        e.pose = sample_pose_error(e.band, e.kind, rng_stream(seed, "fail_pose", i));
        require(!ground_truth_label(e.pose).seated,
                "synth_dataset: failure pose landed in the seated basin");
        const Image frame = render_scene(e.pose, cfg, rng_stream(seed, "fail_scene", i));
        std::snprintf(name, sizeof(name), "fail_%04d.ppm", i);
        e.file = name;
        write_ppm((fs::path(dir) / e.file).string(), crop_roi(frame, cfg));
        entries.push_back(std::move(e));
    }
    for (int i = 0; i < n_success; ++i) {
        DatasetEntry e;
        e.band = Band::Seated;
        e.kind = Kind::Combined;
        e.label = kLabelSuccess;
        e.pose = sample_pose_error(e.band, e.kind, rng_stream(seed, "succ_pose", i));
        require(ground_truth_label(e.pose).seated,
                "synth_dataset: success pose escaped the seated basin");
        const Image frame = render_scene(e.pose, cfg, rng_stream(seed, "succ_scene", i));
        std::snprintf(name, sizeof(name), "succ_%04d.ppm", i);
        e.file = name;
        write_ppm((fs::path(dir) / e.file).string(), crop_roi(frame, cfg));
        entries.push_back(std::move(e));
    }
    write_labels(dir, entries);
    return SynthStats{n_failure, n_success};
}

TrainingSet load_training_set(const std::string& dir, uint64_t seed,
                              const AugmentConfig& aug) {
    require(aug.mutations >= 1, "training set: need at least one mutation");
    TrainingSet ts;
    ts.seed = seed;
    ts.aug = aug;
    const auto entries = read_labels(dir);
    ts.bases.reserve(entries.size());
    ts.labels.reserve(entries.size());
    for (const auto& e : entries) {
        ts.bases.push_back(read_ppm((fs::path(dir) / e.file).string()));
        ts.labels.push_back(e.label);
    }
    const int n = static_cast<int>(ts.bases.size());
    require(n >= 2, "training set: too few bases to split");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(rng_stream(seed, "split"));
    rng.shuffle(order);
    const int n_train = std::max(1, (n * 8) / 10);
    require(n_train < n, "training set: validation split is empty");
    auto expand = [&](int lo, int hi, std::vector<std::pair<int, int>>& items) {
        for (int i = lo; i < hi; ++i)
            for (int k = 0; k < aug.mutations; ++k)
                items.emplace_back(order[static_cast<size_t>(i)], k);
    };
    expand(0, n_train, ts.train_items);
    expand(n_train, n, ts.val_items);
    // Split hygiene: a base index may appear on one side only.
    std::vector<uint8_t> side(static_cast<size_t>(n), 0);
    for (const auto& it : ts.train_items) side[static_cast<size_t>(it.first)] |= 1;
    for (const auto& it : ts.val_items) side[static_cast<size_t>(it.first)] |= 2;
    for (uint8_t s : side) require(s != 3, "training set: split leakage");
    return ts;
}

void materialize_batch(const TrainingSet& ts,
                       const std::vector<std::pair<int, int>>& items, size_t off,
                       size_t count, Tensor& x, std::vector<int>& y) {
    require(off + count <= items.size(), "materialize_batch: range overflow");
    const int side = ts.input_side;
    x = Tensor({static_cast<int>(count), 3, side, side});
    y.assign(count, 0);
    const size_t stride = static_cast<size_t>(3) * side * side;
    for (size_t j = 0; j < count; ++j) {
        const auto [b, k] = items[off + j];
        Rng rng(rng_stream(ts.seed, "augment", static_cast<uint64_t>(b),
                           static_cast<uint64_t>(k)));
        const AugmentParams p = sample_augment_params(rng, ts.aug);
        const Image aug = apply_augment(ts.bases[static_cast<size_t>(b)], p, rng);
        write_input_chw(aug, side, x.ptr() + j * stride);
        y[j] = ts.labels[static_cast<size_t>(b)];
    }
}

float predict_score(const CnnModel& m, const Image& frame, const SceneConfig& cfg) {
    const Tensor x = single_input(crop_roi(frame, cfg), m.in_hw);
    const Tensor logits = forward(m, x);
    Tensor probs;
    softmax_rows(logits, probs);
    return probs.data[static_cast<size_t>(kLabelSuccess)];
}

CnnVerdict cnn_classify(const CnnModel& m, const std::function<Image(int)>& frame_at,
                        int n, const SceneConfig& cfg, double threshold) {
    require(n >= 1, "cnn_classify: need at least one frame");
    std::vector<double> scores(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        scores[static_cast<size_t>(i)] = predict_score(m, frame_at(i), cfg);
    std::sort(scores.begin(), scores.end());
    CnnVerdict v;
    v.frames_used = n;
    if (n % 2 == 1) {
        v.median = scores[static_cast<size_t>(n / 2)];
    } else {
        v.median = 0.5 * (scores[static_cast<size_t>(n / 2 - 1)] +
                          scores[static_cast<size_t>(n / 2)]);
    }
    v.success = v.median > threshold;
    return v;
}

}  // namespace ashe
