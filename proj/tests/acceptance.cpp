// Campaign-level acceptance harness. Each criterion prints one PASS/FAIL
// line; the process exits nonzero if any criterion fails. Slow stages write
// their artifacts under the work directory and are reused by later criteria;
// the determinism criterion reruns them into a second directory and compares
// bytes. Optional args: work directory, then criterion ids to restrict to.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ashe/cnn.hpp"
#include "ashe/commands.hpp"
#include "ashe/errors.hpp"
#include "ashe/gemm.hpp"
#include "ashe/geometry.hpp"
#include "ashe/gm.hpp"
#include "ashe/rng.hpp"
#include "ashe/scene.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace ashe;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    va_list ap;
    va_start(ap, f);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

uint64_t fnv1a(uint64_t h, const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

uint64_t hash_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("acceptance: cannot hash " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof(buf));
        h = fnv1a(h, buf, static_cast<size_t>(f.gcount()));
    }
    return h;
}

uint64_t hash_dir(const std::string& dir) {
    std::vector<std::string> rels;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file())
            rels.push_back(fs::relative(e.path(), dir).generic_string());
    std::sort(rels.begin(), rels.end());
    uint64_t h = 1469598103934665603ULL;
    for (const std::string& r : rels) {
        h = fnv1a(h, r.data(), r.size());
        const uint64_t fh = hash_file((fs::path(dir) / r).string());
        h = fnv1a(h, &fh, sizeof(fh));
    }
    return h;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("acceptance: missing " + path);
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_discarded()) throw DataError("acceptance: malformed " + path);
    return j;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("acceptance: missing " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

// Shared run parameters. Training settings are sized so the desk-scale net
// converges within the epoch budget on one core.
RunConfig base_config() {
    RunConfig cfg;
    cfg.seed = 1;
    cfg.train.batch_size = 32;
    cfg.train.lr = 1e-3;
    cfg.train.max_epochs = 3;
    cfg.train.patience = 3;
    return cfg;
}

// Forced large-band poses for the correction criterion. All sit well past the
// overlap floor or the rotation screen, so the macro detector must flag every
// one on the first attempt.
const std::vector<PoseError>& forced_failures() {
    static const std::vector<PoseError> poses = {
        {0.0, 7.5, 0.0},  {0.0, -8.0, 0.0}, {9.5, 0.0, 0.0},  {-10.0, 0.0, 0.0},
        {0.0, 6.5, 3.0},  {0.0, -7.0, -2.0}, {8.5, 0.0, 2.0},  {-9.0, 0.0, -1.5},
        {0.0, 0.0, 8.0},  {0.0, 0.0, -7.0}};
    return poses;
}

struct Workspace {
    std::string root;
    std::string data() const { return root + "/data"; }
    std::string data_rerun() const { return root + "/data_rerun"; }
    std::string run(int n) const { return root + "/run" + std::to_string(n); }
    std::string model(int n) const { return run(n) + "/model.bin"; }
};

void synth_into(const std::string& dir) {
    const RunConfig cfg = base_config();
    if (fs::exists(fs::path(dir) / "manifest.json")) {
        const nlohmann::json m = read_json((fs::path(dir) / "manifest.json").string());
        if (m.value("n_failure", 0) >= 400 && m.value("n_success", 0) >= 400 &&
            m.value("seed", uint64_t{0}) == cfg.seed)
            return;
    }
    fs::remove_all(dir);
    fs::create_directories(dir);
    if (cmd_synth(cfg, dir, 400, 400, 1.0) != 0)
        throw DataError("acceptance: synth failed");
}

void train_into(const Workspace& ws, int run_n, const std::string& data_dir) {
    fs::create_directories(ws.run(run_n));
    const RunConfig cfg = base_config();
    if (cmd_train(cfg, data_dir, ws.model(run_n)) != 0)
        throw DataError("acceptance: training failed");
}

void matrix_into(const Workspace& ws, int run_n) {
    const RunConfig cfg = base_config();
    if (cmd_matrix(cfg, ws.model(run_n), ws.run(run_n) + "/matrix") != 0)
        throw DataError("acceptance: matrix run failed");
}

void forced_into(const Workspace& ws, int run_n) {
    RunConfig cfg = base_config();
    cfg.campaign.n_trials = 10;
    cfg.campaign.p_gross = 0.0;
    const auto& poses = forced_failures();
    for (int t = 0; t < 10; ++t) {
        ForcedFailure f;
        f.trial = t;
        f.pose = poses[static_cast<size_t>(t)];
        cfg.campaign.forced.push_back(f);
    }
    if (cmd_campaign(cfg, ws.model(run_n), ws.run(run_n) + "/forced") != 0)
        throw DataError("acceptance: forced campaign failed");
}

void campaign_into(const Workspace& ws, int run_n) {
    const RunConfig cfg = base_config();
    if (cmd_campaign(cfg, ws.model(run_n), ws.run(run_n) + "/campaign") != 0)
        throw DataError("acceptance: campaign failed");
}

// --- criterion 1: fusion truth table ---------------------------------------

Outcome criterion_fusion(Workspace&) {
    GmVerdict gm;
    for (const bool g : {false, true}) {
        for (const bool c : {false, true}) {
            gm.success = g;
            const FusionVerdict v = fusion_decide(gm, c, c ? 0.9 : 0.1);
            if (v.final_success != (g && c))
                return {false, fmt("gm=%d cnn=%d fused=%d", g, c, v.final_success)};
        }
    }
    return {true, "4/4 combinations match the conjunction rule"};
}

// --- criterion 2: overlap vs Monte-Carlo oracle -----------------------------

double mc_overlap(const OrientedRect& a, const OrientedRect& b, int n, Rng& rng) {
    const double cb = std::cos(deg2rad(b.angle_deg));
    const double sb = std::sin(deg2rad(b.angle_deg));
    const double ca = std::cos(deg2rad(a.angle_deg));
    const double sa = std::sin(deg2rad(a.angle_deg));
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform(-0.5, 0.5) * b.w;
        const double v = rng.uniform(-0.5, 0.5) * b.h;
        const double wx = b.cx + cb * u - sb * v;
        const double wy = b.cy + sb * u + cb * v;
        const double dx = wx - a.cx;
        const double dy = wy - a.cy;
        const double ax = ca * dx + sa * dy;
        const double ay = -sa * dx + ca * dy;
        if (std::abs(ax) <= a.w * 0.5 && std::abs(ay) <= a.h * 0.5) ++hits;
    }
    return static_cast<double>(hits) / n;
}

Outcome criterion_overlap_oracle(Workspace&) {
    Rng rng(2024);
    double worst = 0.0;
    for (int k = 0; k < 500; ++k) {
        OrientedRect a;
        a.w = rng.uniform(50.0, 300.0);
        a.h = rng.uniform(50.0, 300.0);
        a.angle_deg = rng.uniform(-30.0, 30.0);
        OrientedRect b;
        b.w = rng.uniform(50.0, 300.0);
        b.h = rng.uniform(50.0, 300.0);
        b.angle_deg = rng.uniform(-30.0, 30.0);
        a.cx = rng.uniform(-0.3, 0.3) * b.w;
        a.cy = rng.uniform(-0.3, 0.3) * b.h;
        const double exact = overlap_fraction(a, b);
        const double mc = mc_overlap(a, b, 1'000'000, rng);
        worst = std::max(worst, std::abs(exact - mc));
    }

    const OrientedRect sq{0.0, 0.0, 100.0, 100.0, 0.0};
    const OrientedRect sq45{0.0, 0.0, 100.0, 100.0, 45.0};
    const double rot = overlap_fraction(sq45, sq);
    const double want = 2.0 * (std::sqrt(2.0) - 1.0);

    const bool pass = worst <= 0.002 && std::abs(rot - want) <= 0.001;
    return {pass, fmt("max |analytic-mc| %.5f over 500 pairs; rotated square "
                      "%.6f (expect %.6f)",
                      worst, rot, want)};
}

// --- criterion 3: analytic gradients vs finite differences ------------------

Outcome criterion_gradients(Workspace&) {
    ModelT<double> m = ModelT<double>::reduced();
    m.init_he(7);
    TensorT<double> x({2, m.in_ch, m.in_hw, m.in_hw});
    Rng xr(99);
    for (auto& v : x.data) v = xr.uniform(-1.0, 1.0);
    const std::vector<int> labels = {0, 1};
    const std::vector<double> weights = {1.0, 1.5};

    Rng drop_rng(1);
    CacheT<double> cache;
    forward(m, x, true, 0.0, &drop_rng, &cache);
    double loss0 = 0.0;
    GradsT<double> g = backward(m, cache, labels, weights, &loss0);

    auto loss_at = [&]() {
        Rng r(1);
        const TensorT<double> logits = forward(m, x, true, 0.0, &r);
        return weighted_cross_entropy(logits, labels, weights);
    };

    const double h = 1e-4;
    auto mp = m.params();
    auto gp = g.params();
    double worst = 0.0;
    long checked = 0;
    for (size_t pi = 0; pi < mp.size(); ++pi) {
        for (size_t i = 0; i < mp[pi]->data.size(); ++i) {
            const double orig = mp[pi]->data[i];
            mp[pi]->data[i] = orig + h;
            const double lp = loss_at();
            mp[pi]->data[i] = orig - h;
            const double lm = loss_at();
            mp[pi]->data[i] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = gp[pi]->data[i];
            worst = std::max(worst, std::abs(an - fd) /
                                        std::max({std::abs(an), std::abs(fd), 1e-6}));
            ++checked;
        }
    }
    const bool pass = worst <= 1e-3 && checked == m.param_count() && loss0 > 0.0;
    return {pass, fmt("max relative error %.2e over %ld parameters", worst, checked)};
}

// --- criterion 4: zero-noise pose round-trip --------------------------------

Outcome criterion_round_trip(Workspace&) {
    SceneConfig scene;
    scene.sensor_noise_sigma = 0.0;
    const GmConfig cfg = GmConfig::from_scene(scene);

    double worst_px = 0.0, worst_deg = 0.0;
    for (int i = 0; i < 9; ++i) {
        for (int j = 0; j < 9; ++j) {
            PoseError pose;
            pose.dx_mm = (i - 4) * 0.8;
            pose.dy_mm = (j - 4) * 0.55;
            pose.theta_deg = (((i + j) % 9) - 4) * 0.5;

            const Image frame = render_scene(pose, scene, 0);
            const auto quad = detect_substrate_quad(frame, cfg);
            if (!quad)
                return {false, fmt("no detection at (%.2f, %.2f, %.2f)",
                                   pose.dx_mm, pose.dy_mm, pose.theta_deg)};
            int kept = 0;
            OrientedRect got =
                aggregate_detections({*quad}, cfg.substrate_detect_nominal_px(),
                                     cfg.size_tol, &kept);
            got.w -= cfg.substrate_inflation_w_px;
            got.h -= cfg.substrate_inflation_h_px;
            const OrientedRect want = substrate_footprint_px(pose, scene);
            worst_px = std::max({worst_px, std::abs(got.cx - want.cx),
                                 std::abs(got.cy - want.cy)});
            worst_deg = std::max(worst_deg, rotation_mismatch(got, want));
        }
    }
    const bool pass = worst_px <= 1.0 && worst_deg <= 0.5;
    return {pass, fmt("81 poses: worst center error %.3f px, worst rotation "
                      "%.3f deg",
                      worst_px, worst_deg)};
}

// --- criterion 5: desk-scale training ---------------------------------------

Outcome criterion_training(Workspace& ws) {
    synth_into(ws.data());
    const auto t0 = std::chrono::steady_clock::now();
    train_into(ws, 1, ws.data());
    const double mins =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count() /
        60.0;

    const nlohmann::json m = read_json(ws.model(1) + ".metrics.json");
    const double acc = m.at("best_val_accuracy").get<double>();
    const auto epochs = m.at("epochs").size();
    const bool pass = acc >= 0.97 && epochs <= 50;
    return {pass, fmt("val accuracy %.4f after %zu epochs (%.1f min)", acc,
                      epochs, mins)};
}

// --- criterion 6: placement-error matrix ------------------------------------

Outcome criterion_matrix(Workspace& ws) {
    matrix_into(ws, 1);
    const nlohmann::json s =
        read_json(ws.run(1) + "/matrix/matrix_summary.json");
    const int large = s.at("gm_large_detected").get<int>();
    const int small_med = s.at("gm_small_medium_detected").get<int>();
    const int cnn_err = s.at("cnn_correct_error_cells").get<int>();
    const bool seated_ok = s.at("cnn_seated_correct").get<bool>();
    const bool pass =
        large >= 18 && small_med <= 2 && cnn_err >= 35 && seated_ok;
    return {pass, fmt("gm large %d/20 (need >=18), gm small+medium %d/16 "
                      "(need <=2), cnn %d/36 (need >=35), seated %s",
                      large, small_med, cnn_err, seated_ok ? "ok" : "wrong")};
}

// --- criterion 7: forced-failure correction ---------------------------------

Outcome criterion_forced(Workspace& ws) {
    forced_into(ws, 1);
    const nlohmann::json r = read_json(ws.run(1) + "/forced/report.json");
    const int detected = r.at("detected_failures").get<int>();
    const int corrected = r.at("corrected_by_second_attempt").get<int>();
    const int first = r.at("first_time_success").get<int>();
    const int undetected = r.at("undetected_misplacements").get<int>();
    bool trials_ok = r.at("trials").size() == 10;
    for (const auto& t : r.at("trials")) {
        if (t.at("attempts_used").get<int>() != 2 ||
            !t.at("final_success").get<bool>() || !t.at("corrected").get<bool>())
            trials_ok = false;
    }
    const bool pass = detected == 10 && corrected == 10 && first == 0 &&
                      undetected == 0 && trials_ok;
    return {pass, fmt("detected %d/10 on attempt 1, corrected %d/10 on "
                      "attempt 2, undetected %d",
                      detected, corrected, undetected)};
}

// --- criterion 8: repeatability campaign ------------------------------------

Outcome criterion_campaign(Workspace& ws) {
    campaign_into(ws, 1);
    const nlohmann::json r = read_json(ws.run(1) + "/campaign/report.json");
    const double acc = r.at("first_time_accuracy").get<double>();
    const int undetected = r.at("undetected_misplacements").get<int>();
    const int aborted = r.at("aborted").get<int>();

    // Every trial must end seated by its second attempt, and no attempt may
    // fuse success on an unseated pose.
    const auto rows = read_csv(ws.run(1) + "/campaign/trials.csv");
    std::map<int, std::pair<int, bool>> last;  // trial -> (attempt, seated&&fused)
    bool false_positive = false;
    for (size_t i = 1; i < rows.size(); ++i) {
        const int trial = std::stoi(rows[i][0]);
        const int attempt = std::stoi(rows[i][1]);
        const bool seated = rows[i][5] == "1";
        const bool fused = rows[i][9] == "1";
        if (fused && !seated) false_positive = true;
        last[trial] = {attempt, fused && seated};
    }
    bool all_seated_by_2 = static_cast<int>(last.size()) == 130;
    for (const auto& [trial, fin] : last)
        if (fin.first > 2 || !fin.second) all_seated_by_2 = false;

    const bool pass = acc >= 0.95 && undetected == 0 && aborted == 0 &&
                      !false_positive && all_seated_by_2;
    return {pass, fmt("first-time accuracy %.4f over 130 trials (need "
                      ">=0.95), undetected %d, all seated by attempt 2: %s",
                      acc, undetected, all_seated_by_2 ? "yes" : "NO")};
}

// --- criterion 9: byte-identical reruns -------------------------------------

Outcome criterion_determinism(Workspace& ws) {
    synth_into(ws.data_rerun());
    train_into(ws, 2, ws.data_rerun());
    matrix_into(ws, 2);
    forced_into(ws, 2);
    campaign_into(ws, 2);

    std::vector<std::string> mismatches;
    if (hash_dir(ws.data()) != hash_dir(ws.data_rerun()))
        mismatches.push_back("dataset");
    const std::vector<std::string> files = {
        "/model.bin",
        "/model.bin.json",
        "/model.bin.metrics.json",
        "/matrix/grid.csv",
        "/matrix/matrix_summary.json",
        "/forced/report.json",
        "/forced/trials.csv",
        "/campaign/report.json",
        "/campaign/trials.csv",
    };
    for (const std::string& f : files)
        if (hash_file(ws.run(1) + f) != hash_file(ws.run(2) + f))
            mismatches.push_back(f);

    if (mismatches.empty())
        return {true, fmt("dataset + %zu report files byte-identical across "
                          "reruns",
                          files.size())};
    std::string d = "mismatched:";
    for (const std::string& m : mismatches) d += " " + m;
    return {false, d};
}

// --- criterion 10: dispenser model check ------------------------------------

Outcome criterion_dispenser(Workspace&) {
    const DispenserPhase phases[] = {
        DispenserPhase::Idle, DispenserPhase::HorizontalExtended,
        DispenserPhase::VerticalBlocking, DispenserPhase::HorizontalRetracted,
        DispenserPhase::Ready};
    const DispenserEvent events[] = {
        DispenserEvent::CommandDispense, DispenserEvent::HlimitPressed,
        DispenserEvent::VlimitExtended, DispenserEvent::HretractDone,
        DispenserEvent::VretractDone};

    std::vector<std::pair<DispenserPhase, DispenserPhase>> transitions;
    for (const DispenserPhase p : phases) {
        for (const DispenserEvent e : events) {
            try {
                transitions.emplace_back(p, dispenser_step({p, 10}, e).phase);
            } catch (const ContractError&) {
            }
        }
    }
    if (transitions.size() != 5)
        return {false, fmt("%zu legal transitions, expected 5", transitions.size())};

    std::set<DispenserPhase> reachable{DispenserPhase::Idle};
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& [from, to] : transitions) {
            if (reachable.count(from) && !reachable.count(to)) {
                reachable.insert(to);
                grew = true;
            }
        }
    }
    if (reachable.size() != 5)
        return {false, fmt("only %zu phases reachable", reachable.size())};

    for (const DispenserPhase p : reachable) {
        const DispenserPose q = dispenser_pose(p);
        if (q.substrate_forward && !q.vertical_extended && !q.horizontal_extended)
            return {false, fmt("phase %s leaves a forward substrate unguarded",
                               phase_name(p))};
    }
    for (const auto& [from, to] : transitions) {
        const DispenserPose a = dispenser_pose(from);
        const DispenserPose b = dispenser_pose(to);
        if (a.horizontal_extended && !b.horizontal_extended &&
            b.substrate_forward && !(a.vertical_extended && b.vertical_extended))
            return {false, fmt("retraction %s -> %s without the blocker",
                               phase_name(from), phase_name(to))};
    }

    bool empty_rejected = false;
    try {
        dispenser_step({DispenserPhase::Idle, 0}, DispenserEvent::CommandDispense);
    } catch (const DataError&) {
        empty_rejected = true;
    }
    if (!empty_rejected) return {false, "empty hotel dispense not rejected"};

    return {true, "5 reachable phases, 5 transitions, reentry-blocking "
                  "invariant holds, empty hotel rejected"};
}

struct Criterion {
    int id;
    const char* name;
    double bound_s;  // <= 0: no wall-time gate
    Outcome (*fn)(Workspace&);
};

const Criterion kCriteria[] = {
    {1, "fusion truth table", 1.0, criterion_fusion},
    {2, "overlap vs monte-carlo oracle", 60.0, criterion_overlap_oracle},
    {3, "gradient check", 60.0, criterion_gradients},
    {4, "zero-noise pose round-trip", 120.0, criterion_round_trip},
    {5, "desk-scale training", 0.0, criterion_training},
    {6, "placement-error matrix", 600.0, criterion_matrix},
    {7, "forced-failure correction", 600.0, criterion_forced},
    {8, "repeatability campaign", 2700.0, criterion_campaign},
    {9, "byte-identical reruns", 0.0, criterion_determinism},
    {10, "dispenser model check", 1.0, criterion_dispenser},
};

}  // namespace

int main(int argc, char** argv) {
    set_blas_threads(1);
    Workspace ws;
    ws.root = argc > 1 ? argv[1] : "acceptance_work";
    std::set<int> only;
    for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));
    fs::create_directories(ws.root);

    int passed = 0, ran = 0;
    for (const Criterion& c : kCriteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        ++ran;
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            out = c.fn(ws);
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (c.bound_s > 0.0 && secs > c.bound_s) {
            out.pass = false;
            out.detail += fmt(" [exceeded %.0f s budget]", c.bound_s);
        }
        if (out.pass) ++passed;
        std::printf("criterion %2d %s %8.1fs  %s: %s\n", c.id,
                    out.pass ? "PASS" : "FAIL", secs, c.name, out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/%d criteria passed\n", passed, ran);
    return passed == ran ? 0 : 1;
}
