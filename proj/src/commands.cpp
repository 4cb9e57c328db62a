#include "ashe/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ashe/errors.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace ashe {

namespace {

constexpr double kTransMm[3] = {1.2, 2.45, 9.5};
constexpr double kRotDeg[3] = {0.8, 1.75, 8.0};
constexpr double kLevelJitter = 0.02;
// Pure +x slide that stays above the overlap floor yet far outside the large
// band's lower edge; the micro detector has to catch it.
constexpr double kMissDx = 5.8;
constexpr double kMissTheta = 0.6;
constexpr int kMissTransLevel = 3;
constexpr int kMissRotLevel = 1;

Band ring_band(int r) {
    switch (r) {
        case 1: return Band::Small;
        case 2: return Band::Medium;
        default: return Band::Large;
    }
}

}  // namespace

double matrix_translation_mm(int level) {
    require(level >= 1 && level <= 3, "matrix: bad translation level");
    return kTransMm[level - 1];
}

double matrix_rotation_deg(int level) {
    require(level >= 1 && level <= 3, "matrix: bad rotation level");
    return kRotDeg[level - 1];
}

std::vector<MatrixCell> matrix_cells(uint64_t seed) {
    const int levels[6] = {-3, -2, -1, 1, 2, 3};
    std::vector<MatrixCell> cells;
    cells.reserve(37);
    for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
            MatrixCell c;
            c.index = a * 6 + b;
            c.trans_level = levels[a];
            c.rot_level = levels[b];
            const int ring = std::max(std::abs(c.trans_level), std::abs(c.rot_level));
            c.band = ring_band(ring);
            if (c.trans_level == kMissTransLevel && c.rot_level == kMissRotLevel) {
                c.designed_gm_miss = true;
                c.pose = PoseError{kMissDx, 0.0, kMissTheta};
            } else {
                Rng rng(rng_stream(seed, "matrix_cell",
                                   static_cast<uint64_t>(c.index)));
                // Axis-aligned slide: diagonal medium offsets would already
                // breach the overlap floor, which belongs to the large ring.
                const bool along_y = rng.bernoulli(0.5);
                const double tj = rng.uniform(1.0 - kLevelJitter, 1.0 + kLevelJitter);
                const double rj = rng.uniform(1.0 - kLevelJitter, 1.0 + kLevelJitter);
                const double t = matrix_translation_mm(std::abs(c.trans_level)) * tj *
                                 (c.trans_level > 0 ? 1.0 : -1.0);
                c.pose.dx_mm = along_y ? 0.0 : t;
                c.pose.dy_mm = along_y ? t : 0.0;
                c.pose.theta_deg = matrix_rotation_deg(std::abs(c.rot_level)) * rj *
                                   (c.rot_level > 0 ? 1.0 : -1.0);
            }
            c.pose.validate();
            cells.push_back(c);
        }
    }
    MatrixCell seated;
    seated.index = 36;
    seated.band = Band::Seated;
    seated.pose = PoseError{0.0, 0.0, 0.0};
    cells.push_back(seated);
    return cells;
}

OrientedRect compute_slot_reference(const RunConfig& cfg) {
    const GmConfig gm = make_gm_config(cfg);
    std::vector<Image> frames;
    frames.reserve(static_cast<size_t>(gm.frames));
    for (int i = 0; i < gm.frames; ++i)
        frames.push_back(render_empty(
            cfg.scene, rng_stream(cfg.seed, "slot_ref", static_cast<uint64_t>(i))));
    return detect_slot_reference(frames, gm);
}

MatrixReport run_matrix(const RunConfig& cfg, const CnnModel& model,
                        const OrientedRect& slot_ref, std::ostream* log) {
    const GmConfig gm = make_gm_config(cfg);
    MatrixReport rep;
    for (const MatrixCell& cell : matrix_cells(cfg.seed)) {
        std::vector<Image> frames;
        frames.reserve(static_cast<size_t>(gm.frames));
        for (int i = 0; i < gm.frames; ++i)
            frames.push_back(render_scene(
                cell.pose, cfg.scene,
                rng_stream(cfg.seed, "matrix_frames",
                           static_cast<uint64_t>(cell.index),
                           static_cast<uint64_t>(i))));
        MatrixRow row;
        row.cell = cell;
        row.seated_truth = ground_truth_label(cell.pose).seated;
        row.gm = gm_classify(slot_ref, frames, gm);
        const CnnVerdict cv = cnn_classify(
            model, [&](int i) { return frames[static_cast<size_t>(i)]; },
            gm.frames, cfg.scene, cfg.thresholds.score_min);
        row.cnn_median = cv.median;
        row.cnn_success = cv.success;
        if (log) {
            (*log) << "cell " << cell.index << " band " << band_name(cell.band)
                   << " overlap " << row.gm.overlap << " gm "
                   << (row.gm.success ? "success" : "failure") << " cnn_median "
                   << row.cnn_median << "\n";
            log->flush();
        }
        rep.rows.push_back(std::move(row));
    }

    for (const MatrixRow& r : rep.rows) {
        if (r.cell.band == Band::Seated) {
            rep.cnn_seated_correct = r.cnn_success;
            continue;
        }
        const bool gm_detected = !r.gm.success;
        if (r.cell.band == Band::Large) {
            rep.gm_large_detected += gm_detected ? 1 : 0;
        } else {
            rep.gm_small_medium_detected += gm_detected ? 1 : 0;
        }
        if (!r.cnn_success) ++rep.cnn_correct_error_cells;
        rep.cnn_min_error_confidence =
            std::min(rep.cnn_min_error_confidence, 1.0 - r.cnn_median);
    }
    return rep;
}

void write_matrix_csv(const std::string& path, const MatrixReport& rep) {
    FILE* f = std::fopen(path.c_str(), "w");
    require(f != nullptr, "matrix csv: cannot open output file");
    std::fprintf(f,
                 "cell,trans_level,rot_level,band,dx_mm,dy_mm,theta_deg,"
                 "gm_overlap,gm_rot_deg,gm_success,cnn_median,cnn_success,"
                 "seated_truth\n");
    for (const MatrixRow& r : rep.rows) {
        std::fprintf(f, "%d,%d,%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%.6f,%d,%d\n",
                     r.cell.index, r.cell.trans_level, r.cell.rot_level,
                     band_name(r.cell.band), r.cell.pose.dx_mm, r.cell.pose.dy_mm,
                     r.cell.pose.theta_deg, r.gm.overlap, r.gm.rot_mismatch_deg,
                     r.gm.success ? 1 : 0, r.cnn_median, r.cnn_success ? 1 : 0,
                     r.seated_truth ? 1 : 0);
    }
    std::fclose(f);
}

void write_matrix_summary(const std::string& path, const MatrixReport& rep) {
    nlohmann::json j;
    j["cells"] = static_cast<int>(rep.rows.size());
    j["gm_large_detected"] = rep.gm_large_detected;
    j["gm_large_total"] = 20;
    j["gm_small_medium_detected"] = rep.gm_small_medium_detected;
    j["gm_small_medium_total"] = 16;
    j["cnn_correct_error_cells"] = rep.cnn_correct_error_cells;
    j["cnn_error_total"] = 36;
    j["cnn_seated_correct"] = rep.cnn_seated_correct;
    j["cnn_min_error_confidence"] = rep.cnn_min_error_confidence;
    std::ofstream f(path, std::ios::trunc);
    require(static_cast<bool>(f), "matrix summary: cannot open output file");
    f << j.dump(2) << "\n";
}

int cmd_synth(const RunConfig& cfg, const std::string& out_dir,
              std::optional<int> failures, std::optional<int> successes,
              double scale) {
    if (!(scale > 0.0 && scale <= 1.0))
        throw ConfigError("synth: --scale must lie in (0,1]");
    const int n_fail =
        failures ? *failures : static_cast<int>(std::lround(996 * scale));
    const int n_succ =
        successes ? *successes : static_cast<int>(std::lround(994 * scale));
    if (n_fail < 0 || n_succ < 0)
        throw ConfigError("synth: counts must be nonnegative");
    const SynthStats st = synth_dataset(out_dir, cfg.scene, cfg.seed, n_fail, n_succ);

    nlohmann::json manifest;
    manifest["seed"] = cfg.seed;
    manifest["n_failure"] = st.failures;
    manifest["n_success"] = st.successes;
    manifest["config"] = nlohmann::json::parse(serialize_config(cfg));
    std::ofstream mf(fs::path(out_dir) / "manifest.json", std::ios::trunc);
    require(static_cast<bool>(mf), "synth: cannot write manifest");
    mf << manifest.dump(2) << "\n";

    std::printf("synth: wrote %d failure + %d success bases to %s\n",
                st.failures, st.successes, out_dir.c_str());
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_dir,
              const std::string& model_path) {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    const TrainingSet ts = load_training_set(data_dir, cfg.seed, cfg.augment);
    std::printf("train: %lld train / %lld val samples from %zu bases\n",
                static_cast<long long>(ts.train_count()),
                static_cast<long long>(ts.val_count()), ts.bases.size());
    CnnModel model = CnnModel::standard();
    model.init_he(cfg.seed);
    const TrainHistory hist = train_model(model, ts, tc, &std::cout);

    ModelMeta meta;
    meta.arch = model_arch_string(model);
    meta.arch_hash = model_arch_hash(model);
    meta.best_epoch = hist.best_epoch;
    meta.val_accuracy = hist.best_val_accuracy;
    meta.train_config_json = train_config_json(tc);
    if (const fs::path dir = fs::path(model_path).parent_path(); !dir.empty())
        fs::create_directories(dir);
    save_model(model_path, model, meta);

    nlohmann::json mj;
    mj["best_epoch"] = hist.best_epoch;
    mj["best_val_accuracy"] = hist.best_val_accuracy;
    mj["early_stopped"] = hist.early_stopped;
    mj["epochs"] = nlohmann::json::array();
    for (const EpochStats& e : hist.epochs)
        mj["epochs"].push_back({{"epoch", e.epoch},
                                {"train_loss", e.train_loss},
                                {"val_loss", e.val_loss},
                                {"val_accuracy", e.val_accuracy}});
    std::ofstream f(model_path + ".metrics.json", std::ios::trunc);
    require(static_cast<bool>(f), "train: cannot write metrics");
    f << mj.dump(2) << "\n";

    std::printf("train: best epoch %d val_accuracy %.4f -> %s\n",
                hist.best_epoch, hist.best_val_accuracy, model_path.c_str());
    return 0;
}

int cmd_matrix(const RunConfig& cfg, const std::string& model_path,
               const std::string& out_dir) {
    const CnnModel model = load_model(model_path);
    fs::create_directories(out_dir);
    std::printf("matrix: computing slot reference\n");
    const OrientedRect slot_ref = compute_slot_reference(cfg);
    const MatrixReport rep = run_matrix(cfg, model, slot_ref, &std::cout);
    write_matrix_csv((fs::path(out_dir) / "grid.csv").string(), rep);
    write_matrix_summary((fs::path(out_dir) / "matrix_summary.json").string(), rep);
    std::printf(
        "matrix: gm large %d/20, gm small+medium %d/16, cnn errors %d/36, "
        "seated %s\n",
        rep.gm_large_detected, rep.gm_small_medium_detected,
        rep.cnn_correct_error_cells, rep.cnn_seated_correct ? "ok" : "WRONG");
    return 0;
}

int cmd_detect(const RunConfig& cfg, const PoseError& pose, int frames,
               const std::string& model_path, bool use_cnn,
               const std::string& out_dir) {
    if (frames < 1) throw ConfigError("detect: --frames must be positive");
    RunConfig local = cfg;
    local.gm.frames = frames;
    const GmConfig gm = make_gm_config(local);
    const OrientedRect slot_ref = compute_slot_reference(local);
    std::vector<Image> imgs;
    imgs.reserve(static_cast<size_t>(frames));
    for (int i = 0; i < frames; ++i)
        imgs.push_back(render_scene(
            pose, cfg.scene,
            rng_stream(cfg.seed, "detect", static_cast<uint64_t>(i))));
    const GmVerdict gv = gm_classify(slot_ref, imgs, gm);

    nlohmann::json j;
    j["pose"] = {{"dx_mm", pose.dx_mm},
                 {"dy_mm", pose.dy_mm},
                 {"theta_deg", pose.theta_deg}};
    j["seated_truth"] = ground_truth_label(pose).seated;
    j["gm"] = {{"overlap", gv.overlap},
               {"rot_mismatch_deg", gv.rot_mismatch_deg},
               {"success", gv.success},
               {"frames_used", gv.frames_used},
               {"unstable", gv.unstable}};
    if (use_cnn) {
        const CnnModel model = load_model(model_path);
        const CnnVerdict cv = cnn_classify(
            model, [&](int i) { return imgs[static_cast<size_t>(i)]; }, frames,
            cfg.scene, cfg.thresholds.score_min);
        const FusionVerdict fv = fusion_decide(gv, cv.success, cv.median);
        j["cnn"] = {{"median", cv.median}, {"success", cv.success}};
        j["fused_success"] = fv.final_success;
    } else {
        j["cnn"] = nullptr;
        j["fused_success"] = nullptr;
    }
    const std::string text = j.dump(2) + "\n";
    std::fputs(text.c_str(), stdout);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream f(fs::path(out_dir) / "detect.json", std::ios::trunc);
        require(static_cast<bool>(f), "detect: cannot write verdict");
        f << text;
    }
    return 0;
}

int cmd_campaign(const RunConfig& cfg, const std::string& model_path,
                 const std::string& out_dir) {
    const CnnModel model = load_model(model_path);
    fs::create_directories(out_dir);
    const ReloadEnv env = make_reload_env(cfg);
    std::printf("campaign: computing slot reference\n");
    const OrientedRect slot_ref = compute_slot_reference(cfg);

    CampaignConfig cc;
    cc.n_trials = cfg.campaign.n_trials;
    cc.hotel_capacity = cfg.campaign.hotel_capacity;
    cc.seed = cfg.seed;
    for (const ForcedFailure& f : cfg.campaign.forced) cc.forced[f.trial] = f.pose;

    const CampaignReport rep = run_campaign(
        env, model, slot_ref, cc, (fs::path(out_dir) / "state.json").string());
    write_report_json((fs::path(out_dir) / "report.json").string(), rep);
    write_trials_csv((fs::path(out_dir) / "trials.csv").string(), rep);
    if (rep.accuracy_defined)
        std::printf(
            "campaign: %d trials, first_time_accuracy %.4f, detected %d, "
            "corrected_by_second %d, undetected %d\n",
            rep.n_trials, rep.first_time_accuracy, rep.detected_failures,
            rep.corrected_by_second, rep.undetected_misplacements);
    else
        std::printf("campaign: empty (no trials)\n");
    return 0;
}

int cmd_report(const std::string& in_dir) {
    std::ifstream f(fs::path(in_dir) / "report.json");
    if (!f) throw DataError("report: missing report.json in " + in_dir);
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_discarded()) throw DataError("report: malformed report.json");
    std::printf("trials:                    %d\n", j.value("n_trials", 0));
    if (j.contains("first_time_accuracy") && j["first_time_accuracy"].is_number())
        std::printf("first-time accuracy:       %.4f\n",
                    j["first_time_accuracy"].get<double>());
    else
        std::printf("first-time accuracy:       undefined (no trials)\n");
    std::printf("detected failures:         %d\n", j.value("detected_failures", 0));
    std::printf("corrected by 2nd attempt:  %d\n",
                j.value("corrected_by_second_attempt", 0));
    std::printf("undetected misplacements:  %d\n",
                j.value("undetected_misplacements", 0));
    std::printf("aborted trials:            %d\n", j.value("aborted", 0));
    std::printf("hotel: %d -> %d\n", j.value("hotel_initial", 0),
                j.value("hotel_final", 0));
    return 0;
}

}  // namespace ashe
