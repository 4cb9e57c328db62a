#pragma once

#include <string>
#include <vector>

#include "ashe/controller.hpp"
#include "ashe/dataset.hpp"
#include "ashe/gm.hpp"
#include "ashe/scene.hpp"
#include "ashe/train.hpp"

namespace ashe {

struct Thresholds {
    double overlap_min = 0.90;
    double score_min = 0.60;
    double rot_fail_deg = 5.0;

    bool operator==(const Thresholds&) const = default;
    void validate() const;
};

struct GmTuning {
    int frames = 100;
    double substrate_inflation_w_px = 0.0;
    double substrate_inflation_h_px = 0.0;
    double slot_inflation_px = 2.0;

    bool operator==(const GmTuning&) const = default;
    void validate() const;
};

struct ForcedFailure {
    int trial = 0;
    PoseError pose;

    bool operator==(const ForcedFailure&) const = default;
};

struct CampaignSection {
    int n_trials = 130;
    double p_gross = 0.015;
    double jitter_sigma_mm = 0.05;
    double jitter_sigma_deg = 0.05;
    int max_attempts = 3;
    int hotel_capacity = -1;  // -1: sized to n_trials * max_attempts
    std::vector<ForcedFailure> forced;

    bool operator==(const CampaignSection&) const = default;
    void validate() const;
};

struct Paths {
    std::string data_dir = "data";
    std::string model_path = "model.bin";
    std::string out_dir = "out";

    bool operator==(const Paths&) const = default;
    void validate() const;
};

// Whole-run configuration. Everything a command needs is derivable from this
// plus the master seed; serialization round-trips exactly.
struct RunConfig {
    uint64_t seed = 1;
    SceneConfig scene;
    TrainConfig train;
    AugmentConfig augment;
    Thresholds thresholds;
    GmTuning gm;
    CampaignSection campaign;
    Paths paths;

    bool operator==(const RunConfig&) const = default;
    void validate() const;
};

std::string serialize_config(const RunConfig& cfg);
RunConfig parse_config(const std::string& json_text);  // strict keys, defaults for absent sections
RunConfig load_config_file(const std::string& path);
void save_config_file(const std::string& path, const RunConfig& cfg);

// Detector/controller views of the run config.
GmConfig make_gm_config(const RunConfig& cfg);
ReloadEnv make_reload_env(const RunConfig& cfg);

}  // namespace ashe
