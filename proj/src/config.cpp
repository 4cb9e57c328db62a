#include "ashe/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "ashe/errors.hpp"
#include "json.hpp"

namespace ashe {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* section) {
    if (!j.is_object())
        throw ConfigError(std::string("config: ") + section + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigError(std::string("config: unknown key '") + it.key() +
                              "' in " + section);
    }
}

template <typename T>
void read_if(const json& j, const char* key, T& dst, const char* section) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(dst);
    } catch (const json::exception&) {
        throw ConfigError(std::string("config: bad value for ") + section + "." +
                          key);
    }
}

void read_u8(const json& j, const char* key, uint8_t& dst, const char* section) {
    if (!j.contains(key)) return;
    int v = dst;
    read_if(j, key, v, section);
    if (v < 0 || v > 255)
        throw ConfigError(std::string("config: ") + section + "." + key +
                          " must lie in [0,255]");
    dst = static_cast<uint8_t>(v);
}

json scene_to_json(const SceneConfig& s) {
    json j;
    j["frame_w"] = s.frame_w;
    j["frame_h"] = s.frame_h;
    j["mm_per_px"] = s.mm_per_px;
    j["slot_cx_px"] = s.slot_cx_px;
    j["slot_cy_px"] = s.slot_cy_px;
    j["substrate_short_mm"] = s.substrate_short_mm;
    j["substrate_long_mm"] = s.substrate_long_mm;
    j["glow_r"] = static_cast<int>(s.glow_r);
    j["glow_g"] = static_cast<int>(s.glow_g);
    j["glow_b"] = static_cast<int>(s.glow_b);
    j["glow_width_px"] = s.glow_width_px;
    j["glow_near_factor"] = s.glow_near_factor;
    j["sensor_noise_sigma"] = s.sensor_noise_sigma;
    j["background_level"] = s.background_level;
    j["slot_line_contrast"] = s.slot_line_contrast;
    j["slot_line_thickness_px"] = s.slot_line_thickness_px;
    j["roi_x"] = s.roi_x;
    j["roi_y"] = s.roi_y;
    j["roi_w"] = s.roi_w;
    j["roi_h"] = s.roi_h;
    return j;
}

SceneConfig scene_from_json(const json& j) {
    SceneConfig s;
    check_keys(j,
               {"frame_w", "frame_h", "mm_per_px", "slot_cx_px", "slot_cy_px",
                "substrate_short_mm", "substrate_long_mm", "glow_r", "glow_g",
                "glow_b", "glow_width_px", "glow_near_factor",
                "sensor_noise_sigma", "background_level", "slot_line_contrast",
                "slot_line_thickness_px", "roi_x", "roi_y", "roi_w", "roi_h"},
               "scene");
    read_if(j, "frame_w", s.frame_w, "scene");
    read_if(j, "frame_h", s.frame_h, "scene");
    read_if(j, "mm_per_px", s.mm_per_px, "scene");
    read_if(j, "slot_cx_px", s.slot_cx_px, "scene");
    read_if(j, "slot_cy_px", s.slot_cy_px, "scene");
    read_if(j, "substrate_short_mm", s.substrate_short_mm, "scene");
    read_if(j, "substrate_long_mm", s.substrate_long_mm, "scene");
    read_u8(j, "glow_r", s.glow_r, "scene");
    read_u8(j, "glow_g", s.glow_g, "scene");
    read_u8(j, "glow_b", s.glow_b, "scene");
    read_if(j, "glow_width_px", s.glow_width_px, "scene");
    read_if(j, "glow_near_factor", s.glow_near_factor, "scene");
    read_if(j, "sensor_noise_sigma", s.sensor_noise_sigma, "scene");
    read_if(j, "background_level", s.background_level, "scene");
    read_if(j, "slot_line_contrast", s.slot_line_contrast, "scene");
    read_if(j, "slot_line_thickness_px", s.slot_line_thickness_px, "scene");
    read_if(j, "roi_x", s.roi_x, "scene");
    read_if(j, "roi_y", s.roi_y, "scene");
    read_if(j, "roi_w", s.roi_w, "scene");
    read_if(j, "roi_h", s.roi_h, "scene");
    return s;
}

json train_to_json(const TrainConfig& t) {
    json j;
    j["batch_size"] = t.batch_size;
    j["max_epochs"] = t.max_epochs;
    j["patience"] = t.patience;
    j["lr"] = t.lr;
    j["beta1"] = t.beta1;
    j["beta2"] = t.beta2;
    j["eps"] = t.eps;
    j["dropout"] = t.dropout;
    j["seed"] = t.seed;
    return j;
}

TrainConfig train_from_json(const json& j) {
    TrainConfig t;
    check_keys(j,
               {"batch_size", "max_epochs", "patience", "lr", "beta1", "beta2",
                "eps", "dropout", "seed"},
               "train");
    read_if(j, "batch_size", t.batch_size, "train");
    read_if(j, "max_epochs", t.max_epochs, "train");
    read_if(j, "patience", t.patience, "train");
    read_if(j, "lr", t.lr, "train");
    read_if(j, "beta1", t.beta1, "train");
    read_if(j, "beta2", t.beta2, "train");
    read_if(j, "eps", t.eps, "train");
    read_if(j, "dropout", t.dropout, "train");
    read_if(j, "seed", t.seed, "train");
    return t;
}

json augment_to_json(const AugmentConfig& a) {
    json j;
    j["shift_px"] = a.shift_px;
    j["rot_deg"] = a.rot_deg;
    j["zoom_frac"] = a.zoom_frac;
    j["brightness"] = a.brightness;
    j["contrast_frac"] = a.contrast_frac;
    j["noise_sigma_max"] = a.noise_sigma_max;
    j["mutations"] = a.mutations;
    return j;
}

AugmentConfig augment_from_json(const json& j) {
    AugmentConfig a;
    check_keys(j,
               {"shift_px", "rot_deg", "zoom_frac", "brightness", "contrast_frac",
                "noise_sigma_max", "mutations"},
               "augment");
    read_if(j, "shift_px", a.shift_px, "augment");
    read_if(j, "rot_deg", a.rot_deg, "augment");
    read_if(j, "zoom_frac", a.zoom_frac, "augment");
    read_if(j, "brightness", a.brightness, "augment");
    read_if(j, "contrast_frac", a.contrast_frac, "augment");
    read_if(j, "noise_sigma_max", a.noise_sigma_max, "augment");
    read_if(j, "mutations", a.mutations, "augment");
    return a;
}

}  // namespace

void Thresholds::validate() const {
    if (!(overlap_min >= 0.0 && overlap_min <= 1.0))
        throw ConfigError("config: thresholds.overlap_min must lie in [0,1]");
    if (!(score_min >= 0.0 && score_min <= 1.0))
        throw ConfigError("config: thresholds.score_min must lie in [0,1]");
    if (!(rot_fail_deg > 0.0 && rot_fail_deg <= 45.0))
        throw ConfigError("config: thresholds.rot_fail_deg must lie in (0,45]");
}

void GmTuning::validate() const {
    if (frames < 1) throw ConfigError("config: gm.frames must be positive");
    if (substrate_inflation_w_px < 0.0 || substrate_inflation_h_px < 0.0 ||
        slot_inflation_px < 0.0)
        throw ConfigError("config: gm inflation offsets must be nonnegative");
}

void CampaignSection::validate() const {
    if (n_trials < 0) throw ConfigError("config: campaign.n_trials must be >= 0");
    if (!(p_gross >= 0.0 && p_gross <= 1.0))
        throw ConfigError("config: campaign.p_gross must lie in [0,1]");
    if (jitter_sigma_mm < 0.0 || jitter_sigma_deg < 0.0)
        throw ConfigError("config: campaign jitter sigmas must be nonnegative");
    if (max_attempts < 1)
        throw ConfigError("config: campaign.max_attempts must be positive");
    if (hotel_capacity < -1)
        throw ConfigError("config: campaign.hotel_capacity must be -1 or >= 0");
    for (const auto& f : forced) {
        if (f.trial < 0 || f.trial >= n_trials)
            throw ConfigError("config: forced trial index out of range");
        try {
            f.pose.validate();
        } catch (const ContractError& e) {
            throw ConfigError(std::string("config: forced pose invalid: ") +
                              e.what());
        }
    }
}

void Paths::validate() const {
    if (data_dir.empty() || model_path.empty() || out_dir.empty())
        throw ConfigError("config: paths must be nonempty");
}

void RunConfig::validate() const {
    scene.validate();
    train.validate();
    if (augment.shift_px < 0.0 || augment.rot_deg < 0.0 ||
        augment.brightness < 0.0 || augment.noise_sigma_max < 0.0)
        throw ConfigError("config: augment ranges must be nonnegative");
    if (!(augment.zoom_frac >= 0.0 && augment.zoom_frac < 1.0))
        throw ConfigError("config: augment.zoom_frac must lie in [0,1)");
    if (!(augment.contrast_frac >= 0.0 && augment.contrast_frac < 1.0))
        throw ConfigError("config: augment.contrast_frac must lie in [0,1)");
    if (augment.mutations < 1)
        throw ConfigError("config: augment.mutations must be positive");
    thresholds.validate();
    gm.validate();
    campaign.validate();
    paths.validate();
}

std::string serialize_config(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["scene"] = scene_to_json(cfg.scene);
    j["train"] = train_to_json(cfg.train);
    j["augment"] = augment_to_json(cfg.augment);
    j["thresholds"] = {{"overlap_min", cfg.thresholds.overlap_min},
                       {"score_min", cfg.thresholds.score_min},
                       {"rot_fail_deg", cfg.thresholds.rot_fail_deg}};
    j["gm"] = {{"frames", cfg.gm.frames},
               {"substrate_inflation_w_px", cfg.gm.substrate_inflation_w_px},
               {"substrate_inflation_h_px", cfg.gm.substrate_inflation_h_px},
               {"slot_inflation_px", cfg.gm.slot_inflation_px}};
    json forced = json::array();
    for (const auto& f : cfg.campaign.forced)
        forced.push_back({{"trial", f.trial},
                          {"dx_mm", f.pose.dx_mm},
                          {"dy_mm", f.pose.dy_mm},
                          {"theta_deg", f.pose.theta_deg}});
    j["campaign"] = {{"n_trials", cfg.campaign.n_trials},
                     {"p_gross", cfg.campaign.p_gross},
                     {"jitter_sigma_mm", cfg.campaign.jitter_sigma_mm},
                     {"jitter_sigma_deg", cfg.campaign.jitter_sigma_deg},
                     {"max_attempts", cfg.campaign.max_attempts},
                     {"hotel_capacity", cfg.campaign.hotel_capacity},
                     {"forced", forced}};
    j["paths"] = {{"data_dir", cfg.paths.data_dir},
                  {"model_path", cfg.paths.model_path},
                  {"out_dir", cfg.paths.out_dir}};
    return j.dump(2) + "\n";
}

RunConfig parse_config(const std::string& json_text) {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: malformed JSON");
    check_keys(j,
               {"seed", "scene", "train", "augment", "thresholds", "gm",
                "campaign", "paths"},
               "config");
    RunConfig cfg;
    read_if(j, "seed", cfg.seed, "config");
    if (j.contains("scene")) cfg.scene = scene_from_json(j["scene"]);
    if (j.contains("train")) cfg.train = train_from_json(j["train"]);
    if (j.contains("augment")) cfg.augment = augment_from_json(j["augment"]);
    if (j.contains("thresholds")) {
        const json& t = j["thresholds"];
        check_keys(t, {"overlap_min", "score_min", "rot_fail_deg"}, "thresholds");
        read_if(t, "overlap_min", cfg.thresholds.overlap_min, "thresholds");
        read_if(t, "score_min", cfg.thresholds.score_min, "thresholds");
        read_if(t, "rot_fail_deg", cfg.thresholds.rot_fail_deg, "thresholds");
    }
    if (j.contains("gm")) {
        const json& g = j["gm"];
        check_keys(g,
                   {"frames", "substrate_inflation_w_px", "substrate_inflation_h_px",
                    "slot_inflation_px"},
                   "gm");
        read_if(g, "frames", cfg.gm.frames, "gm");
        read_if(g, "substrate_inflation_w_px", cfg.gm.substrate_inflation_w_px,
                "gm");
        read_if(g, "substrate_inflation_h_px", cfg.gm.substrate_inflation_h_px,
                "gm");
        read_if(g, "slot_inflation_px", cfg.gm.slot_inflation_px, "gm");
    }
    if (j.contains("campaign")) {
        const json& c = j["campaign"];
        check_keys(c,
                   {"n_trials", "p_gross", "jitter_sigma_mm", "jitter_sigma_deg",
                    "max_attempts", "hotel_capacity", "forced"},
                   "campaign");
        read_if(c, "n_trials", cfg.campaign.n_trials, "campaign");
        read_if(c, "p_gross", cfg.campaign.p_gross, "campaign");
        read_if(c, "jitter_sigma_mm", cfg.campaign.jitter_sigma_mm, "campaign");
        read_if(c, "jitter_sigma_deg", cfg.campaign.jitter_sigma_deg, "campaign");
        read_if(c, "max_attempts", cfg.campaign.max_attempts, "campaign");
        read_if(c, "hotel_capacity", cfg.campaign.hotel_capacity, "campaign");
        if (c.contains("forced")) {
            if (!c["forced"].is_array())
                throw ConfigError("config: campaign.forced must be an array");
            for (const json& fj : c["forced"]) {
                check_keys(fj, {"trial", "dx_mm", "dy_mm", "theta_deg"},
                           "campaign.forced[]");
                ForcedFailure f;
                read_if(fj, "trial", f.trial, "campaign.forced[]");
                read_if(fj, "dx_mm", f.pose.dx_mm, "campaign.forced[]");
                read_if(fj, "dy_mm", f.pose.dy_mm, "campaign.forced[]");
                read_if(fj, "theta_deg", f.pose.theta_deg, "campaign.forced[]");
                cfg.campaign.forced.push_back(f);
            }
        }
    }
    if (j.contains("paths")) {
        const json& p = j["paths"];
        check_keys(p, {"data_dir", "model_path", "out_dir"}, "paths");
        read_if(p, "data_dir", cfg.paths.data_dir, "paths");
        read_if(p, "model_path", cfg.paths.model_path, "paths");
        read_if(p, "out_dir", cfg.paths.out_dir, "paths");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

void save_config_file(const std::string& path, const RunConfig& cfg) {
    std::ofstream f(path, std::ios::trunc);
    require(static_cast<bool>(f), "config: cannot write file");
    f << serialize_config(cfg);
}

GmConfig make_gm_config(const RunConfig& cfg) {
    GmConfig g = GmConfig::from_scene(cfg.scene);
    g.overlap_min = cfg.thresholds.overlap_min;
    g.rot_fail_deg = cfg.thresholds.rot_fail_deg;
    g.frames = cfg.gm.frames;
    g.substrate_inflation_w_px = cfg.gm.substrate_inflation_w_px;
    g.substrate_inflation_h_px = cfg.gm.substrate_inflation_h_px;
    g.slot_inflation_px = cfg.gm.slot_inflation_px;
    return g;
}

ReloadEnv make_reload_env(const RunConfig& cfg) {
    ReloadEnv env;
    env.scene = cfg.scene;
    env.gm = make_gm_config(cfg);
    env.cnn_threshold = cfg.thresholds.score_min;
    env.frames_per_verify = cfg.gm.frames;
    env.noise.p_gross = cfg.campaign.p_gross;
    env.noise.jitter_sigma_mm = cfg.campaign.jitter_sigma_mm;
    env.noise.jitter_sigma_deg = cfg.campaign.jitter_sigma_deg;
    env.max_attempts = cfg.campaign.max_attempts;
    return env;
}

}  // namespace ashe
