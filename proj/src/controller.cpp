#include "ashe/controller.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "ashe/errors.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace ashe {

FusionVerdict fusion_decide(const GmVerdict& gm, bool cnn_success,
                            double cnn_median) {
    FusionVerdict v;
    v.gm = gm;
    v.cnn_success = cnn_success;
    v.cnn_median = cnn_median;
    v.final_success = gm.success && cnn_success;
    return v;
}

const char* phase_name(DispenserPhase p) {
    switch (p) {
        case DispenserPhase::Idle: return "Idle";
        case DispenserPhase::HorizontalExtended: return "HorizontalExtended";
        case DispenserPhase::VerticalBlocking: return "VerticalBlocking";
        case DispenserPhase::HorizontalRetracted: return "HorizontalRetracted";
        case DispenserPhase::Ready: return "Ready";
    }
    return "?";
}

const char* event_name(DispenserEvent e) {
    switch (e) {
        case DispenserEvent::CommandDispense: return "command_dispense";
        case DispenserEvent::HlimitPressed: return "hlimit_pressed";
        case DispenserEvent::VlimitExtended: return "vlimit_extended";
        case DispenserEvent::HretractDone: return "hretract_done";
        case DispenserEvent::VretractDone: return "vretract_done";
    }
    return "?";
}

DispenserPose dispenser_pose(DispenserPhase p) {
    switch (p) {
        case DispenserPhase::Idle: return {false, false, false};
        case DispenserPhase::HorizontalExtended: return {true, false, true};
        case DispenserPhase::VerticalBlocking: return {true, true, true};
        case DispenserPhase::HorizontalRetracted: return {false, true, true};
        case DispenserPhase::Ready: return {false, true, true};
    }
    return {};
}

DispenserState dispenser_step(const DispenserState& s, DispenserEvent e) {
    require(s.hotel_count >= 0, "dispenser: negative hotel count");
    DispenserState n = s;
    const auto violation = [&]() -> DispenserState {
        throw ContractError(std::string("dispenser: event ") + event_name(e) +
                            " is illegal in phase " + phase_name(s.phase));
    };
    switch (s.phase) {
        case DispenserPhase::Idle:
            if (e != DispenserEvent::CommandDispense) return violation();
            if (s.hotel_count == 0)
                throw DataError("dispenser: hotel is empty");
            n.hotel_count -= 1;
            n.phase = DispenserPhase::HorizontalExtended;
            return n;
        case DispenserPhase::HorizontalExtended:
            if (e != DispenserEvent::HlimitPressed) return violation();
            n.phase = DispenserPhase::VerticalBlocking;
            return n;
        case DispenserPhase::VerticalBlocking:
            if (e != DispenserEvent::VlimitExtended) return violation();
            n.phase = DispenserPhase::HorizontalRetracted;
            return n;
        case DispenserPhase::HorizontalRetracted:
            if (e != DispenserEvent::HretractDone) return violation();
            n.phase = DispenserPhase::Ready;
            return n;
        case DispenserPhase::Ready:
            if (e != DispenserEvent::VretractDone) return violation();
            n.phase = DispenserPhase::Idle;
            return n;
    }
    return violation();
}

DispenserState dispenser_stage(const DispenserState& s) {
    require(s.phase == DispenserPhase::Idle,
            "dispenser: staging must start from Idle");
    DispenserState n = dispenser_step(s, DispenserEvent::CommandDispense);
    n = dispenser_step(n, DispenserEvent::HlimitPressed);
    n = dispenser_step(n, DispenserEvent::VlimitExtended);
    n = dispenser_step(n, DispenserEvent::HretractDone);
    return n;
}

const char* robot_step_name(RobotStep s) {
    switch (s) {
        case RobotStep::RemoveUsed: return "RemoveUsed";
        case RobotStep::Discard: return "Discard";
        case RobotStep::PickFresh: return "PickFresh";
        case RobotStep::Place: return "Place";
        case RobotStep::Verify: return "Verify";
        case RobotStep::Correct: return "Correct";
        case RobotStep::Done: return "Done";
    }
    return "?";
}

RobotStep robot_next(RobotStep s, std::optional<bool> verify_success) {
    if (s != RobotStep::Verify && verify_success.has_value())
        throw ContractError("robot: verdict supplied outside Verify");
    switch (s) {
        case RobotStep::RemoveUsed: return RobotStep::Discard;
        case RobotStep::Discard: return RobotStep::PickFresh;
        case RobotStep::PickFresh: return RobotStep::Place;
        case RobotStep::Place: return RobotStep::Verify;
        case RobotStep::Verify:
            if (!verify_success.has_value())
                throw ContractError("robot: Verify needs a verdict");
            return *verify_success ? RobotStep::Done : RobotStep::Correct;
        case RobotStep::Correct: return RobotStep::RemoveUsed;
        case RobotStep::Done:
            throw ContractError("robot: Done has no successor");
    }
    throw ContractError("robot: unknown step");
}

StateStore::StateStore(const std::string& path)
    : path_(path), journal_path_(path + ".journal") {
    std::lock_guard<std::mutex> lock(mu_);
    load();
}

void StateStore::load() {
    kv_.clear();
    {
        std::ifstream f(path_);
        if (f) {
            nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
            if (j.is_discarded() || !j.is_object())
                throw DataError("state store: corrupt table at " + path_);
            for (auto it = j.begin(); it != j.end(); ++it)
                kv_[it.key()] = it.value().get<int>();
        }
    }
    std::ifstream jf(journal_path_);
    if (jf) {
        // A leftover journal means a crash between append and rename: the
        // journaled writes are the newer truth.
        std::string key;
        int value;
        while (jf >> key >> value) kv_[key] = value;
        persist_locked();
        std::remove(journal_path_.c_str());
    }
}

void StateStore::persist_locked() {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : kv_) j[k] = v;
    const std::string tmp = path_ + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        require(static_cast<bool>(f), "state store: cannot write table");
        f << j.dump(2) << "\n";
        f.flush();
        if (!f) throw DataError("state store: short write to " + tmp);
    }
    fs::rename(tmp, path_);
}

int StateStore::get(const std::string& key) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = kv_.find(key);
    return it == kv_.end() ? 0 : it->second;
}

void StateStore::set(const std::string& key, int value) {
    require(!key.empty(), "state store: empty key");
    for (char c : key)
        require(!std::isspace(static_cast<unsigned char>(c)),
                "state store: whitespace in key");
    std::lock_guard<std::mutex> lock(mu_);
    {
        std::ofstream jf(journal_path_, std::ios::app);
        require(static_cast<bool>(jf), "state store: cannot write journal");
        jf << key << " " << value << "\n";
        jf.flush();
        if (!jf) throw DataError("state store: short journal write");
    }
    kv_[key] = value;
    persist_locked();
    std::remove(journal_path_.c_str());
    cv_.notify_all();
}

bool StateStore::wait_for(const std::string& key, int value,
                          std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lock(mu_);
    return cv_.wait_for(lock, timeout, [&] {
        const auto it = kv_.find(key);
        return (it == kv_.end() ? 0 : it->second) == value;
    });
}

PoseError simulate_placement(const PlacementNoiseModel& noise,
                             const std::optional<PoseError>& forced, Rng& rng) {
    require(noise.p_gross >= 0.0 && noise.p_gross <= 1.0,
            "placement: p_gross out of range");
    if (forced) {
        forced->validate();
        return *forced;
    }
    if (rng.uniform() < noise.p_gross) {
        const Band band = rng.bernoulli(0.5) ? Band::Medium : Band::Large;
        const Kind kind = static_cast<Kind>(rng.uniform_int(0, 2));
        return sample_pose_error(band, kind, rng.next_u64());
    }
    PoseError p;
    p.dx_mm = noise.jitter_sigma_mm * rng.normal();
    p.dy_mm = noise.jitter_sigma_mm * rng.normal();
    p.theta_deg = noise.jitter_sigma_deg * rng.normal();
    return p;
}

TrialRecord run_reload_cycle(const ReloadEnv& env, const CnnModel& model,
                             const OrientedRect& slot_ref, StateStore& store,
                             DispenserState& disp,
                             const std::optional<PoseError>& forced_first,
                             uint64_t trial_seed, int trial_id) {
    require(env.max_attempts >= 1, "reload: max_attempts must be positive");
    require(env.frames_per_verify >= 1, "reload: need at least one frame");
    TrialRecord rec;
    rec.trial_id = trial_id;
    if (store.get(kSdlStateKey) != 1) {
        rec.error = "sdl idle";
        return rec;
    }

    int attempt = 0;
    RobotStep step = RobotStep::RemoveUsed;
    while (step != RobotStep::Done) {
        switch (step) {
            case RobotStep::RemoveUsed:
                step = robot_next(step);
                break;
            case RobotStep::Discard:
                // The first pass discards the used substrate from the previous
                // run; later passes discard the misplaced fresh one.
                if (attempt > 0) ++rec.discarded;
                step = robot_next(step);
                break;
            case RobotStep::PickFresh: {
                try {
                    disp = dispenser_stage(disp);
                } catch (const DataError&) {
                    rec.error = "empty hotel";
                    rec.attempts_used = attempt;
                    store.set(kSdlStateKey, 0);
                    return rec;
                }
                ++rec.fresh_taken;
                // Pickup clears the platform; the blocker then retracts.
                disp = dispenser_step(disp, DispenserEvent::VretractDone);
                step = robot_next(step);
                break;
            }
            case RobotStep::Place: {
                ++attempt;
                Rng prng(rng_stream(trial_seed, "placement",
                                    static_cast<uint64_t>(attempt)));
                AttemptRecord ar;
                ar.pose = simulate_placement(
                    env.noise, attempt == 1 ? forced_first : std::nullopt, prng);
                ar.seated_truth = ground_truth_label(ar.pose).seated;
                rec.attempts.push_back(std::move(ar));
                step = robot_next(step);
                break;
            }
            case RobotStep::Verify: {
                AttemptRecord& ar = rec.attempts.back();
                std::vector<Image> frames;
                frames.reserve(static_cast<size_t>(env.frames_per_verify));
                for (int i = 0; i < env.frames_per_verify; ++i)
                    frames.push_back(render_scene(
                        ar.pose, env.scene,
                        rng_stream(trial_seed, "frames",
                                   static_cast<uint64_t>(attempt),
                                   static_cast<uint64_t>(i))));
                ar.gm = gm_classify(slot_ref, frames, env.gm);
                const CnnVerdict cv = cnn_classify(
                    model,
                    [&](int i) { return frames[static_cast<size_t>(i)]; },
                    env.frames_per_verify, env.scene, env.cnn_threshold);
                ar.cnn_median = cv.median;
                ar.cnn_success = cv.success;
                ar.fused_success =
                    fusion_decide(ar.gm, cv.success, cv.median).final_success;
                if (ar.fused_success || attempt >= env.max_attempts) {
                    // Success ends the cycle; a failure on the last allowed
                    // attempt ends it too, leaving the misplaced substrate.
                    step = RobotStep::Done;
                } else {
                    step = robot_next(step, false);
                }
                break;
            }
            case RobotStep::Correct:
                step = robot_next(step);
                break;
            case RobotStep::Done:
                break;
        }
    }

    rec.attempts_used = attempt;
    rec.placed = attempt > 0 ? 1 : 0;
    rec.final_success = !rec.attempts.empty() && rec.attempts.back().fused_success;
    rec.corrected = rec.final_success && rec.attempts_used > 1;
    store.set(kSdlStateKey, 0);
    return rec;
}

CampaignReport run_campaign(const ReloadEnv& env, const CnnModel& model,
                            const OrientedRect& slot_ref,
                            const CampaignConfig& cfg,
                            const std::string& store_path) {
    require(cfg.n_trials >= 0, "campaign: negative trial count");
    CampaignReport rep;
    rep.n_trials = cfg.n_trials;
    const int capacity = cfg.hotel_capacity < 0
                             ? cfg.n_trials * env.max_attempts
                             : cfg.hotel_capacity;
    rep.hotel_initial = capacity;
    DispenserState disp{DispenserPhase::Idle, capacity};

    StateStore store(store_path);
    store.set(kSdlStateKey, 0);
    const auto handshake = std::chrono::hours(4);

    std::thread leader([&] {
        for (int t = 0; t < cfg.n_trials; ++t) {
            store.set(kSdlStateKey, 1);
            if (!store.wait_for(kSdlStateKey, 0, handshake)) return;
        }
    });
    try {
        for (int t = 0; t < cfg.n_trials; ++t) {
            require(store.wait_for(kSdlStateKey, 1, handshake),
                    "campaign: leader handshake timed out");
            std::optional<PoseError> forced;
            const auto it = cfg.forced.find(t);
            if (it != cfg.forced.end()) forced = it->second;
            rep.trials.push_back(run_reload_cycle(
                env, model, slot_ref, store, disp, forced,
                rng_stream(cfg.seed, "trial", static_cast<uint64_t>(t)), t));
        }
    } catch (...) {
        store.set(kSdlStateKey, 0);
        leader.join();
        throw;
    }
    leader.join();
    rep.hotel_final = disp.hotel_count;

    for (const TrialRecord& tr : rep.trials) {
        if (!tr.error.empty()) ++rep.aborted;
        for (const AttemptRecord& a : tr.attempts)
            if (a.fused_success && !a.seated_truth) ++rep.undetected_misplacements;
        if (tr.attempts.empty()) continue;
        const AttemptRecord& a1 = tr.attempts.front();
        if (a1.fused_success && a1.seated_truth) ++rep.first_time_success;
        if (!a1.fused_success) {
            ++rep.detected_failures;
            if (tr.attempts.size() >= 2 && tr.attempts[1].fused_success &&
                tr.attempts[1].seated_truth)
                ++rep.corrected_by_second;
        }
    }
    rep.accuracy_defined = cfg.n_trials > 0;
    rep.first_time_accuracy =
        rep.accuracy_defined
            ? static_cast<double>(rep.first_time_success) / cfg.n_trials
            : 0.0;
    return rep;
}

void write_report_json(const std::string& path, const CampaignReport& rep) {
    nlohmann::json j;
    j["n_trials"] = rep.n_trials;
    j["first_time_success"] = rep.first_time_success;
    if (rep.accuracy_defined)
        j["first_time_accuracy"] = rep.first_time_accuracy;
    else
        j["first_time_accuracy"] = nullptr;
    j["detected_failures"] = rep.detected_failures;
    j["corrected_by_second_attempt"] = rep.corrected_by_second;
    j["undetected_misplacements"] = rep.undetected_misplacements;
    j["aborted"] = rep.aborted;
    j["hotel_initial"] = rep.hotel_initial;
    j["hotel_final"] = rep.hotel_final;
    j["trials"] = nlohmann::json::array();
    for (const TrialRecord& tr : rep.trials) {
        j["trials"].push_back({{"trial_id", tr.trial_id},
                               {"attempts_used", tr.attempts_used},
                               {"final_success", tr.final_success},
                               {"corrected", tr.corrected},
                               {"error", tr.error}});
    }
    std::ofstream f(path, std::ios::trunc);
    require(static_cast<bool>(f), "report: cannot open output file");
    f << j.dump(2) << "\n";
}

void write_trials_csv(const std::string& path, const CampaignReport& rep) {
    FILE* f = std::fopen(path.c_str(), "w");
    require(f != nullptr, "trials csv: cannot open output file");
    std::fprintf(f,
                 "trial_id,attempt,dx_mm,dy_mm,theta_deg,seated,gm_overlap,"
                 "gm_decision,cnn_median,fused,corrected\n");
    for (const TrialRecord& tr : rep.trials) {
        for (size_t i = 0; i < tr.attempts.size(); ++i) {
            const AttemptRecord& a = tr.attempts[i];
            std::fprintf(f, "%d,%zu,%.6f,%.6f,%.6f,%d,%.6f,%d,%.6f,%d,%d\n",
                         tr.trial_id, i + 1, a.pose.dx_mm, a.pose.dy_mm,
                         a.pose.theta_deg, a.seated_truth ? 1 : 0, a.gm.overlap,
                         a.gm.success ? 1 : 0, a.cnn_median,
                         a.fused_success ? 1 : 0, tr.corrected ? 1 : 0);
        }
    }
    std::fclose(f);
}

}  // namespace ashe
