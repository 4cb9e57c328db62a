#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ashe/cnn.hpp"
#include "ashe/dataset.hpp"
#include "ashe/gm.hpp"
#include "ashe/rng.hpp"
#include "ashe/scene.hpp"

namespace ashe {

// Fusion tree: success only when both detectors agree on success. The CNN is
// still evaluated when the macro check fails so reports carry both verdicts,
// but it cannot rescue a macro failure.
struct FusionVerdict {
    GmVerdict gm;
    bool cnn_success = false;
    double cnn_median = 0.0;
    bool final_success = false;
};

FusionVerdict fusion_decide(const GmVerdict& gm, bool cnn_success, double cnn_median);

// Dual-actuated dispenser: horizontal push from the hotel, vertical reentry
// block, staged handoff. Phases advance one event at a time around a fixed
// cycle.
enum class DispenserPhase {
    Idle,
    HorizontalExtended,
    VerticalBlocking,
    HorizontalRetracted,
    Ready
};

enum class DispenserEvent {
    CommandDispense,
    HlimitPressed,
    VlimitExtended,
    HretractDone,
    VretractDone
};

const char* phase_name(DispenserPhase p);
const char* event_name(DispenserEvent e);

struct DispenserState {
    DispenserPhase phase = DispenserPhase::Idle;
    int hotel_count = 0;
};

// Actuator/substrate attributes implied by a phase, used by the safety check.
struct DispenserPose {
    bool horizontal_extended = false;
    bool vertical_extended = false;
    bool substrate_forward = false;
};
DispenserPose dispenser_pose(DispenserPhase p);

// Single-phase advance. Illegal (phase, event) pairs throw ContractError;
// dispensing from an empty hotel throws DataError. The hotel count drops by
// one exactly when the push begins.
DispenserState dispenser_step(const DispenserState& s, DispenserEvent e);

// Runs the four events that stage one substrate, leaving the state at Ready.
DispenserState dispenser_stage(const DispenserState& s);

// Arm sequence for one reload: remove the used substrate, discard it, pick a
// fresh one, place, verify; verification branches to Done or to a correction
// loop.
enum class RobotStep {
    RemoveUsed,
    Discard,
    PickFresh,
    Place,
    Verify,
    Correct,
    Done
};

const char* robot_step_name(RobotStep s);

// Legal successor of `s`. verify_success must be provided exactly at Verify;
// Done has no successor. Violations throw ContractError.
RobotStep robot_next(RobotStep s, std::optional<bool> verify_success = std::nullopt);

// File-backed keyed integers shared between the leader and follower loops.
// Writes go to a write-ahead journal first, then the table is replaced by
// atomic rename; a leftover journal is replayed on open. In-process waiters
// are woken through a condition variable.
class StateStore {
public:
    explicit StateStore(const std::string& path);

    int get(const std::string& key);
    void set(const std::string& key, int value);
    bool wait_for(const std::string& key, int value,
                  std::chrono::milliseconds timeout);

    const std::string& path() const { return path_; }

private:
    void load();
    void persist_locked();

    std::string path_;
    std::string journal_path_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::string, int> kv_;
};

inline constexpr const char* kSdlStateKey = "SDL_STATE";

struct PlacementNoiseModel {
    double p_gross = 0.015;           // chance of a medium-or-large misplacement
    double jitter_sigma_mm = 0.05;    // arm repeatability, per axis
    double jitter_sigma_deg = 0.05;
};

// Forced poses come back verbatim; otherwise a gross error is drawn from the
// medium/large bands with probability p_gross, else seated-scale Gaussian
// jitter. Draw order is fixed for reproducibility.
PoseError simulate_placement(const PlacementNoiseModel& noise,
                             const std::optional<PoseError>& forced, Rng& rng);

struct ReloadEnv {
    SceneConfig scene;
    GmConfig gm;
    double cnn_threshold = 0.60;
    int frames_per_verify = 100;
    PlacementNoiseModel noise;
    int max_attempts = 3;
};

struct AttemptRecord {
    PoseError pose;
    bool seated_truth = false;
    GmVerdict gm;
    double cnn_median = 0.0;
    bool cnn_success = false;
    bool fused_success = false;
};

struct TrialRecord {
    int trial_id = 0;
    std::vector<AttemptRecord> attempts;
    int attempts_used = 0;
    bool corrected = false;
    bool final_success = false;
    int fresh_taken = 0;   // substrates drawn from the hotel
    int discarded = 0;     // misplaced substrates removed during correction
    int placed = 0;        // substrates left seated on the transporter
    std::string error;     // empty when the trial ran to a verdict
};

// One leader-triggered reload: gates on SDL_STATE = 1, walks the robot steps,
// stages a substrate per attempt, verifies over frames_per_verify rendered
// frames with both detectors, corrects on failure, resets SDL_STATE to 0 when
// done. forced_first overrides the placement of attempt 1 only.
TrialRecord run_reload_cycle(const ReloadEnv& env, const CnnModel& model,
                             const OrientedRect& slot_ref, StateStore& store,
                             DispenserState& disp,
                             const std::optional<PoseError>& forced_first,
                             uint64_t trial_seed, int trial_id);

struct CampaignConfig {
    int n_trials = 130;
    std::map<int, PoseError> forced;  // trial_id -> forced pose for attempt 1
    int hotel_capacity = -1;          // -1: n_trials * max_attempts
    uint64_t seed = 1;
};

struct CampaignReport {
    int n_trials = 0;
    int first_time_success = 0;
    double first_time_accuracy = 0.0;
    bool accuracy_defined = false;
    int detected_failures = 0;            // attempt-1 fused failures
    int corrected_by_second = 0;          // of those, seated + fused success at attempt 2
    int undetected_misplacements = 0;     // attempts fused success on an unseated pose
    int aborted = 0;
    int hotel_initial = 0;
    int hotel_final = 0;
    std::vector<TrialRecord> trials;
};

// Sequential trials with a leader thread raising SDL_STATE and the follower
// consuming it through the shared store; per-trial randomness derives only
// from (seed, trial id).
CampaignReport run_campaign(const ReloadEnv& env, const CnnModel& model,
                            const OrientedRect& slot_ref,
                            const CampaignConfig& cfg,
                            const std::string& store_path);

void write_report_json(const std::string& path, const CampaignReport& report);
void write_trials_csv(const std::string& path, const CampaignReport& report);

}  // namespace ashe
