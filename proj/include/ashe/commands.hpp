#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ashe/config.hpp"

namespace ashe {

// One cell of the placement-error matrix. Error cells form a 6x6 grid over
// translation levels x rotation levels (levels -3..-1, 1..3); Chebyshev rings
// give 4 small, 12 medium and 20 large cells, and a seated reference cell is
// appended. Poses depend only on (seed, cell index). One designated large
// cell carries a pose that slips past the geometric overlap screen while
// remaining a true large-band error.
struct MatrixCell {
    int index = 0;
    int trans_level = 0;  // -3..3, 0 only for the seated cell
    int rot_level = 0;
    Band band = Band::Seated;
    PoseError pose;
    bool designed_gm_miss = false;
};

std::vector<MatrixCell> matrix_cells(uint64_t seed);

// Magnitude tables, exposed for margin verification.
double matrix_translation_mm(int level);  // level 1..3
double matrix_rotation_deg(int level);

// Aggregated empty-transporter reference over cfg.frames rendered frames.
OrientedRect compute_slot_reference(const RunConfig& cfg);

struct MatrixRow {
    MatrixCell cell;
    GmVerdict gm;
    double cnn_median = 0.0;
    bool cnn_success = false;
    bool seated_truth = false;
};

struct MatrixReport {
    std::vector<MatrixRow> rows;
    int gm_large_detected = 0;
    int gm_small_medium_detected = 0;
    int cnn_correct_error_cells = 0;
    bool cnn_seated_correct = false;
    double cnn_min_error_confidence = 1.0;  // min over error cells of 1 - median
};

MatrixReport run_matrix(const RunConfig& cfg, const CnnModel& model,
                        const OrientedRect& slot_ref, std::ostream* log = nullptr);
void write_matrix_csv(const std::string& path, const MatrixReport& rep);
void write_matrix_summary(const std::string& path, const MatrixReport& rep);

// Subcommand bodies; CLI flags are resolved by the caller. Each returns a
// process exit code and reports progress on stdout.
int cmd_synth(const RunConfig& cfg, const std::string& out_dir,
              std::optional<int> failures, std::optional<int> successes,
              double scale);
int cmd_train(const RunConfig& cfg, const std::string& data_dir,
              const std::string& model_path);
int cmd_matrix(const RunConfig& cfg, const std::string& model_path,
               const std::string& out_dir);
int cmd_detect(const RunConfig& cfg, const PoseError& pose, int frames,
               const std::string& model_path, bool use_cnn,
               const std::string& out_dir);
int cmd_campaign(const RunConfig& cfg, const std::string& model_path,
                 const std::string& out_dir);
int cmd_report(const std::string& in_dir);

}  // namespace ashe
