#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ashe/cnn.hpp"
#include "ashe/image.hpp"
#include "ashe/rng.hpp"
#include "ashe/scene.hpp"
#include "ashe/tensor.hpp"

namespace ashe {

// Classifier label convention: 0 = misplaced, 1 = seated.
constexpr int kLabelFailure = 0;
constexpr int kLabelSuccess = 1;

// Fixed crop around the far glow edge, taken from the scene config. Frames
// already matching the crop size pass through unchanged.
Image crop_roi(const Image& frame, const SceneConfig& cfg);

// Bilinear resize to side x side, channels-first, scaled to [0,1].
// A same-size input reproduces its pixel values exactly.
void write_input_chw(const Image& img, int side, float* dst);
Tensor single_input(const Image& roi, int side = 96);

struct AugmentConfig {
    double shift_px = 5.0;
    double rot_deg = 1.0;
    double zoom_frac = 0.02;
    double brightness = 10.0;
    double contrast_frac = 0.05;
    double noise_sigma_max = 5.0;
    int mutations = 15;

    bool operator==(const AugmentConfig&) const = default;
};

struct AugmentParams {
    double shift_x = 0.0;
    double shift_y = 0.0;
    double rot_deg = 0.0;
    double zoom = 1.0;
    double brightness = 0.0;
    double contrast = 1.0;
    double noise_sigma = 0.0;
};

// Seven uniform draws in a fixed order; collapsing a range in the config
// collapses the corresponding parameter to its identity value.
AugmentParams sample_augment_params(Rng& rng, const AugmentConfig& cfg);

// One combined warp (shift, rotation about the center, zoom) with bilinear
// clamp-to-edge sampling, then brightness/contrast about mid-gray, then
// Gaussian pixel noise drawn from rng. Identity params copy the image
// bit-exactly.
Image apply_augment(const Image& img, const AugmentParams& p, Rng& rng);

struct DatasetEntry {
    std::string file;  // relative to the dataset directory
    int label = kLabelFailure;
    Band band = Band::Seated;
    Kind kind = Kind::Translation;
    PoseError pose;
};

void write_labels(const std::string& dir, const std::vector<DatasetEntry>& entries);
std::vector<DatasetEntry> read_labels(const std::string& dir);

struct SynthStats {
    int failures = 0;
    int successes = 0;
};

// Renders failure/success base scenes, stores their classifier crops as PPM
// plus labels.json. Failure poses cycle bands x kinds; successes sit in the
// seated basin.
SynthStats synth_dataset(const std::string& dir, const SceneConfig& cfg,
                         uint64_t seed, int n_failure, int n_success);

// Base crops cached in memory; samples are (base, mutation) pairs expanded
// on the fly so the augmented set never has to exist at once.
struct TrainingSet {
    std::vector<Image> bases;
    std::vector<int> labels;  // per base
    std::vector<std::pair<int, int>> train_items, val_items;
    uint64_t seed = 0;
    AugmentConfig aug;
    int input_side = 96;

    int64_t train_count() const { return static_cast<int64_t>(train_items.size()); }
    int64_t val_count() const { return static_cast<int64_t>(val_items.size()); }
};

// Splits bases 80/20 with a seeded shuffle before augmentation, then expands
// each split by cfg.mutations. No base contributes to both splits.
TrainingSet load_training_set(const std::string& dir, uint64_t seed,
                              const AugmentConfig& aug);

// Fills x[count, 3, side, side] and y with the items at [off, off+count).
void materialize_batch(const TrainingSet& ts,
                       const std::vector<std::pair<int, int>>& items, size_t off,
                       size_t count, Tensor& x, std::vector<int>& y);

// Seated probability for one frame.
float predict_score(const CnnModel& m, const Image& frame, const SceneConfig& cfg);

struct CnnVerdict {
    double median = 0.0;
    bool success = false;
    int frames_used = 0;
};

// Scores n frames and takes the median (mean of the two central order
// statistics when n is even); success means median strictly above threshold.
CnnVerdict cnn_classify(const CnnModel& m, const std::function<Image(int)>& frame_at,
                        int n, const SceneConfig& cfg, double threshold = 0.60);

}  // namespace ashe
