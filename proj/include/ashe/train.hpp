#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ashe/cnn.hpp"
#include "ashe/dataset.hpp"

namespace ashe {

struct TrainConfig {
    int batch_size = 32;
    int max_epochs = 50;
    int patience = 7;  // epochs without val-accuracy improvement before stopping
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double dropout = 0.5;
    uint64_t seed = 1;

    bool operator==(const TrainConfig&) const = default;
    void validate() const;
};

std::string train_config_json(const TrainConfig& cfg);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_accuracy = 0.0;
    bool early_stopped = false;
};

struct Adam {
    std::vector<Tensor> m, v;
    int64_t t = 0;

    explicit Adam(const CnnModel& model);
    void step(CnnModel& model, GradsT<float>& g, const TrainConfig& cfg);
};

// Inverse-frequency class weights over the train split: N_total / (2 * N_c).
std::vector<float> class_weights(const TrainingSet& ts);

// Mean weighted CE loss and plain accuracy over one split.
struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};
EvalResult evaluate(const CnnModel& model, const TrainingSet& ts,
                    const std::vector<std::pair<int, int>>& items,
                    const std::vector<float>& weights, int batch_size);

// Adam + weighted cross-entropy with a seeded shuffle per epoch and a seeded
// dropout stream per step. Restores the best-validation-accuracy weights
// before returning.
TrainHistory train_model(CnnModel& model, const TrainingSet& ts,
                         const TrainConfig& cfg, std::ostream* log = nullptr);

}  // namespace ashe
