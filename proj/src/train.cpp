#include "ashe/train.hpp"

#include <cmath>

#include "ashe/errors.hpp"
#include "json.hpp"

namespace ashe {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be positive");
    if (patience < 1) throw ConfigError("train: patience must be positive");
    if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("train: betas must lie in [0,1)");
    if (!(eps > 0.0)) throw ConfigError("train: eps must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw ConfigError("train: dropout must lie in [0,1)");
}

std::string train_config_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["batch_size"] = cfg.batch_size;
    j["max_epochs"] = cfg.max_epochs;
    j["patience"] = cfg.patience;
    j["lr"] = cfg.lr;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["eps"] = cfg.eps;
    j["dropout"] = cfg.dropout;
    j["seed"] = cfg.seed;
    return j.dump();
}

Adam::Adam(const CnnModel& model) {
    for (const auto* p : model.params()) {
        m.emplace_back(p->shape);
        v.emplace_back(p->shape);
    }
}

void Adam::step(CnnModel& model, GradsT<float>& g, const TrainConfig& cfg) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    auto params = model.params();
    auto grads = g.params();
    require(params.size() == grads.size() && params.size() == m.size(),
            "adam: parameter list mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        float* p = params[i]->ptr();
        const float* gr = grads[i]->ptr();
        float* mi = m[i].ptr();
        float* vi = v[i].ptr();
        const size_t n = params[i]->data.size();
        for (size_t k = 0; k < n; ++k) {
            mi[k] = static_cast<float>(cfg.beta1 * mi[k] + (1.0 - cfg.beta1) * gr[k]);
            vi[k] = static_cast<float>(cfg.beta2 * vi[k] +
                                       (1.0 - cfg.beta2) * gr[k] * gr[k]);
            const double mhat = mi[k] / bc1;
            const double vhat = vi[k] / bc2;
            p[k] -= static_cast<float>(cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

std::vector<float> class_weights(const TrainingSet& ts) {
    int64_t counts[2] = {0, 0};
    for (const auto& it : ts.train_items)
        ++counts[static_cast<size_t>(ts.labels[static_cast<size_t>(it.first)])];
    require(counts[0] > 0 && counts[1] > 0,
            "class_weights: train split must contain both classes");
    const double total = static_cast<double>(counts[0] + counts[1]);
    return {static_cast<float>(total / (2.0 * counts[0])),
            static_cast<float>(total / (2.0 * counts[1]))};
}

EvalResult evaluate(const CnnModel& model, const TrainingSet& ts,
                    const std::vector<std::pair<int, int>>& items,
                    const std::vector<float>& weights, int batch_size) {
    require(!items.empty(), "evaluate: empty split");
    EvalResult r;
    double loss_sum = 0.0;
    int64_t correct = 0;
    Tensor x;
    std::vector<int> y;
    for (size_t off = 0; off < items.size(); off += static_cast<size_t>(batch_size)) {
        const size_t count =
            std::min(static_cast<size_t>(batch_size), items.size() - off);
        materialize_batch(ts, items, off, count, x, y);
        const Tensor logits = forward(model, x);
        loss_sum +=
            static_cast<double>(weighted_cross_entropy(logits, y, weights)) *
            static_cast<double>(count);
        for (size_t j = 0; j < count; ++j) {
            const float* row = logits.ptr() + j * 2;
            const int pred = row[1] > row[0] ? 1 : 0;
            if (pred == y[j]) ++correct;
        }
    }
    r.loss = loss_sum / static_cast<double>(items.size());
    r.accuracy = static_cast<double>(correct) / static_cast<double>(items.size());
    return r;
}

TrainHistory train_model(CnnModel& model, const TrainingSet& ts,
                         const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    require(!ts.train_items.empty() && !ts.val_items.empty(),
            "train: both splits must be nonempty");
    const std::vector<float> weights = class_weights(ts);
    Adam opt(model);
    TrainHistory hist;

    std::vector<Tensor> best;
    auto snapshot = [&]() {
        best.clear();
        for (const auto* p : model.params()) best.push_back(*p);
    };
    auto restore = [&]() {
        auto params = model.params();
        for (size_t i = 0; i < params.size(); ++i) *params[i] = best[i];
    };

    int since_best = 0;
    Tensor x;
    std::vector<int> y;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::vector<std::pair<int, int>> order = ts.train_items;
        Rng shuffle_rng(rng_stream(cfg.seed, "shuffle", static_cast<uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        int step = 0;
        for (size_t off = 0; off < order.size();
             off += static_cast<size_t>(cfg.batch_size), ++step) {
            const size_t count =
                std::min(static_cast<size_t>(cfg.batch_size), order.size() - off);
            materialize_batch(ts, order, off, count, x, y);
            Rng drop_rng(rng_stream(cfg.seed, "dropout", static_cast<uint64_t>(epoch),
                                    static_cast<uint64_t>(step)));
            CacheT<float> cache;
            forward(model, x, true, cfg.dropout, &drop_rng, &cache);
            float loss = 0.0f;
            GradsT<float> g = backward(model, cache, y, weights, &loss);
            loss_sum += static_cast<double>(loss) * static_cast<double>(count);
            opt.step(model, g, cfg);
        }

        const EvalResult val = evaluate(model, ts, ts.val_items, weights, cfg.batch_size);
        EpochStats es;
        es.epoch = epoch;
        es.train_loss = loss_sum / static_cast<double>(order.size());
        es.val_loss = val.loss;
        es.val_accuracy = val.accuracy;
        hist.epochs.push_back(es);
        if (log) {
            (*log) << "epoch " << epoch << " train_loss " << es.train_loss
                   << " val_loss " << es.val_loss << " val_acc " << es.val_accuracy
                   << "\n";
            log->flush();
        }

        if (val.accuracy > hist.best_val_accuracy || hist.best_epoch < 0) {
            hist.best_val_accuracy = val.accuracy;
            hist.best_epoch = epoch;
            since_best = 0;
            snapshot();
        } else if (++since_best >= cfg.patience) {
            hist.early_stopped = true;
            break;
        }
    }
    restore();
    return hist;
}

}  // namespace ashe
