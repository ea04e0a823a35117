#pragma once

#include <functional>
#include <string>
#include <vector>

#include "step/dataset.hpp"
#include "step/model.hpp"
#include "step/optim.hpp"
#include "step/rng.hpp"

namespace step {

struct EpochRecord {
    int epoch = 0;  // 1-based
    double lr = 0;
    double train_loss = 0;
    double train_acc = 0;
    double eval_acc = 0;  // NaN when no eval set was given
    double wall_seconds = 0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;

    /// CSV with header epoch,lr,train_loss,train_acc,eval_acc,wall_seconds.
    std::string to_csv() const;
    /// Same table without the wall-clock column (the reproducible part).
    std::string to_csv_deterministic() const;
};

/// Pads by `pad` zeros, crops back at a random offset and flips with p = 0.5.
void augment_in_place(Tensor4& images, int pad, PatternRng& rng);

/// Fraction of correctly classified samples.
double evaluate(const ModelGraph<float>& model, const LabeledImageBatch& data, Mode mode = Mode::Eval,
                int batch_size = 256);

using EpochCallback = std::function<void(const EpochRecord&, const ModelGraph<float>&)>;

/**
 * Mini-batch training of every trainable parameter. Shuffling and augmentation
 * draw from a generator derived from (cfg.seed, epoch), so a run resumed at
 * `start_epoch` replays the same batches as an uninterrupted one.
 */
TrainLog train_loop(ModelGraph<float>& model, const LabeledImageBatch& train, const LabeledImageBatch* eval,
                    const TrainConfig& cfg, int start_epoch = 0, const EpochCallback& on_epoch = {});

}  // namespace step
