#include "step/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "step/loss.hpp"

namespace step {

LabeledImageBatch gather(const LabeledImageBatch& src, const std::vector<int>& indices) {
    const auto& s = src.images.shape();
    LabeledImageBatch out;
    out.images = Tensor4({static_cast<int>(indices.size()), s.c, s.h, s.w});
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const int idx = indices[i];
        if (idx < 0 || idx >= src.size()) throw ContractError("gather: index out of range");
        std::copy_n(src.images.sample(idx), s.sample(), out.images.sample(static_cast<int>(i)));
        out.labels.push_back(src.labels[static_cast<std::size_t>(idx)]);
    }
    return out;
}

LabeledImageBatch take_first(const LabeledImageBatch& src, int n) {
    if (n <= 0 || n >= src.size()) return src;
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    return gather(src, idx);
}

namespace {

std::string format_record(const EpochRecord& r, bool with_wall) {
    char buf[256];
    if (with_wall) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.6f,%.6f,%.3f\n", r.epoch, r.lr, r.train_loss, r.train_acc,
                      r.eval_acc, r.wall_seconds);
    } else {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.6f,%.6f\n", r.epoch, r.lr, r.train_loss, r.train_acc,
                      r.eval_acc);
    }
    return buf;
}

void shuffle(std::vector<int>& v, PatternRng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace

std::string TrainLog::to_csv() const {
    std::string out = "epoch,lr,train_loss,train_acc,eval_acc,wall_seconds\n";
    for (const auto& r : epochs) out += format_record(r, true);
    return out;
}

std::string TrainLog::to_csv_deterministic() const {
    std::string out = "epoch,lr,train_loss,train_acc,eval_acc\n";
    for (const auto& r : epochs) out += format_record(r, false);
    return out;
}

void augment_in_place(Tensor4& images, int pad, PatternRng& rng) {
    const auto& s = images.shape();
    std::vector<float> buf(s.sample());
    for (int n = 0; n < s.n; ++n) {
        const int dy = static_cast<int>(rng.uniform_int(0, 2 * pad)) - pad;
        const int dx = static_cast<int>(rng.uniform_int(0, 2 * pad)) - pad;
        const bool flip = rng.uniform_int(0, 1) == 1;
        float* img = images.sample(n);
        for (int c = 0; c < s.c; ++c) {
            for (int y = 0; y < s.h; ++y) {
                for (int x = 0; x < s.w; ++x) {
                    const int sy = y + dy;
                    const int cx = x + dx;
                    const int sx = flip ? s.w - 1 - cx : cx;
                    float v = 0.0f;
                    if (sy >= 0 && sy < s.h && cx >= 0 && cx < s.w) {
                        v = img[(static_cast<std::size_t>(c) * s.h + sy) * s.w + sx];
                    }
                    buf[(static_cast<std::size_t>(c) * s.h + y) * s.w + x] = v;
                }
            }
        }
        std::copy(buf.begin(), buf.end(), img);
    }
}

double evaluate(const ModelGraph<float>& model, const LabeledImageBatch& data, Mode mode, int batch_size) {
    if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
    int correct = 0;
    for (int start = 0; start < data.size(); start += batch_size) {
        const int end = std::min(data.size(), start + batch_size);
        std::vector<int> idx(static_cast<std::size_t>(end - start));
        std::iota(idx.begin(), idx.end(), start);
        const auto batch = gather(data, idx);
        const auto logits = predict(model, batch.images, mode);
        for (int n = 0; n < batch.size(); ++n) {
            if (argmax_class(logits, n) == batch.labels[static_cast<std::size_t>(n)]) ++correct;
        }
    }
    return static_cast<double>(correct) / data.size();
}

TrainLog train_loop(ModelGraph<float>& model, const LabeledImageBatch& train, const LabeledImageBatch* eval,
                    const TrainConfig& cfg, int start_epoch, const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.size() == 0) throw ContractError("train_loop: empty training set");
    TrainLog log;
    Optimizer<float> opt(cfg.optimizer);
    const Mode eval_mode = cfg.quantized_eval ? Mode::EvalQuantized : Mode::Eval;
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = learning_rate(cfg, epoch);
        PatternRng rng(mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(epoch) + 0x5851F42D4C957F2DULL)));
        std::vector<int> order(static_cast<std::size_t>(train.size()));
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, rng);

        double loss_sum = 0;
        int correct = 0;
        for (int start = 0; start < train.size(); start += cfg.batch_size) {
            const int end = std::min(train.size(), start + cfg.batch_size);
            std::vector<int> idx(order.begin() + start, order.begin() + end);
            auto batch = gather(train, idx);
            if (cfg.augment) augment_in_place(batch.images, cfg.augment_pad, rng);
            auto fwd = forward(model, batch.images, Mode::Train);
            const auto loss = softmax_cross_entropy(fwd.logits, batch.labels);
            loss_sum += loss.loss * batch.size();
            correct += loss.correct;
            const auto grads = backward(model, fwd.cache, loss.d_logits, static_cast<float>(cfg.weight_decay));
            opt.step(model, grads, lr);
        }
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.lr = lr;
        rec.train_loss = loss_sum / train.size();
        rec.train_acc = static_cast<double>(correct) / train.size();
        rec.eval_acc = eval ? evaluate(model, *eval, eval_mode, cfg.eval_batch) : std::numeric_limits<double>::quiet_NaN();
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec, model);
    }
    return log;
}

}  // namespace step
