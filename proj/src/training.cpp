#include "dentocc/training.hpp"

#include <algorithm>
#include <numeric>

#include "dentocc/error.hpp"
#include "dentocc/random.hpp"

namespace dentocc {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be positive");
    if (batch_size == 0) throw DomainError("batch_size must be positive");
    if (points_per_step < 2) throw DomainError("points_per_step must be at least 2");
    if (max_epochs == 0) throw DomainError("max_epochs must be positive");
}

TrainBatch make_batch(std::span<const ToothSample* const> shapes, std::size_t points_per_shape, Rng& rng) {
    if (shapes.empty()) throw DomainError("make_batch: no shapes");
    TrainBatch batch;
    const std::size_t rows = shapes.size() * points_per_shape;
    std::vector<double> pts(3 * rows), labels(rows);
    std::vector<PatchImage> patches;
    std::size_t r = 0;
    for (const ToothSample* s : shapes) {
        const std::size_t t = s->points.size();
        if (t == 0) throw DomainError("sample " + s->record.id + " has no points");
        for (std::size_t i = 0; i < points_per_shape; ++i, ++r) {
            const std::size_t k = rng.below(t);
            for (std::size_t a = 0; a < 3; ++a) pts[3 * r + a] = s->points.points[3 * k + a];
            labels[r] = s->points.labels[k];
        }
        batch.classes.push_back(s->record.cls);
        patches.push_back(s->patch);
    }
    batch.points = Tensor({rows, 3}, std::move(pts));
    batch.labels = Tensor({rows}, std::move(labels));
    batch.patches = patches_to_tensor(patches);
    return batch;
}

double train_step(ToothReconstructor& model, AdamState& adam, const TrainBatch& batch) {
    auto params = model.parameters();
    std::vector<Tensor> tensors;
    tensors.reserve(params.size());
    for (auto& p : params) {
        p.tensor.zero_grad();
        tensors.push_back(p.tensor);
    }
    const Tensor c = model.condition(batch.classes, batch.patches);
    const Tensor probs = model.network().forward(batch.points, c, Mode::train);
    Tensor loss = bce_loss(probs, batch.labels);
    const double value = loss.item();
    loss.backward();
    adam_step(tensors, adam);
    return value;
}

namespace {

constexpr std::size_t kEvalChunk = 16384;

std::size_t count_correct(const ToothReconstructor& model, const Tensor& c, const PointSampleSet& set, std::size_t n) {
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += kEvalChunk) {
        const std::size_t m = std::min(kEvalChunk, n - start);
        std::vector<double> pts(set.points.begin() + static_cast<std::ptrdiff_t>(3 * start),
                                set.points.begin() + static_cast<std::ptrdiff_t>(3 * (start + m)));
        const Tensor p = model.network().predict(Tensor({m, 3}, std::move(pts)), c);
        const auto probs = p.data();
        for (std::size_t i = 0; i < m; ++i) {
            if ((probs[i] > 0.5) == (set.labels[start + i] != 0)) ++correct;
        }
    }
    return correct;
}

}  // namespace

double point_accuracy(const ToothReconstructor& model, ToothClass cls, const PatchImage& patch,
                      const PointSampleSet& points) {
    if (points.size() == 0) throw DomainError("point_accuracy: empty point set");
    NoGradGuard no_grad;
    const Tensor c = model.condition(cls, patch);
    return static_cast<double>(count_correct(model, c, points, points.size())) / static_cast<double>(points.size());
}

double point_accuracy(const ToothReconstructor& model, std::span<const ToothSample* const> shapes,
                      std::size_t max_points) {
    if (shapes.empty()) throw DomainError("point_accuracy: no shapes");
    NoGradGuard no_grad;
    std::size_t correct = 0, total = 0;
    for (const ToothSample* s : shapes) {
        const std::size_t n = max_points == 0 ? s->points.size() : std::min(max_points, s->points.size());
        const Tensor c = model.condition(s->record.cls, s->patch);
        correct += count_correct(model, c, s->points, n);
        total += n;
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

struct Snapshot {
    std::vector<std::vector<double>> params;
    std::vector<std::vector<double>> buffers;
};

Snapshot take_snapshot(ToothReconstructor& model) {
    Snapshot s;
    for (const auto& p : model.parameters()) s.params.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
    for (const auto& b : model.buffers()) s.buffers.push_back(*b.values);
    return s;
}

void restore_snapshot(ToothReconstructor& model, const Snapshot& s) {
    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) std::ranges::copy(s.params[i], params[i].tensor.mutable_data().begin());
    auto buffers = model.buffers();
    for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i].values = s.buffers[i];
}

}  // namespace

FitResult fit(ToothReconstructor& model, std::span<const ToothSample* const> train,
              std::span<const ToothSample* const> val, const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (train.empty()) throw DomainError("fit: empty training set");
    const auto val_set = val.empty() ? train : val;

    AdamState adam;
    adam.learning_rate = config.learning_rate;
    Rng rng(derive_seed(config.seed, 0xF17));

    const std::size_t batch = std::min(config.batch_size, train.size());
    const std::size_t steps_per_epoch =
        config.steps_per_epoch > 0 ? config.steps_per_epoch : (train.size() + batch - 1) / batch;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();

    FitResult result;
    Snapshot best;
    bool have_best = false;
    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double loss_sum = 0.0;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            std::vector<const ToothSample*> shapes;
            while (shapes.size() < batch) {
                if (cursor == order.size()) {
                    rng.shuffle(order.begin(), order.end());
                    cursor = 0;
                }
                shapes.push_back(train[order[cursor++]]);
            }
            loss_sum += train_step(model, adam, make_batch(shapes, config.points_per_step, rng));
            ++result.steps;
        }
        EpochRecord rec{epoch, loss_sum / static_cast<double>(steps_per_epoch),
                        point_accuracy(model, val_set, config.val_points)};
        result.history.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (!have_best || rec.val_accuracy > result.best_val_accuracy) {
            result.best_val_accuracy = rec.val_accuracy;
            result.best_epoch = epoch;
            best = take_snapshot(model);
            have_best = true;
            since_best = 0;
        } else if (++since_best > config.patience) {
            result.stopped_early = true;
            break;
        }
    }
    restore_snapshot(model, best);
    return result;
}

FitResult fit(ToothReconstructor& model, const Dataset& dataset, const TrainConfig& config,
              const EpochCallback& on_epoch) {
    const auto train = dataset.split(Split::train);
    const auto val = dataset.split(Split::val);
    return fit(model, train, val, config, on_epoch);
}

}  // namespace dentocc
