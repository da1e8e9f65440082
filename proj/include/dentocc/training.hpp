#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dentocc/adam.hpp"
#include "dentocc/random.hpp"
#include "dentocc/reconstructor.hpp"
#include "dentocc/synth.hpp"

namespace dentocc {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 10;        // shapes per step
    std::size_t points_per_step = 2048;  // per shape, subsampled from the stored T
    std::size_t max_epochs = 250;
    std::size_t steps_per_epoch = 0;  // 0: one pass over the training shapes
    std::size_t patience = 20;
    std::size_t val_points = 10000;  // per validation shape, 0 = all
    std::uint64_t seed = 0;

    void validate() const;
};

/// One optimizer step worth of shapes. Point rows are grouped by shape:
/// rows [s*P, (s+1)*P) belong to shape s.
struct TrainBatch {
    Tensor points;   // [S*P, 3]
    Tensor labels;   // [S*P]
    std::vector<ToothClass> classes;
    Tensor patches;  // [S,1,64,64]
};

TrainBatch make_batch(std::span<const ToothSample* const> shapes, std::size_t points_per_shape, Rng& rng);

/// Mean BCE over the batch, backpropagated, then one Adam update. Returns the pre-update loss.
double train_step(ToothReconstructor& model, AdamState& adam, const TrainBatch& batch);

/// Eval-mode point accuracy at threshold 0.5 over the first `max_points` of each shape (0 = all).
double point_accuracy(const ToothReconstructor& model, std::span<const ToothSample* const> shapes,
                      std::size_t max_points = 0);

/// Eval-mode accuracy on an arbitrary labelled point set.
double point_accuracy(const ToothReconstructor& model, ToothClass cls, const PatchImage& patch,
                      const PointSampleSet& points);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct FitResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_accuracy = 0.0;
    std::size_t steps = 0;
    bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded epoch loop with early stopping on validation accuracy; the model is
/// left holding the best-validation parameters. When `val` is empty the
/// training shapes are used for validation.
FitResult fit(ToothReconstructor& model, std::span<const ToothSample* const> train,
              std::span<const ToothSample* const> val, const TrainConfig& config, const EpochCallback& on_epoch = {});

FitResult fit(ToothReconstructor& model, const Dataset& dataset, const TrainConfig& config,
              const EpochCallback& on_epoch = {});

}  // namespace dentocc
