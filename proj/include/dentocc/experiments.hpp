#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dentocc/metrics.hpp"
#include "dentocc/training.hpp"

namespace dentocc {

/// Reconstructs and scores every sample against its regenerated oracle.
std::vector<ToothEvaluation> evaluate_samples(const ToothReconstructor& model, std::span<const ToothSample* const> samples,
                                              const EvalConfig& config);

struct AblationVariant {
    std::string name;
    Conditioning conditioning = Conditioning::cx;
    bool class_embedding = true;
};

/// CBN only, CX only, CBN + class, CX + class.
std::vector<AblationVariant> ablation_variants();

struct AblationConfig {
    TrainConfig train;
    EvalConfig eval;
    double alpha = 2.0;
    std::size_t seeds = 3;
    std::uint64_t seed = 0;

    void validate() const;
    std::uint64_t run_seed(std::size_t s) const;
};

struct AblationRun {
    std::uint64_t seed = 0;
    FitResult fit;
    PooledMetrics metrics;
};

struct AblationRow {
    AblationVariant variant;
    std::vector<AblationRun> runs;

    /// Median over seeds of the pooled mean test IoU.
    double median_iou() const;
};

using LogFn = std::function<void(const std::string&)>;

/// Trains and evaluates every variant under the same seeds and budget.
std::vector<AblationRow> run_ablation(const Dataset& dataset, const AblationConfig& config, const LogFn& log = {});

std::string ablation_json(const std::vector<AblationRow>& rows, const AblationConfig& config);
std::string ablation_markdown(const std::vector<AblationRow>& rows);

}  // namespace dentocc
