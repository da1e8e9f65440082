#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dentocc/tensor.hpp"

namespace dentocc {

struct AdamState {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step_count = 0;
    std::vector<std::vector<double>> m;  // one buffer per parameter, sized on first step
    std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update of `params` from their accumulated gradients.
///
/// Updates are lazy per element: a coordinate whose gradient is exactly zero
/// (or a parameter with no gradient at all) keeps its value and its moment
/// estimates, so untouched embedding rows stay bit-identical. The bias
/// correction uses the global step count.
void adam_step(std::span<Tensor> params, AdamState& state);

}  // namespace dentocc
