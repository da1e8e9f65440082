#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dentocc/tensor.hpp"

namespace dentocc {

enum class Conditioning { cx, cbn, none };

const char* conditioning_name(Conditioning c);
Conditioning parse_conditioning(const std::string& name);

struct NetworkConfig {
    std::size_t hidden = 128;     // feature width F
    std::size_t cond_dim = 128;   // condition vector length
    std::size_t blocks = 5;       // residual blocks
    Conditioning conditioning = Conditioning::cx;
    double alpha = 2.0;           // excitation scale
};

struct LinearLayer {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]
};

/// Conditional excitation: e = alpha * sigmoid(c W), y = e * x.
struct CXLayer {
    Tensor weight;  // [cond_dim, F]
    double alpha = 2.0;
};

/// Conditional batch normalization: y = gamma(c) * normalize(x) + beta(c).
struct CBNLayer {
    LinearLayer gamma_map;  // [cond_dim -> F]
    LinearLayer beta_map;
};

/// Excitation vectors alpha * sigmoid(c W) for conditions c [S,D] (or [D]) -> [S,F].
Tensor cx_excitation(const Tensor& conditions, const CXLayer& layer);

/// Scales row group s of x [T,F] by the excitation of condition s; T must
/// be a multiple of the number of conditions.
Tensor cx_forward(const Tensor& x, const Tensor& conditions, const CXLayer& layer);

Tensor cbn_forward(const Tensor& x, const Tensor& conditions, const CBNLayer& layer, BatchNormState& state, Mode mode);
Tensor cbn_forward_eval(const Tensor& x, const Tensor& conditions, const CBNLayer& layer, const BatchNormState& state);

/// Batch normalization followed by the configured conditioning.
struct ConditionedNorm {
    BatchNormState stats;
    Tensor gamma, beta;  // plain affine, used by the cx and none modes
    CXLayer cx;          // cx mode
    CBNLayer cbn;        // cbn mode
};

/// {norm, conditioning, ReLU, per-point linear}
struct SubBlock {
    ConditionedNorm norm;
    LinearLayer fc;
};

struct ResBlock {
    SubBlock first;
    SubBlock second;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;  // shares storage with the model
};

struct NamedBuffer {
    std::string name;
    std::vector<double>* values;
};

/// The conditional occupancy function: points [T,3] in the unit cube plus
/// one condition vector per row group -> occupancy probabilities [T].
class OccupancyNetwork {
public:
    OccupancyNetwork(const NetworkConfig& config, std::uint64_t seed);

    const NetworkConfig& config() const { return config_; }

    /// Head logits [T,1]. Train mode rejects points outside [-0.5,0.5]^3
    /// and updates the normalization statistics.
    Tensor logits(const Tensor& points, const Tensor& conditions, Mode mode);
    /// sigmoid(logits) flattened to [T].
    Tensor forward(const Tensor& points, const Tensor& conditions, Mode mode);
    /// Eval-mode forward without gradient recording; each output depends on
    /// its own point only.
    Tensor predict(const Tensor& points, const Tensor& conditions) const;

    std::vector<NamedTensor> parameters();
    std::vector<NamedBuffer> buffers();

    LinearLayer& input_projection() { return input_; }
    std::vector<ResBlock>& blocks() { return blocks_; }
    ConditionedNorm& head_norm() { return head_norm_; }
    LinearLayer& head() { return head_; }

private:
    template <class Norm>
    Tensor run(const Tensor& points, Norm&& norm) const;

    NetworkConfig config_;
    LinearLayer input_;
    std::vector<ResBlock> blocks_;
    ConditionedNorm head_norm_;
    LinearLayer head_;  // [F -> 1], zero-initialized
};

/// Count of points (rows of [T,3]) outside the closed cube [-0.5,0.5]^3.
std::size_t points_outside_unit_cube(const Tensor& points);

}  // namespace dentocc
