#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dentocc/image.hpp"
#include "dentocc/tensor.hpp"
#include "dentocc/tooth_class.hpp"

namespace dentocc {

inline constexpr std::size_t kConditionDim = 128;
inline constexpr std::size_t kPatchSize = 64;

/// A 64x64 tooth patch with intensities in [0,1].
using PatchImage = GrayImage;

/// Throws unless `patch` is 64x64 with every pixel in [0,1].
void validate_patch(const PatchImage& patch);

/// Crops one tooth out of a radiograph using its segmentation channel.
///
/// The mask is `seg_channel >= threshold`. Masked-out pixels are zeroed, the
/// mask's bounding box is grown symmetrically along its shorter side into a
/// square (reads beyond the image border return 0), and the square crop is
/// resampled to 64x64 with corner-aligned bilinear interpolation.
PatchImage extract_patch(const GrayImage& px_image, const GrayImage& seg_channel, double threshold = 0.5);

/// Corner-aligned bilinear resampling (output corners coincide with input corners).
GrayImage resample_bilinear(const GrayImage& src, std::size_t rows, std::size_t cols);

/// Packs patches into a [S,1,64,64] tensor.
Tensor patches_to_tensor(std::span<const PatchImage> patches);

/// Learnable per-class vectors, one row per universal tooth number.
class ClassEmbedding {
public:
    ClassEmbedding(std::size_t dim, std::uint64_t seed);

    /// [S, dim] rows for the given classes.
    Tensor embed(std::span<const ToothClass> classes) const;

    Tensor& table() { return table_; }
    const Tensor& table() const { return table_; }

private:
    Tensor table_;  // [32, dim]
};

/// 3x3 convolution, stride 2, zero padding 1: x [S,Cin,H,W], weight
/// [Cout,Cin,3,3], bias [Cout] -> [S,Cout,ceil(H/2),ceil(W/2)].
Tensor conv2d_stride2(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Mean over the spatial axes: [S,C,H,W] -> [S,C].
Tensor global_avg_pool(const Tensor& x);

/// Four stride-2 conv stages (1 -> 8 -> 16 -> 32 -> 64 channels, ReLU),
/// global average pooling, then a linear map to the condition dimension.
class PatchEncoder {
public:
    static constexpr std::size_t kStages = 4;

    PatchEncoder(std::size_t out_dim, std::uint64_t seed);

    /// patches [S,1,64,64] -> [S, out_dim]
    Tensor encode(const Tensor& patches) const;
    Tensor encode(const PatchImage& patch) const;

    struct Stage {
        Tensor weight;
        Tensor bias;
    };
    std::vector<Stage>& stages() { return stages_; }
    const std::vector<Stage>& stages() const { return stages_; }
    Tensor& fc_weight() { return fc_weight_; }
    Tensor& fc_bias() { return fc_bias_; }
    const Tensor& fc_weight() const { return fc_weight_; }
    const Tensor& fc_bias() const { return fc_bias_; }

private:
    std::vector<Stage> stages_;
    Tensor fc_weight_;  // [64, out_dim]
    Tensor fc_bias_;    // [out_dim]
};

/// Elementwise sum of class and patch embeddings ([S,D] each, or [D]).
Tensor make_condition(const Tensor& class_vec, const Tensor& patch_vec);

}  // namespace dentocc
