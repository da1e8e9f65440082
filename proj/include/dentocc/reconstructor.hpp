#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dentocc/checkpoint.hpp"
#include "dentocc/conditioning.hpp"
#include "dentocc/occupancy_net.hpp"

namespace dentocc {

struct ReconstructorConfig {
    NetworkConfig net;
    bool use_class_embedding = true;
};

/// Class embedding + patch encoder + occupancy network, trained jointly.
class ToothReconstructor {
public:
    explicit ToothReconstructor(const ReconstructorConfig& config = {}, std::uint64_t seed = 0);

    const ReconstructorConfig& config() const { return config_; }
    bool conditioned() const { return config_.net.conditioning != Conditioning::none; }

    /// [S,128] condition rows for S shapes; undefined when the network is unconditioned.
    Tensor condition(std::span<const ToothClass> classes, const Tensor& patches) const;
    Tensor condition(ToothClass cls, const PatchImage& patch) const;

    OccupancyNetwork& network() { return net_; }
    const OccupancyNetwork& network() const { return net_; }
    ClassEmbedding& embedding() { return embedding_; }
    PatchEncoder& encoder() { return encoder_; }

    /// Every trainable tensor of the active configuration, with stable names.
    std::vector<NamedTensor> parameters();
    std::vector<NamedBuffer> buffers();

    /// Parameters, running statistics and "meta.*" configuration tensors.
    TensorArchive to_archive();
    static ToothReconstructor from_archive(const TensorArchive& archive);

    void save(const std::filesystem::path& path) { to_archive().save(path); }
    static ToothReconstructor load(const std::filesystem::path& path) { return from_archive(TensorArchive::load(path)); }

private:
    ReconstructorConfig config_;
    ClassEmbedding embedding_;
    PatchEncoder encoder_;
    OccupancyNetwork net_;
};

}  // namespace dentocc
