#include "dentocc/reconstructor.hpp"

#include <cmath>

#include "dentocc/random.hpp"

namespace dentocc {

ToothReconstructor::ToothReconstructor(const ReconstructorConfig& config, std::uint64_t seed)
    : config_(config),
      embedding_(config.net.cond_dim, derive_seed(seed, 1)),
      encoder_(config.net.cond_dim, derive_seed(seed, 2)),
      net_(config.net, derive_seed(seed, 3)) {}

Tensor ToothReconstructor::condition(std::span<const ToothClass> classes, const Tensor& patches) const {
    if (!conditioned()) return Tensor();
    if (patches.rank() != 4 || patches.dim(0) != classes.size()) {
        throw DimensionError("condition: " + std::to_string(classes.size()) + " classes but patches " +
                             shape_str(patches.shape()));
    }
    Tensor c = encoder_.encode(patches);
    if (config_.use_class_embedding) c = make_condition(embedding_.embed(classes), c);
    return c;
}

Tensor ToothReconstructor::condition(ToothClass cls, const PatchImage& patch) const {
    const PatchImage one[] = {patch};
    const ToothClass cls_one[] = {cls};
    return condition(cls_one, patches_to_tensor(one));
}

std::vector<NamedTensor> ToothReconstructor::parameters() {
    std::vector<NamedTensor> out;
    if (conditioned()) {
        if (config_.use_class_embedding) out.push_back({"embed.table", embedding_.table()});
        auto& stages = encoder_.stages();
        for (std::size_t i = 0; i < stages.size(); ++i) {
            out.push_back({"encoder.conv" + std::to_string(i) + ".weight", stages[i].weight});
            out.push_back({"encoder.conv" + std::to_string(i) + ".bias", stages[i].bias});
        }
        out.push_back({"encoder.fc.weight", encoder_.fc_weight()});
        out.push_back({"encoder.fc.bias", encoder_.fc_bias()});
    }
    for (auto& p : net_.parameters()) out.push_back(std::move(p));
    return out;
}

std::vector<NamedBuffer> ToothReconstructor::buffers() { return net_.buffers(); }

TensorArchive ToothReconstructor::to_archive() {
    TensorArchive archive;
    const auto& n = config_.net;
    const double meta[] = {static_cast<double>(static_cast<int>(n.conditioning)), n.alpha,
                           config_.use_class_embedding ? 1.0 : 0.0, static_cast<double>(n.blocks),
                           static_cast<double>(n.hidden), static_cast<double>(n.cond_dim)};
    archive.add("meta.config", {6}, meta);
    for (const auto& p : parameters()) archive.add(p.name, p.tensor.shape(), p.tensor.data());
    for (const auto& b : buffers()) archive.add(b.name, {b.values->size()}, *b.values);
    return archive;
}

ToothReconstructor ToothReconstructor::from_archive(const TensorArchive& archive) {
    const auto meta = archive.at("meta.config").to_doubles();
    if (meta.size() != 6) throw FormatError("meta.config must hold 6 values");
    const auto mode = static_cast<int>(meta[0]);
    if (mode < 0 || mode > 2) throw FormatError("meta.config has an unknown conditioning mode");
    ReconstructorConfig cfg;
    cfg.net.conditioning = static_cast<Conditioning>(mode);
    cfg.net.alpha = meta[1];
    cfg.use_class_embedding = meta[2] != 0.0;
    cfg.net.blocks = static_cast<std::size_t>(meta[3]);
    cfg.net.hidden = static_cast<std::size_t>(meta[4]);
    cfg.net.cond_dim = static_cast<std::size_t>(meta[5]);

    ToothReconstructor model(cfg, 0);
    for (auto& p : model.parameters()) {
        const auto& stored = archive.at(p.name);
        if (stored.shape != p.tensor.shape()) {
            throw FormatError("tensor '" + p.name + "' has shape " + shape_str(stored.shape) + ", expected " +
                              shape_str(p.tensor.shape()));
        }
        auto dst = p.tensor.mutable_data();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = stored.values[i];
    }
    for (auto& b : model.buffers()) {
        const auto& stored = archive.at(b.name);
        if (stored.values.size() != b.values->size()) throw FormatError("buffer '" + b.name + "' has the wrong length");
        *b.values = stored.to_doubles();
    }
    return model;
}

}  // namespace dentocc
