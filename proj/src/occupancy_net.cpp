#include "dentocc/occupancy_net.hpp"

#include <cmath>

#include "dentocc/error.hpp"
#include "dentocc/random.hpp"

namespace dentocc {

const char* conditioning_name(Conditioning c) {
    switch (c) {
        case Conditioning::cx: return "cx";
        case Conditioning::cbn: return "cbn";
        case Conditioning::none: return "none";
    }
    return "?";
}

Conditioning parse_conditioning(const std::string& name) {
    if (name == "cx") return Conditioning::cx;
    if (name == "cbn") return Conditioning::cbn;
    if (name == "none") return Conditioning::none;
    throw DomainError("unknown conditioning mode '" + name + "' (expected cx, cbn or none)");
}

namespace {

Tensor as_condition_matrix(const Tensor& conditions, std::size_t cond_dim) {
    if (!conditions.defined()) throw DimensionError("conditioning requires a condition vector");
    if (conditions.rank() == 1) {
        if (conditions.dim(0) != cond_dim) {
            throw DimensionError("condition vector has length " + std::to_string(conditions.dim(0)) + ", expected " +
                                 std::to_string(cond_dim));
        }
        return reshape(conditions, {1, cond_dim});
    }
    if (conditions.rank() != 2 || conditions.dim(1) != cond_dim) {
        throw DimensionError("conditions must be [S," + std::to_string(cond_dim) + "], got " +
                             shape_str(conditions.shape()));
    }
    return conditions;
}

LinearLayer uniform_linear(std::size_t in, std::size_t out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out), b(out);
    for (auto& v : w) v = rng.uniform(-bound, bound);
    for (auto& v : b) v = rng.uniform(-bound, bound);
    return {Tensor({in, out}, std::move(w), true), Tensor({out}, std::move(b), true)};
}

// Conditioning weights start at the identity map and draw nothing from the
// generator, so models of different modes built from one seed share every
// other parameter.
ConditionedNorm make_norm(const NetworkConfig& cfg) {
    ConditionedNorm n;
    n.stats = BatchNormState(cfg.hidden);
    n.gamma = Tensor::filled({cfg.hidden}, 1.0, true);
    n.beta = Tensor({cfg.hidden}, true);
    n.cx = {Tensor({cfg.cond_dim, cfg.hidden}, true), cfg.alpha};
    n.cbn.gamma_map = {Tensor({cfg.cond_dim, cfg.hidden}, true), Tensor::filled({cfg.hidden}, 1.0, true)};
    n.cbn.beta_map = {Tensor({cfg.cond_dim, cfg.hidden}, true), Tensor({cfg.hidden}, true)};
    return n;
}

}  // namespace

Tensor cx_excitation(const Tensor& conditions, const CXLayer& layer) {
    const Tensor c = as_condition_matrix(conditions, layer.weight.dim(0));
    return scale(sigmoid(matmul(c, layer.weight)), layer.alpha);
}

Tensor cx_forward(const Tensor& x, const Tensor& conditions, const CXLayer& layer) {
    if (x.rank() != 2 || x.dim(1) != layer.weight.dim(1)) {
        throw DimensionError("cx_forward: features " + shape_str(x.shape()) + " vs excitation width " +
                             std::to_string(layer.weight.dim(1)));
    }
    return group_affine(x, cx_excitation(conditions, layer), Tensor());
}

namespace {

Tensor cbn_affine(const Tensor& normalized, const Tensor& conditions, const CBNLayer& layer) {
    const Tensor c = as_condition_matrix(conditions, layer.gamma_map.weight.dim(0));
    return group_affine(normalized, linear(c, layer.gamma_map.weight, layer.gamma_map.bias),
                        linear(c, layer.beta_map.weight, layer.beta_map.bias));
}

}  // namespace

Tensor cbn_forward(const Tensor& x, const Tensor& conditions, const CBNLayer& layer, BatchNormState& state, Mode mode) {
    return cbn_affine(batch_normalize(x, state, mode), conditions, layer);
}

Tensor cbn_forward_eval(const Tensor& x, const Tensor& conditions, const CBNLayer& layer, const BatchNormState& state) {
    return cbn_affine(batch_normalize_eval(x, state), conditions, layer);
}

// ---------------------------------------------------------------------------

OccupancyNetwork::OccupancyNetwork(const NetworkConfig& config, std::uint64_t seed) : config_(config) {
    if (config.hidden == 0 || config.cond_dim == 0) throw DomainError("network widths must be positive");
    Rng rng(seed);
    input_ = uniform_linear(3, config.hidden, rng);
    blocks_.reserve(config.blocks);
    for (std::size_t b = 0; b < config.blocks; ++b) {
        ResBlock block;
        block.first.norm = make_norm(config);
        block.first.fc = uniform_linear(config.hidden, config.hidden, rng);
        block.second.norm = make_norm(config);
        block.second.fc = uniform_linear(config.hidden, config.hidden, rng);
        blocks_.push_back(std::move(block));
    }
    head_norm_ = make_norm(config);
    head_ = {Tensor({config.hidden, 1}, true), Tensor({1}, true)};
}

template <class Norm>
Tensor OccupancyNetwork::run(const Tensor& points, Norm&& norm) const {
    if (points.rank() != 2 || points.dim(1) != 3) {
        throw DimensionError("points must be [T,3], got " + shape_str(points.shape()));
    }
    auto sub_block = [&](const SubBlock& sb, const Tensor& x) { return linear(relu(norm(sb.norm, x)), sb.fc.weight, sb.fc.bias); };
    Tensor h = linear(points, input_.weight, input_.bias);
    for (const auto& block : blocks_) h = add(h, sub_block(block.second, sub_block(block.first, h)));
    return linear(relu(norm(head_norm_, h)), head_.weight, head_.bias);
}

Tensor OccupancyNetwork::logits(const Tensor& points, const Tensor& conditions, Mode mode) {
    if (mode == Mode::train && points_outside_unit_cube(points) > 0) {
        throw DomainError("training points must lie inside [-0.5,0.5]^3");
    }
    const Conditioning kind = config_.conditioning;
    return run(points, [&](const ConditionedNorm& n, const Tensor& x) {
        // run() is shared with the const eval path; train mode owns the statistics.
        auto& stats = const_cast<BatchNormState&>(n.stats);
        switch (kind) {
            case Conditioning::cbn: return cbn_forward(x, conditions, n.cbn, stats, mode);
            case Conditioning::cx: return cx_forward(batch_norm(x, n.gamma, n.beta, stats, mode), conditions, n.cx);
            case Conditioning::none: break;
        }
        return batch_norm(x, n.gamma, n.beta, stats, mode);
    });
}

Tensor OccupancyNetwork::forward(const Tensor& points, const Tensor& conditions, Mode mode) {
    Tensor z = logits(points, conditions, mode);
    return reshape(sigmoid(z), {z.dim(0)});
}

Tensor OccupancyNetwork::predict(const Tensor& points, const Tensor& conditions) const {
    NoGradGuard no_grad;
    const Conditioning kind = config_.conditioning;
    Tensor z = run(points, [&](const ConditionedNorm& n, const Tensor& x) {
        switch (kind) {
            case Conditioning::cbn: return cbn_forward_eval(x, conditions, n.cbn, n.stats);
            case Conditioning::cx:
                return cx_forward(group_affine(batch_normalize_eval(x, n.stats), n.gamma, n.beta), conditions, n.cx);
            case Conditioning::none: break;
        }
        return group_affine(batch_normalize_eval(x, n.stats), n.gamma, n.beta);
    });
    return reshape(sigmoid(z), {z.dim(0)});
}

std::vector<NamedTensor> OccupancyNetwork::parameters() {
    std::vector<NamedTensor> out;
    auto add_norm = [&](const std::string& prefix, ConditionedNorm& n) {
        if (config_.conditioning == Conditioning::cbn) {
            out.push_back({prefix + ".cbn.gamma.weight", n.cbn.gamma_map.weight});
            out.push_back({prefix + ".cbn.gamma.bias", n.cbn.gamma_map.bias});
            out.push_back({prefix + ".cbn.beta.weight", n.cbn.beta_map.weight});
            out.push_back({prefix + ".cbn.beta.bias", n.cbn.beta_map.bias});
            return;
        }
        out.push_back({prefix + ".bn.gamma", n.gamma});
        out.push_back({prefix + ".bn.beta", n.beta});
        if (config_.conditioning == Conditioning::cx) out.push_back({prefix + ".cx.weight", n.cx.weight});
    };
    out.push_back({"net.input.weight", input_.weight});
    out.push_back({"net.input.bias", input_.bias});
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const std::string p = "net.block" + std::to_string(b);
        add_norm(p + ".sub0", blocks_[b].first.norm);
        out.push_back({p + ".sub0.fc.weight", blocks_[b].first.fc.weight});
        out.push_back({p + ".sub0.fc.bias", blocks_[b].first.fc.bias});
        add_norm(p + ".sub1", blocks_[b].second.norm);
        out.push_back({p + ".sub1.fc.weight", blocks_[b].second.fc.weight});
        out.push_back({p + ".sub1.fc.bias", blocks_[b].second.fc.bias});
    }
    add_norm("net.head", head_norm_);
    out.push_back({"net.head.fc.weight", head_.weight});
    out.push_back({"net.head.fc.bias", head_.bias});
    return out;
}

std::vector<NamedBuffer> OccupancyNetwork::buffers() {
    std::vector<NamedBuffer> out;
    auto add_stats = [&](const std::string& prefix, ConditionedNorm& n) {
        out.push_back({prefix + ".running_mean", &n.stats.running_mean});
        out.push_back({prefix + ".running_var", &n.stats.running_var});
    };
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const std::string p = "net.block" + std::to_string(b);
        add_stats(p + ".sub0", blocks_[b].first.norm);
        add_stats(p + ".sub1", blocks_[b].second.norm);
    }
    add_stats("net.head", head_norm_);
    return out;
}

std::size_t points_outside_unit_cube(const Tensor& points) {
    std::size_t n = 0;
    const auto v = points.data();
    for (std::size_t r = 0; r + 2 < v.size(); r += 3) {
        if (std::abs(v[r]) > 0.5 || std::abs(v[r + 1]) > 0.5 || std::abs(v[r + 2]) > 0.5) ++n;
    }
    return n;
}

}  // namespace dentocc
