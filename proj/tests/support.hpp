#pragma once

// Shared fixtures for the unit and acceptance binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dentocc/occupancy_net.hpp"
#include "dentocc/random.hpp"
#include "dentocc/tensor.hpp"

namespace dentocc::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.normal(0.0, stddev);
    return Tensor(std::move(shape), std::move(v), requires_grad);
}

inline Tensor random_uniform(Shape shape, Rng& rng, double lo, double hi) {
    std::vector<double> v(shape_numel(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(v));
}

inline Tensor random_labels(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(rng.below(2));
    return Tensor({n}, std::move(v));
}

/// Evaluates `f` with the tensor in `slot` replaced by the probe.
inline double grad_check_slot(Tensor& slot, const std::function<Tensor()>& f, double h = 1e-3) {
    const Tensor original = slot;
    const double err = grad_check([&](const Tensor& probe) {
        slot = probe;
        Tensor y = f();
        slot = original;
        return y;
    }, original, h);
    slot = original;
    return err;
}

inline void randomize_parameters(OccupancyNetwork& net, Rng& rng, double stddev) {
    for (auto& p : net.parameters()) {
        for (auto& v : p.tensor.mutable_data()) v += rng.normal(0.0, stddev);
    }
}

/// 2-block, width-8 model with every parameter perturbed away from its
/// initialization so each path carries gradient.
inline OccupancyNetwork miniature_model(Conditioning mode, std::uint64_t seed) {
    NetworkConfig cfg;
    cfg.hidden = 8;
    cfg.cond_dim = 4;
    cfg.blocks = 2;
    cfg.conditioning = mode;
    OccupancyNetwork net(cfg, seed);
    Rng rng(derive_seed(seed, 99));
    randomize_parameters(net, rng, 0.3);
    return net;
}

struct GradientCase {
    std::string name;
    std::function<double(std::uint64_t)> max_error;  // per seed
};

/// Every differentiable primitive plus the miniature model in both
/// conditioning modes; each case checks all of its differentiable inputs.
inline std::vector<GradientCase> gradient_cases() {
    std::vector<GradientCase> cases;

    cases.push_back({"linear", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = random_tensor({4, 3}, rng), w = random_tensor({3, 5}, rng), b = random_tensor({5}, rng);
        auto loss = [&] { return sum(mul(linear(x, w, b), linear(x, w, b))); };
        return std::max({grad_check_slot(x, loss), grad_check_slot(w, loss), grad_check_slot(b, loss)});
    }});

    for (Mode mode : {Mode::train, Mode::eval}) {
        cases.push_back({mode == Mode::train ? "batch_norm/train" : "batch_norm/eval", [mode](std::uint64_t seed) {
            Rng rng(seed);
            Tensor x = random_tensor({6, 3}, rng), g = random_tensor({3}, rng), b = random_tensor({3}, rng);
            Tensor probe = random_tensor({6, 3}, rng);
            BatchNormState st(3);
            for (std::size_t f = 0; f < 3; ++f) {
                st.running_mean[f] = rng.normal();
                st.running_var[f] = rng.uniform(0.5, 2.0);
            }
            auto loss = [&] {
                BatchNormState local = st;
                return sum(mul(batch_norm(x, g, b, local, mode), probe));
            };
            return std::max({grad_check_slot(x, loss), grad_check_slot(g, loss), grad_check_slot(b, loss)});
        }});
    }

    cases.push_back({"relu", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = random_tensor({10}, rng), w = random_tensor({10}, rng);
        for (auto& v : x.mutable_data()) if (std::abs(v) < 0.01) v = 0.5;  // keep away from the kink
        return grad_check_slot(x, [&] { return sum(mul(relu(x), w)); });
    }});

    cases.push_back({"sigmoid", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = random_tensor({10}, rng, 2.0), w = random_tensor({10}, rng);
        return grad_check_slot(x, [&] { return sum(mul(sigmoid(x), w)); });
    }});

    cases.push_back({"bce_loss", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor p = random_uniform({8}, rng, 0.05, 0.95), t = random_labels(8, rng);
        return grad_check_slot(p, [&] { return bce_loss(p, t); });
    }});

    cases.push_back({"cx_forward", [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor x = random_tensor({6, 5}, rng), c = random_tensor({2, 4}, rng), probe = random_tensor({6, 5}, rng);
        CXLayer layer{random_tensor({4, 5}, rng), 2.0};
        auto loss = [&] { return sum(mul(cx_forward(x, c, layer), probe)); };
        return std::max({grad_check_slot(x, loss), grad_check_slot(c, loss), grad_check_slot(layer.weight, loss)});
    }});

    for (Mode mode : {Mode::train, Mode::eval}) {
        cases.push_back({mode == Mode::train ? "cbn_forward/train" : "cbn_forward/eval", [mode](std::uint64_t seed) {
            Rng rng(seed);
            Tensor x = random_tensor({6, 5}, rng), c = random_tensor({2, 4}, rng), probe = random_tensor({6, 5}, rng);
            CBNLayer layer{{random_tensor({4, 5}, rng), random_tensor({5}, rng)},
                           {random_tensor({4, 5}, rng), random_tensor({5}, rng)}};
            BatchNormState st(5);
            auto loss = [&] {
                BatchNormState local = st;
                return sum(mul(cbn_forward(x, c, layer, local, mode), probe));
            };
            return std::max({grad_check_slot(x, loss), grad_check_slot(c, loss),
                             grad_check_slot(layer.gamma_map.weight, loss), grad_check_slot(layer.gamma_map.bias, loss),
                             grad_check_slot(layer.beta_map.weight, loss), grad_check_slot(layer.beta_map.bias, loss)});
        }});
    }

    for (Conditioning cond : {Conditioning::cx, Conditioning::cbn}) {
        cases.push_back({std::string("miniature model/") + conditioning_name(cond), [cond](std::uint64_t seed) {
            OccupancyNetwork net = miniature_model(cond, seed);
            Rng rng(derive_seed(seed, 7));
            Tensor points = random_uniform({12, 3}, rng, -0.45, 0.45);
            Tensor c = random_tensor({2, 4}, rng);
            Tensor labels = random_labels(12, rng);
            auto loss = [&] { return bce_loss(net.forward(points, c, Mode::train), labels); };
            // A small step keeps the differences from straddling ReLU kinks.
            auto grad_check_slot = [&](Tensor& slot, const std::function<Tensor()>& f) {
                return testing::grad_check_slot(slot, f, 1e-6);
            };
            double worst = std::max(grad_check_slot(points, loss), grad_check_slot(c, loss));
            for (Tensor* slot : {&net.input_projection().weight, &net.input_projection().bias, &net.head().weight,
                                 &net.head().bias}) {
                worst = std::max(worst, grad_check_slot(*slot, loss));
            }
            auto check_norm = [&](ConditionedNorm& n) {
                if (cond == Conditioning::cx) {
                    worst = std::max({worst, grad_check_slot(n.cx.weight, loss), grad_check_slot(n.gamma, loss),
                                      grad_check_slot(n.beta, loss)});
                } else {
                    worst = std::max({worst, grad_check_slot(n.cbn.gamma_map.weight, loss),
                                      grad_check_slot(n.cbn.beta_map.bias, loss)});
                }
            };
            for (auto& block : net.blocks()) {
                check_norm(block.first.norm);
                check_norm(block.second.norm);
                worst = std::max({worst, grad_check_slot(block.first.fc.weight, loss),
                                  grad_check_slot(block.second.fc.bias, loss)});
            }
            check_norm(net.head_norm());
            return worst;
        }});
    }
    return cases;
}

}  // namespace dentocc::testing
