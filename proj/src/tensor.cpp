#include "dentocc/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "dentocc/error.hpp"

namespace dentocc {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

thread_local bool g_grad_enabled = true;

ConstMatrixMap as_matrix(const detail::Node& n) {
    return {n.value.data(), static_cast<Eigen::Index>(n.shape[0]), static_cast<Eigen::Index>(n.shape[1])};
}

ConstMatrixMap as_matrix(std::span<const double> s, std::size_t rows, std::size_t cols) {
    return {s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

MatrixMap as_matrix(std::span<double> s, std::size_t rows, std::size_t cols) {
    return {s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* arg) {
    if (!t.defined()) throw DimensionError(std::string(op) + ": undefined tensor for " + arg);
    if (t.rank() != rank) {
        throw DimensionError(std::string(op) + ": " + arg + " must have rank " + std::to_string(rank) +
                             ", got " + shape_str(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + what);
    }
}

std::span<double> detail::Node::grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
}

// ---------------------------------------------------------------------------
// Tensor handle
// ---------------------------------------------------------------------------

Tensor::Tensor(Shape shape, bool requires_grad)
    : Tensor(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad) {}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    for (auto d : shape) {
        if (d == 0) throw DimensionError("tensor extents must be positive: " + shape_str(shape));
    }
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("tensor of shape " + shape_str(shape) + " given " + std::to_string(values.size()) +
                             " values");
    }
    require_finite(values, "tensor construction");
    node_ = std::make_shared<detail::Node>();
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) throw DimensionError("axis out of range for shape " + shape_str(shape()));
    return node_->shape[axis];
}

std::size_t Tensor::numel() const { return node_->value.size(); }

std::span<const double> Tensor::data() const { return node_->value; }

std::span<double> Tensor::mutable_data() { return node_->value; }

double Tensor::item() const {
    if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

void Tensor::set_requires_grad(bool on) { node_->requires_grad = on; }

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::span<const double> Tensor::grad() const { return node_->grad; }

void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detached() const { return Tensor(node_->shape, node_->value, false); }

void Tensor::backward() const {
    if (numel() != 1) throw DimensionError("backward() requires a scalar, got " + shape_str(shape()));
    if (!requires_grad()) return;

    // Iterative post-order DFS gives a topological order of the recorded graph.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            detail::Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    node_->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() noexcept { return g_grad_enabled; }

Tensor detail::make_result(Shape shape, std::vector<double> values, std::initializer_list<Tensor> inputs,
                           std::function<void(Node&)> backward, const char* op_name) {
    require_finite(values, op_name);
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    if (g_grad_enabled) {
        bool any = false;
        for (const auto& in : inputs) any = any || (in.defined() && in.requires_grad());
        if (any) {
            node->requires_grad = true;
            for (const auto& in : inputs) {
                if (in.defined()) node->parents.push_back(in.node());
            }
            node->backward = std::move(backward);
        }
    }
    return Tensor(std::move(node));
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

namespace {

// Per-column sums accumulated row by row; unlike Eigen's vectorized
// reductions the result does not depend on buffer alignment.
std::vector<double> column_sums(const double* a, std::size_t rows, std::size_t cols) {
    std::vector<double> s(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a + r * cols;
        for (std::size_t c = 0; c < cols; ++c) s[c] += row[c];
    }
    return s;
}

// y = x W (+ b) where every output element is bias + sum over k in ascending
// order, so a row's result never depends on which other rows share the call.
void row_product(const double* x, const double* w, const double* b, double* y, std::size_t rows, std::size_t in,
                 std::size_t outf) {
    constexpr std::size_t kBlock = 4;
    auto fill_bias = [&](double* o) {
        if (b) std::copy(b, b + outf, o);
        else std::fill(o, o + outf, 0.0);
    };
    std::size_t r = 0;
    for (; r + kBlock <= rows; r += kBlock) {
        double* y0 = y + r * outf;
        for (std::size_t q = 0; q < kBlock; ++q) fill_bias(y0 + q * outf);
        for (std::size_t k = 0; k < in; ++k) {
            const double* wk = w + k * outf;
            const double a0 = x[r * in + k], a1 = x[(r + 1) * in + k], a2 = x[(r + 2) * in + k], a3 = x[(r + 3) * in + k];
            double* __restrict o0 = y0;
            double* __restrict o1 = y0 + outf;
            double* __restrict o2 = y0 + 2 * outf;
            double* __restrict o3 = y0 + 3 * outf;
            for (std::size_t j = 0; j < outf; ++j) {
                const double wj = wk[j];
                o0[j] += a0 * wj;
                o1[j] += a1 * wj;
                o2[j] += a2 * wj;
                o3[j] += a3 * wj;
            }
        }
    }
    for (; r < rows; ++r) {
        double* __restrict o = y + r * outf;
        fill_bias(o);
        for (std::size_t k = 0; k < in; ++k) {
            const double* wk = w + k * outf;
            const double a = x[r * in + k];
            for (std::size_t j = 0; j < outf; ++j) o[j] += a * wk[j];
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul", "a");
    require_rank(b, 2, "matmul", "b");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    std::vector<double> out(m * n);
    row_product(a.data().data(), b.data().data(), nullptr, out.data(), m, k, n);
    auto an = a.node(), bn = b.node();
    return detail::make_result({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](detail::Node& self) {
        auto dy = as_matrix(std::span<const double>(self.grad), m, n);
        if (an->requires_grad) as_matrix(an->grad_buffer(), m, k).noalias() += dy * as_matrix(*bn).transpose();
        if (bn->requires_grad) as_matrix(bn->grad_buffer(), k, n).noalias() += as_matrix(*an).transpose() * dy;
    }, "matmul");
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_rank(x, 2, "linear", "x");
    require_rank(weight, 2, "linear", "weight");
    require_rank(bias, 1, "linear", "bias");
    const std::size_t rows = x.dim(0), in = x.dim(1), outf = weight.dim(1);
    if (weight.dim(0) != in || bias.dim(0) != outf) {
        throw DimensionError("linear: x " + shape_str(x.shape()) + ", weight " + shape_str(weight.shape()) +
                             ", bias " + shape_str(bias.shape()));
    }
    std::vector<double> out(rows * outf);
    row_product(x.data().data(), weight.data().data(), bias.data().data(), out.data(), rows, in, outf);
    auto xn = x.node(), wn = weight.node(), bn = bias.node();
    return detail::make_result({rows, outf}, std::move(out), {x, weight, bias},
                               [xn, wn, bn, rows, in, outf](detail::Node& self) {
        auto dy = as_matrix(std::span<const double>(self.grad), rows, outf);
        if (xn->requires_grad) as_matrix(xn->grad_buffer(), rows, in).noalias() += dy * as_matrix(*wn).transpose();
        if (wn->requires_grad) as_matrix(wn->grad_buffer(), in, outf).noalias() += as_matrix(*xn).transpose() * dy;
        if (bn->requires_grad) {
            const auto sums = column_sums(self.grad.data(), rows, outf);
            auto g = bn->grad_buffer();
            for (std::size_t j = 0; j < outf; ++j) g[j] += sums[j];
        }
    }, "linear");
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    auto an = a.node(), bn = b.node();
    return detail::make_result(a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
        for (auto* p : {an.get(), bn.get()}) {
            if (!p->requires_grad) continue;
            auto g = p->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    }, "add");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    auto an = a.node(), bn = b.node();
    return detail::make_result(a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
        if (an->requires_grad) {
            auto g = an->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            auto g = bn->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->value[i];
        }
    }, "mul");
}

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * a.data()[i];
    auto an = a.node();
    return detail::make_result(a.shape(), std::move(out), {a}, [an, factor](detail::Node& self) {
        auto g = an->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
    }, "scale");
}

Tensor sum(const Tensor& a) {
    const double s = std::accumulate(a.data().begin(), a.data().end(), 0.0);
    auto an = a.node();
    return detail::make_result({1}, {s}, {a}, [an](detail::Node& self) {
        auto g = an->grad_buffer();
        for (auto& gi : g) gi += self.grad[0];
    }, "sum");
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
    }
    auto an = a.node();
    return detail::make_result(std::move(shape), a.node()->value, {a}, [an](detail::Node& self) {
        auto g = an->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }, "reshape");
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
    auto xn = x.node();
    return detail::make_result(x.shape(), std::move(out), {x}, [xn](detail::Node& self) {
        auto g = xn->grad_buffer();
        // Subgradient at exactly 0 is 0.
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (xn->value[i] > 0.0) g[i] += self.grad[i];
        }
    }, "relu");
}

Tensor sigmoid(const Tensor& x) {
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x.data()[i]));
    auto xn = x.node();
    return detail::make_result(x.shape(), std::move(out), {x}, [xn](detail::Node& self) {
        auto g = xn->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = self.value[i];
            g[i] += self.grad[i] * s * (1.0 - s);
        }
    }, "sigmoid");
}

Tensor group_affine(const Tensor& x, const Tensor& scale_t, const Tensor& shift) {
    require_rank(x, 2, "group_affine", "x");
    const std::size_t rows = x.dim(0), feats = x.dim(1);
    const std::size_t groups = scale_t.rank() == 1 ? 1 : scale_t.dim(0);
    const std::size_t scale_feats = scale_t.rank() == 1 ? scale_t.dim(0) : scale_t.dim(1);
    if (scale_t.rank() > 2 || scale_feats != feats) {
        throw DimensionError("group_affine: scale " + shape_str(scale_t.shape()) + " for x " + shape_str(x.shape()));
    }
    if (shift.defined() && shift.numel() != scale_t.numel()) {
        throw DimensionError("group_affine: shift " + shape_str(shift.shape()) + " vs scale " +
                             shape_str(scale_t.shape()));
    }
    if (rows % groups != 0) {
        throw DimensionError("group_affine: " + std::to_string(rows) + " rows not divisible into " +
                             std::to_string(groups) + " groups");
    }
    const std::size_t per_group = rows / groups;
    std::vector<double> out(rows * feats);
    const double* xs = x.data().data();
    const double* sc = scale_t.data().data();
    const double* sh = shift.defined() ? shift.data().data() : nullptr;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t g = r / per_group;
        for (std::size_t f = 0; f < feats; ++f) {
            double v = xs[r * feats + f] * sc[g * feats + f];
            if (sh) v += sh[g * feats + f];
            out[r * feats + f] = v;
        }
    }
    auto xn = x.node(), sn = scale_t.node();
    auto hn = shift.defined() ? shift.node() : nullptr;
    return detail::make_result(x.shape(), std::move(out), {x, scale_t, shift},
                               [xn, sn, hn, rows, feats, per_group](detail::Node& self) {
        const double* dy = self.grad.data();
        if (xn->requires_grad) {
            auto g = xn->grad_buffer();
            for (std::size_t r = 0; r < rows; ++r) {
                const std::size_t grp = r / per_group;
                for (std::size_t f = 0; f < feats; ++f) g[r * feats + f] += dy[r * feats + f] * sn->value[grp * feats + f];
            }
        }
        if (sn->requires_grad) {
            auto g = sn->grad_buffer();
            for (std::size_t r = 0; r < rows; ++r) {
                const std::size_t grp = r / per_group;
                for (std::size_t f = 0; f < feats; ++f) g[grp * feats + f] += dy[r * feats + f] * xn->value[r * feats + f];
            }
        }
        if (hn && hn->requires_grad) {
            auto g = hn->grad_buffer();
            for (std::size_t r = 0; r < rows; ++r) {
                const std::size_t grp = r / per_group;
                for (std::size_t f = 0; f < feats; ++f) g[grp * feats + f] += dy[r * feats + f];
            }
        }
    }, "group_affine");
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices) {
    require_rank(table, 2, "gather_rows", "table");
    const std::size_t rows = table.dim(0), width = table.dim(1);
    if (indices.empty()) throw DimensionError("gather_rows: no indices");
    std::vector<double> out(indices.size() * width);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows) {
            throw DomainError("gather_rows: index " + std::to_string(indices[i]) + " >= " + std::to_string(rows));
        }
        std::copy_n(table.data().data() + indices[i] * width, width, out.data() + i * width);
    }
    auto tn = table.node();
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return detail::make_result({indices.size(), width}, std::move(out), {table},
                               [tn, idx = std::move(idx), width](detail::Node& self) {
        auto g = tn->grad_buffer();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t f = 0; f < width; ++f) g[idx[i] * width + f] += self.grad[i * width + f];
        }
    }, "gather_rows");
}

Tensor batch_normalize_eval(const Tensor& x, const BatchNormState& state) {
    require_rank(x, 2, "batch_norm", "x");
    const std::size_t rows = x.dim(0), feats = x.dim(1);
    if (state.running_mean.size() != feats || state.running_var.size() != feats) {
        throw DimensionError("batch_norm: running statistics sized " + std::to_string(state.running_mean.size()) +
                             " for " + std::to_string(feats) + " features");
    }
    std::vector<double> inv_std(feats);
    for (std::size_t f = 0; f < feats; ++f) inv_std[f] = 1.0 / std::sqrt(state.running_var[f] + state.epsilon);
    std::vector<double> out(rows * feats);
    const double* xs = x.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t f = 0; f < feats; ++f) {
            out[r * feats + f] = (xs[r * feats + f] - state.running_mean[f]) * inv_std[f];
        }
    }
    auto xn = x.node();
    return detail::make_result(x.shape(), std::move(out), {x}, [xn, inv_std, rows, feats](detail::Node& self) {
        auto g = xn->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t f = 0; f < feats; ++f) g[r * feats + f] += self.grad[r * feats + f] * inv_std[f];
        }
    }, "batch_norm");
}

Tensor batch_normalize(const Tensor& x, BatchNormState& state, Mode mode) {
    if (mode == Mode::eval) return batch_normalize_eval(x, state);
    require_rank(x, 2, "batch_norm", "x");
    const std::size_t rows = x.dim(0), feats = x.dim(1);
    if (rows < 2) throw DimensionError("batch_norm: train mode needs at least 2 rows, got " + std::to_string(rows));
    if (state.running_mean.size() != feats || state.running_var.size() != feats) {
        throw DimensionError("batch_norm: running statistics sized " + std::to_string(state.running_mean.size()) +
                             " for " + std::to_string(feats) + " features");
    }
    const double* xv = x.data().data();
    const double n = static_cast<double>(rows);
    std::vector<double> mu = column_sums(xv, rows, feats);
    for (auto& m : mu) m /= n;
    std::vector<double> out(rows * feats);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t f = 0; f < feats; ++f) out[r * feats + f] = xv[r * feats + f] - mu[f];
    std::vector<double> var(feats, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t f = 0; f < feats; ++f) var[f] += out[r * feats + f] * out[r * feats + f];
    std::vector<double> inv_std(feats);
    for (std::size_t f = 0; f < feats; ++f) {
        var[f] /= n;
        inv_std[f] = 1.0 / std::sqrt(var[f] + state.epsilon);
    }
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t f = 0; f < feats; ++f) out[r * feats + f] *= inv_std[f];

    for (std::size_t f = 0; f < feats; ++f) {
        state.running_mean[f] = (1.0 - state.momentum) * state.running_mean[f] + state.momentum * mu[f];
        state.running_var[f] = (1.0 - state.momentum) * state.running_var[f] + state.momentum * var[f] * n / (n - 1.0);
    }

    auto xn = x.node();
    return detail::make_result(x.shape(), std::move(out), {x}, [xn, inv_std, rows, feats](detail::Node& self) {
        const double* xhat = self.value.data();
        const double* dxhat = self.grad.data();
        const auto sum_d = column_sums(dxhat, rows, feats);
        std::vector<double> sum_dx(feats, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t f = 0; f < feats; ++f) sum_dx[f] += dxhat[r * feats + f] * xhat[r * feats + f];
        const double n = static_cast<double>(rows);
        auto g = xn->grad_buffer();
        // dx = inv_std / n * (n * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t f = 0; f < feats; ++f) {
                const std::size_t i = r * feats + f;
                g[i] += (n * dxhat[i] - sum_d[f] - xhat[i] * sum_dx[f]) * (inv_std[f] / n);
            }
        }
    }, "batch_norm");
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, Mode mode) {
    require_rank(gamma, 1, "batch_norm", "gamma");
    require_rank(beta, 1, "batch_norm", "beta");
    return group_affine(batch_normalize(x, state, mode), gamma, beta);
}

Tensor bce_loss(const Tensor& p, const Tensor& t) {
    require_rank(p, 1, "bce_loss", "p");
    require_same_shape(p, t, "bce_loss");
    const std::size_t n = p.numel();
    double total = 0.0;
    std::vector<double> clamped(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ti = t.data()[i];
        if (ti != 0.0 && ti != 1.0) throw DomainError("bce_loss: label " + std::to_string(ti) + " is not 0 or 1");
        const double pi = std::clamp(p.data()[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
        clamped[i] = pi;
        total += ti * std::log(pi) + (1.0 - ti) * std::log(1.0 - pi);
    }
    auto pn = p.node(), tn = t.node();
    return detail::make_result({1}, {-total / static_cast<double>(n)}, {p},
                               [pn, tn, clamped = std::move(clamped), n](detail::Node& self) {
        auto g = pn->grad_buffer();
        const double s = self.grad[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double pi = clamped[i], ti = tn->value[i];
            g[i] += s * (-(ti / pi) + (1.0 - ti) / (1.0 - pi));
        }
    }, "bce_loss");
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
    Tensor probe(x.shape(), std::vector<double>(x.data().begin(), x.data().end()), true);
    Tensor y = f(probe);
    if (y.numel() != 1) throw DimensionError("grad_check: f must be scalar-valued");
    y.backward();
    std::vector<double> analytic(probe.numel(), 0.0);
    if (probe.has_grad()) std::copy(probe.grad().begin(), probe.grad().end(), analytic.begin());

    NoGradGuard no_grad;
    double worst = 0.0;
    auto values = probe.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + h;
        const double up = f(probe).item();
        values[i] = saved - h;
        const double down = f(probe).item();
        values[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
    }
    return worst;
}

}  // namespace dentocc
