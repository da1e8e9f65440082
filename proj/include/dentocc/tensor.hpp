#pragma once

/**
 * Minimal reverse-mode differentiable tensor.
 *
 * A Tensor is a cheap shared handle onto a graph node holding row-major
 * 64-bit values, an optional gradient buffer and, for results of
 * differentiable operations, the closure that pushes the node's gradient
 * back into its inputs. Graph edges are recorded only while gradient
 * recording is enabled and at least one input requires a gradient.
 *
 * @code
 *   Tensor w({2, 1}, {0.5, -0.25}, true);
 *   Tensor x({3, 2}, {...});
 *   Tensor loss = sum(mul(matmul(x, w), matmul(x, w)));
 *   loss.backward();
 *   auto dw = w.grad();
 * @endcode
 */

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dentocc {

using Shape = std::vector<std::size_t>;

enum class Mode { train, eval };

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    /// Gradient buffer, zero-initialized on first use.
    std::span<double> grad_buffer();
};

}  // namespace detail

class Tensor {
public:
    Tensor() = default;
    /// Zero-filled tensor.
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor filled(Shape shape, double value, bool requires_grad = false);

    bool defined() const noexcept { return static_cast<bool>(node_); }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const;

    std::span<const double> data() const;
    /// Direct write access for leaves (initialization, optimizer updates).
    std::span<double> mutable_data();
    double item() const;

    bool requires_grad() const;
    void set_requires_grad(bool on);
    bool has_grad() const;
    std::span<const double> grad() const;
    void zero_grad();

    /// Reverse-mode sweep from this scalar; gradients accumulate into every
    /// reachable tensor that requires them.
    void backward() const;

    /// Value copy without graph history.
    Tensor detached() const;

    const std::shared_ptr<detail::Node>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled() noexcept;

/// Throws NumericError naming `what` if any value is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

namespace detail {

/// Builds the result node of a differentiable operation. The closure is
/// attached only if recording is on and some input requires a gradient.
Tensor make_result(Shape shape, std::vector<double> values, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward, const char* op_name);

}  // namespace detail

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// y = xW + b with x [B,in], W [in,out], b [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// Row-group affine map: rows of x [T,F] are split into S equal contiguous
/// groups and group s is transformed as x * scale[s] + shift[s].
/// `scale` and `shift` are [S,F] (or [F] for S = 1); `shift` may be undefined.
Tensor group_affine(const Tensor& x, const Tensor& scale, const Tensor& shift);

/// Gathers rows of `table` [R,D] -> [indices.size(), D]; the gradient
/// scatters back into exactly the gathered rows.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices);

/// Running statistics of a batch-normalization layer.
struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;

    BatchNormState() = default;
    explicit BatchNormState(std::size_t features)
        : running_mean(features, 0.0), running_var(features, 1.0) {}
};

/// Feature-wise standardization of x [B,F]. Train mode uses the biased batch
/// variance, requires B >= 2 and moves the running statistics (unbiased
/// variance) by `momentum`. Eval mode reads the running statistics only.
Tensor batch_normalize(const Tensor& x, BatchNormState& state, Mode mode);
Tensor batch_normalize_eval(const Tensor& x, const BatchNormState& state);

/// Standardization followed by the per-feature affine map gamma, beta [F].
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  Mode mode);

inline constexpr double kProbabilityClamp = 1e-7;

/// Mean binary cross-entropy of probabilities p [T] against labels t [T] in {0,1}.
/// p is clamped into [1e-7, 1 - 1e-7]; the derivative is evaluated at the
/// clamped probability.
Tensor bce_loss(const Tensor& p, const Tensor& t);

/// Largest |analytic - central difference| / max(1, |analytic|) over the
/// coordinates of x, for a scalar-valued f.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h = 1e-3);

}  // namespace dentocc
