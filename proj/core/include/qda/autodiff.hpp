#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "qda/tensor.hpp"

namespace qda {

// Raised when a forward value or gradient turns out non-finite while the
// finite check is enabled, or when linear algebra fails numerically.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
struct Node;
}

// Handle to a node of a reverse-mode autodiff graph. Operations on Vars build
// the graph; backward() on a scalar accumulates gradients into every
// reachable leaf that was created with requires_grad = true.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  static Var param(Tensor value) { return Var(std::move(value), true); }
  static Var constant(Tensor value) { return Var(std::move(value), false); }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const;
  // Leaf-only in-place access, used by optimizers.
  Tensor& mutable_value();

  bool requires_grad() const;
  bool has_grad() const;
  const Tensor& grad() const;
  void zero_grad();

  const std::vector<int>& shape() const { return value().shape(); }

  // Runs reverse-mode accumulation from this scalar.
  void backward() const;

  std::shared_ptr<detail::Node> node() const { return node_; }
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Globally enables/disables the per-op finite check on forward values.
void set_check_finite(bool enabled);
bool check_finite_enabled();

// While alive, ops record no graph structure; forwards become plain values.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// ---- elementwise / scalar ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var exp_of(const Var& a);
Var log_of(const Var& a);
Var sqrt_of(const Var& a);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var clamp(const Var& a, double lo, double hi);

// ---- reductions / shaping ----
Var sum(const Var& a);
Var mean(const Var& a);
Var reshape(const Var& a, std::vector<int> shape);

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);
// y = x * w^T + b with x:(N,din), w:(dout,din), b:(dout).
Var affine(const Var& x, const Var& w, const Var& b);
// x:(N,Cin,H,W), w:(Cout,Cin,kh,kw), b:(Cout).
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

// ---- feature-map ops ----
Var global_avg_pool(const Var& x);  // (N,C,H,W) -> (N,C)
struct ChannelStatsVar {
  Var mean;    // (N,C)
  Var stddev;  // (N,C), population convention (divide by H*W)
};
ChannelStatsVar channel_stats(const Var& x);
Var broadcast_chw(const Var& s, int h, int w);  // (N,C) -> (N,C,H,W)

// ---- batch-dimension ops (dim 0 is the batch) ----
Var gather_rows(const Var& x, const std::vector<int>& idx);
// Replaces rows idx (all distinct) of x with the rows of repl.
Var scatter_replace_rows(const Var& x, const std::vector<int>& idx, const Var& repl);
Var scale_rows(const Var& x, const std::vector<double>& factors);

// ---- domain-adaptation specific ----
// Identity forward; multiplies the incoming gradient by -scale on backward.
Var gradient_reversal(const Var& x, double scale);
// Cuts the graph: same value, no gradient flow.
Var detach(const Var& x);
// a:(n,d), b:(m,d) -> (n,m) of squared euclidean distances.
Var pairwise_sqdist(const Var& a, const Var& b);
// sum(x .* coeff) as a scalar, coeff held constant.
Var weighted_sum(const Var& x, const Tensor& coeff);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }

}  // namespace qda
