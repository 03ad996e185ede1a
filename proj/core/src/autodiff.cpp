#include "qda/autodiff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_set>

namespace qda {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;
  bool grad_alloc = false;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Tensor& ensure_grad() {
    if (!grad_alloc) {
      grad = Tensor::zeros(value.shape());
      grad_alloc = true;
    }
    return grad;
  }
};

}  // namespace detail

using detail::Node;

namespace {

std::atomic<bool> g_check_finite{true};
thread_local bool g_no_grad = false;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

std::shared_ptr<Node> make_node(const char* op, Tensor value, std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backward) {
  if (g_check_finite.load(std::memory_order_relaxed) && !value.all_finite())
    throw NumericError(std::string(op) + " produced a non-finite value");
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (!g_no_grad) {
    bool rg = false;
    for (const auto& p : parents)
      if (p && p->requires_grad) rg = true;
    if (rg) {
      n->requires_grad = true;
      n->parents = std::move(parents);
      n->backward = std::move(backward);
    }
  }
  return n;
}

void axpy(Tensor& dst, const Tensor& src, double c = 1.0) {
  double* d = dst.data();
  const double* s = src.data();
  const long n = dst.size();
  for (long i = 0; i < n; ++i) d[i] += c * s[i];
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value()))
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

long row_stride(const Tensor& t) {
  if (t.rank() < 1 || t.dim(0) == 0) throw std::invalid_argument("batch op on tensor without a leading axis");
  return t.size() / t.dim(0);
}

}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad && !g_no_grad;
}

const Tensor& Var::value() const {
  if (!node_) throw std::logic_error("value() on an empty Var");
  return node_->value;
}

Tensor& Var::mutable_value() {
  if (!node_) throw std::logic_error("mutable_value() on an empty Var");
  if (!node_->parents.empty()) throw std::logic_error("mutable_value() is only valid on leaf Vars");
  return node_->value;
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }

bool Var::has_grad() const { return node_ && node_->grad_alloc; }

const Tensor& Var::grad() const {
  if (!has_grad()) throw std::logic_error("grad() before backward()");
  return node_->grad;
}

void Var::zero_grad() {
  if (node_ && node_->grad_alloc) node_->grad.fill(0.0);
}

void Var::backward() const {
  if (!node_) throw std::logic_error("backward() on an empty Var");
  if (node_->value.size() != 1) throw std::invalid_argument("backward() requires a scalar root");
  if (!node_->requires_grad) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* n;
    std::size_t i;
  };
  std::vector<Frame> stack;
  visited.insert(node_.get());
  stack.push_back({node_.get(), 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.i < f.n->parents.size()) {
      Node* p = f.n->parents[f.i++].get();
      if (p && p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

void set_check_finite(bool enabled) { g_check_finite.store(enabled, std::memory_order_relaxed); }
bool check_finite_enabled() { return g_check_finite.load(std::memory_order_relaxed); }

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out = a.value();
  axpy(out, b.value());
  return Var(make_node("add", std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (int k = 0; k < 2; ++k)
      if (self.parents[k]->requires_grad) axpy(self.parents[k]->ensure_grad(), self.grad);
  }));
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  axpy(out, b.value(), -1.0);
  return Var(make_node("sub", std::move(out), {a.node(), b.node()}, [](Node& self) {
    if (self.parents[0]->requires_grad) axpy(self.parents[0]->ensure_grad(), self.grad);
    if (self.parents[1]->requires_grad) axpy(self.parents[1]->ensure_grad(), self.grad, -1.0);
  }));
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = a.value()[i] * b.value()[i];
  return Var(make_node("mul", std::move(out), {a.node(), b.node()}, [](Node& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    const long n = self.grad.size();
    if (self.parents[0]->requires_grad) {
      Tensor& ga = self.parents[0]->ensure_grad();
      for (long i = 0; i < n; ++i) ga[i] += self.grad[i] * bv[i];
    }
    if (self.parents[1]->requires_grad) {
      Tensor& gb = self.parents[1]->ensure_grad();
      for (long i = 0; i < n; ++i) gb[i] += self.grad[i] * av[i];
    }
  }));
}

Var div(const Var& a, const Var& b) {
  require_same_shape("div", a, b);
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = a.value()[i] / b.value()[i];
  return Var(make_node("div", std::move(out), {a.node(), b.node()}, [](Node& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    const long n = self.grad.size();
    if (self.parents[0]->requires_grad) {
      Tensor& ga = self.parents[0]->ensure_grad();
      for (long i = 0; i < n; ++i) ga[i] += self.grad[i] / bv[i];
    }
    if (self.parents[1]->requires_grad) {
      Tensor& gb = self.parents[1]->ensure_grad();
      for (long i = 0; i < n; ++i) gb[i] -= self.grad[i] * av[i] / (bv[i] * bv[i]);
    }
  }));
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double c) {
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = c * a.value()[i];
  return Var(make_node("scale", std::move(out), {a.node()}, [c](Node& self) {
    if (self.parents[0]->requires_grad) axpy(self.parents[0]->ensure_grad(), self.grad, c);
  }));
}

Var add_scalar(const Var& a, double c) {
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = a.value()[i] + c;
  return Var(make_node("add_scalar", std::move(out), {a.node()}, [](Node& self) {
    if (self.parents[0]->requires_grad) axpy(self.parents[0]->ensure_grad(), self.grad);
  }));
}

Var exp_of(const Var& a) {
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = std::exp(a.value()[i]);
  return Var(make_node("exp", std::move(out), {a.node()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    const long n = self.grad.size();
    for (long i = 0; i < n; ++i) g[i] += self.grad[i] * self.value[i];
  }));
}

Var log_of(const Var& a) {
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = std::log(a.value()[i]);
  return Var(make_node("log", std::move(out), {a.node()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    const Tensor& x = self.parents[0]->value;
    Tensor& g = self.parents[0]->ensure_grad();
    const long n = self.grad.size();
    for (long i = 0; i < n; ++i) g[i] += self.grad[i] / x[i];
  }));
}

Var sqrt_of(const Var& a) {
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = std::sqrt(a.value()[i]);
  return Var(make_node("sqrt", std::move(out), {a.node()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    const long n = self.grad.size();
    for (long i = 0; i < n; ++i) g[i] += self.grad[i] * 0.5 / std::max(self.value[i], 1e-12);
  }));
}

Var relu(const Var& a) {
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = a.value()[i] > 0.0 ? a.value()[i] : 0.0;
  return Var(make_node("relu", std::move(out), {a.node()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    const Tensor& x = self.parents[0]->value;
    Tensor& g = self.parents[0]->ensure_grad();
    const long n = self.grad.size();
    for (long i = 0; i < n; ++i)
      if (x[i] > 0.0) g[i] += self.grad[i];
  }));
}

Var sigmoid(const Var& a) {
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-a.value()[i]));
  return Var(make_node("sigmoid", std::move(out), {a.node()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    const long n = self.grad.size();
    for (long i = 0; i < n; ++i) {
      const double s = self.value[i];
      g[i] += self.grad[i] * s * (1.0 - s);
    }
  }));
}

Var clamp(const Var& a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp with lo > hi");
  Tensor out(a.shape());
  const long n = out.size();
  for (long i = 0; i < n; ++i) out[i] = std::min(std::max(a.value()[i], lo), hi);
  return Var(make_node("clamp", std::move(out), {a.node()}, [lo, hi](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    const Tensor& x = self.parents[0]->value;
    Tensor& g = self.parents[0]->ensure_grad();
    const long n = self.grad.size();
    for (long i = 0; i < n; ++i)
      if (x[i] >= lo && x[i] <= hi) g[i] += self.grad[i];
  }));
}

// ---------------------------------------------------------------------------
// reductions / shaping
// ---------------------------------------------------------------------------

Var sum(const Var& a) {
  double s = 0.0;
  const long n = a.value().size();
  for (long i = 0; i < n; ++i) s += a.value()[i];
  return Var(make_node("sum", Tensor::scalar(s), {a.node()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    const double gv = self.grad[0];
    const long n = g.size();
    for (long i = 0; i < n; ++i) g[i] += gv;
  }));
}

Var mean(const Var& a) {
  const long n = a.value().size();
  if (n == 0) throw std::invalid_argument("mean of an empty tensor");
  double s = 0.0;
  for (long i = 0; i < n; ++i) s += a.value()[i];
  return Var(make_node("mean", Tensor::scalar(s / static_cast<double>(n)), {a.node()}, [n](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    const double gv = self.grad[0] / static_cast<double>(n);
    for (long i = 0; i < n; ++i) g[i] += gv;
  }));
}

Var reshape(const Var& a, std::vector<int> shape) {
  if (shape_size(shape) != a.value().size())
    throw std::invalid_argument("reshape to incompatible size " + shape_str(shape));
  Tensor out(std::move(shape), a.value().values());
  return Var(make_node("reshape", std::move(out), {a.node()}, [](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    const long n = self.grad.size();
    for (long i = 0; i < n; ++i) g[i] += self.grad[i];
  }));
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.value().dim(1) != b.value().dim(0))
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  const int n = a.value().dim(0), k = a.value().dim(1), m = b.value().dim(1);
  Tensor out({n, m});
  MutMap(out.data(), n, m) = ConstMap(a.value().data(), n, k) * ConstMap(b.value().data(), k, m);
  return Var(make_node("matmul", std::move(out), {a.node(), b.node()}, [n, k, m](Node& self) {
    ConstMap g(self.grad.data(), n, m);
    if (self.parents[0]->requires_grad) {
      MutMap ga(self.parents[0]->ensure_grad().data(), n, k);
      ga.noalias() += g * ConstMap(self.parents[1]->value.data(), k, m).transpose();
    }
    if (self.parents[1]->requires_grad) {
      MutMap gb(self.parents[1]->ensure_grad().data(), k, m);
      gb.noalias() += ConstMap(self.parents[0]->value.data(), n, k).transpose() * g;
    }
  }));
}

Var affine(const Var& x, const Var& w, const Var& b) {
  if (x.value().rank() != 2 || w.value().rank() != 2 || b.value().rank() != 1)
    throw std::invalid_argument("affine: expected x:(N,din), w:(dout,din), b:(dout)");
  const int n = x.value().dim(0), din = x.value().dim(1), dout = w.value().dim(0);
  if (w.value().dim(1) != din || b.value().dim(0) != dout)
    throw std::invalid_argument("affine: dimension mismatch");
  Tensor out({n, dout});
  MutMap o(out.data(), n, dout);
  o.noalias() = ConstMap(x.value().data(), n, din) * ConstMap(w.value().data(), dout, din).transpose();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dout; ++j) out[static_cast<long>(i) * dout + j] += b.value()[j];
  return Var(make_node("affine", std::move(out), {x.node(), w.node(), b.node()}, [n, din, dout](Node& self) {
    ConstMap g(self.grad.data(), n, dout);
    if (self.parents[0]->requires_grad) {
      MutMap gx(self.parents[0]->ensure_grad().data(), n, din);
      gx.noalias() += g * ConstMap(self.parents[1]->value.data(), dout, din);
    }
    if (self.parents[1]->requires_grad) {
      MutMap gw(self.parents[1]->ensure_grad().data(), dout, din);
      gw.noalias() += g.transpose() * ConstMap(self.parents[0]->value.data(), n, din);
    }
    if (self.parents[2]->requires_grad) {
      Tensor& gb = self.parents[2]->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < dout; ++j) gb[j] += self.grad[static_cast<long>(i) * dout + j];
    }
  }));
}

namespace {

void im2col(const double* x, int c_in, int h, int w, int kh, int kw, int stride, int pad, int h_out, int w_out,
            double* col) {
  const long hw_out = static_cast<long>(h_out) * w_out;
  for (int c = 0; c < c_in; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        double* row = col + ((static_cast<long>(c) * kh + ki) * kw + kj) * hw_out;
        for (int oh = 0; oh < h_out; ++oh) {
          const int ih = oh * stride - pad + ki;
          for (int ow = 0; ow < w_out; ++ow) {
            const int iw = ow * stride - pad + kj;
            row[static_cast<long>(oh) * w_out + ow] =
                (ih >= 0 && ih < h && iw >= 0 && iw < w) ? x[(static_cast<long>(c) * h + ih) * w + iw] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, int c_in, int h, int w, int kh, int kw, int stride, int pad, int h_out,
                int w_out, double* dx) {
  const long hw_out = static_cast<long>(h_out) * w_out;
  for (int c = 0; c < c_in; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const double* row = col + ((static_cast<long>(c) * kh + ki) * kw + kj) * hw_out;
        for (int oh = 0; oh < h_out; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= h) continue;
          for (int ow = 0; ow < w_out; ++ow) {
            const int iw = ow * stride - pad + kj;
            if (iw < 0 || iw >= w) continue;
            dx[(static_cast<long>(c) * h + ih) * w + iw] += row[static_cast<long>(oh) * w_out + ow];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  if (x.value().rank() != 4 || w.value().rank() != 4 || b.value().rank() != 1)
    throw std::invalid_argument("conv2d: expected x:(N,C,H,W), w:(Cout,Cin,kh,kw), b:(Cout)");
  const int n = x.value().dim(0), c_in = x.value().dim(1), h = x.value().dim(2), wd = x.value().dim(3);
  const int c_out = w.value().dim(0), kh = w.value().dim(2), kw = w.value().dim(3);
  if (w.value().dim(1) != c_in || b.value().dim(0) != c_out)
    throw std::invalid_argument("conv2d: channel mismatch");
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: invalid stride/pad");
  const int h_out = (h + 2 * pad - kh) / stride + 1;
  const int w_out = (wd + 2 * pad - kw) / stride + 1;
  if (h + 2 * pad < kh || wd + 2 * pad < kw || h_out < 1 || w_out < 1)
    throw std::invalid_argument("conv2d: kernel larger than padded input");

  const long col_rows = static_cast<long>(c_in) * kh * kw;
  const long hw_out = static_cast<long>(h_out) * w_out;
  const long x_stride = static_cast<long>(c_in) * h * wd;
  const long o_stride = static_cast<long>(c_out) * hw_out;

  Tensor out({n, c_out, h_out, w_out});
  std::vector<double> col(static_cast<std::size_t>(col_rows * hw_out));
  ConstMap wmat(w.value().data(), c_out, col_rows);
  for (int i = 0; i < n; ++i) {
    im2col(x.value().data() + static_cast<long>(i) * x_stride, c_in, h, wd, kh, kw, stride, pad, h_out, w_out,
           col.data());
    MutMap o(out.data() + static_cast<long>(i) * o_stride, c_out, hw_out);
    o.noalias() = wmat * ConstMap(col.data(), col_rows, hw_out);
    for (int c = 0; c < c_out; ++c) o.row(c).array() += b.value()[c];
  }

  auto backward = [n, c_in, h, wd, c_out, kh, kw, stride, pad, h_out, w_out, col_rows, hw_out, x_stride,
                   o_stride](Node& self) {
    const Tensor& xv = self.parents[0]->value;
    const Tensor& wv = self.parents[1]->value;
    std::vector<double> col(static_cast<std::size_t>(col_rows * hw_out));
    std::vector<double> dcol(static_cast<std::size_t>(col_rows * hw_out));
    ConstMap wmat(wv.data(), c_out, col_rows);
    const bool need_x = self.parents[0]->requires_grad;
    const bool need_w = self.parents[1]->requires_grad;
    const bool need_b = self.parents[2]->requires_grad;
    for (int i = 0; i < n; ++i) {
      ConstMap g(self.grad.data() + static_cast<long>(i) * o_stride, c_out, hw_out);
      if (need_w || need_x)
        im2col(xv.data() + static_cast<long>(i) * x_stride, c_in, h, wd, kh, kw, stride, pad, h_out, w_out,
               col.data());
      if (need_w) {
        MutMap gw(self.parents[1]->ensure_grad().data(), c_out, col_rows);
        gw.noalias() += g * ConstMap(col.data(), col_rows, hw_out).transpose();
      }
      if (need_b) {
        Tensor& gb = self.parents[2]->ensure_grad();
        for (int c = 0; c < c_out; ++c) gb[c] += g.row(c).sum();
      }
      if (need_x) {
        MutMap dc(dcol.data(), col_rows, hw_out);
        dc.noalias() = wmat.transpose() * g;
        col2im_add(dcol.data(), c_in, h, wd, kh, kw, stride, pad, h_out, w_out,
                   self.parents[0]->ensure_grad().data() + static_cast<long>(i) * x_stride);
      }
    }
  };
  return Var(make_node("conv2d", std::move(out), {x.node(), w.node(), b.node()}, std::move(backward)));
}

// ---------------------------------------------------------------------------
// feature-map ops
// ---------------------------------------------------------------------------

namespace {
void require_nchw(const char* op, const Var& x) {
  if (x.value().rank() != 4) throw std::invalid_argument(std::string(op) + ": expected a (N,C,H,W) tensor");
}
}  // namespace

Var global_avg_pool(const Var& x) {
  require_nchw("global_avg_pool", x);
  const int n = x.value().dim(0), c = x.value().dim(1);
  const long hw = static_cast<long>(x.value().dim(2)) * x.value().dim(3);
  Tensor out({n, c});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) {
      const double* p = x.value().data() + (static_cast<long>(i) * c + j) * hw;
      double s = 0.0;
      for (long k = 0; k < hw; ++k) s += p[k];
      out[static_cast<long>(i) * c + j] = s / static_cast<double>(hw);
    }
  return Var(make_node("global_avg_pool", std::move(out), {x.node()}, [n, c, hw](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        const double gv = self.grad[static_cast<long>(i) * c + j] / static_cast<double>(hw);
        double* p = g.data() + (static_cast<long>(i) * c + j) * hw;
        for (long k = 0; k < hw; ++k) p[k] += gv;
      }
  }));
}

ChannelStatsVar channel_stats(const Var& x) {
  require_nchw("channel_stats", x);
  const int n = x.value().dim(0), c = x.value().dim(1);
  const long hw = static_cast<long>(x.value().dim(2)) * x.value().dim(3);
  if (hw < 1) throw std::invalid_argument("channel_stats: empty spatial extent");
  Tensor mean_t({n, c});
  Tensor std_t({n, c});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) {
      const double* p = x.value().data() + (static_cast<long>(i) * c + j) * hw;
      double s = 0.0;
      for (long k = 0; k < hw; ++k) s += p[k];
      const double m = s / static_cast<double>(hw);
      double v = 0.0;
      for (long k = 0; k < hw; ++k) {
        const double d = p[k] - m;
        v += d * d;
      }
      mean_t[static_cast<long>(i) * c + j] = m;
      std_t[static_cast<long>(i) * c + j] = std::sqrt(v / static_cast<double>(hw));
    }

  Var mean_var(make_node("channel_mean", std::move(mean_t), {x.node()}, [n, c, hw](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) {
        const double gv = self.grad[static_cast<long>(i) * c + j] / static_cast<double>(hw);
        double* p = g.data() + (static_cast<long>(i) * c + j) * hw;
        for (long k = 0; k < hw; ++k) p[k] += gv;
      }
  }));

  // The std node captures the mean values it was computed against.
  Tensor mean_copy = mean_var.value();
  Var std_var(make_node("channel_std", std::move(std_t), {x.node()},
                        [n, c, hw, mean_copy = std::move(mean_copy)](Node& self) {
                          if (!self.parents[0]->requires_grad) return;
                          const Tensor& xv = self.parents[0]->value;
                          Tensor& g = self.parents[0]->ensure_grad();
                          for (int i = 0; i < n; ++i)
                            for (int j = 0; j < c; ++j) {
                              const long idx = static_cast<long>(i) * c + j;
                              const double sd = self.value[idx];
                              if (sd < 1e-12) continue;  // constant channel: subgradient 0
                              const double gv = self.grad[idx] / (static_cast<double>(hw) * sd);
                              const double m = mean_copy[idx];
                              const double* xp = xv.data() + idx * hw;
                              double* gp = g.data() + idx * hw;
                              for (long k = 0; k < hw; ++k) gp[k] += gv * (xp[k] - m);
                            }
                        }));
  return {mean_var, std_var};
}

Var broadcast_chw(const Var& s, int h, int w) {
  if (s.value().rank() != 2) throw std::invalid_argument("broadcast_chw: expected a (N,C) tensor");
  const int n = s.value().dim(0), c = s.value().dim(1);
  const long hw = static_cast<long>(h) * w;
  Tensor out({n, c, h, w});
  for (long idx = 0; idx < static_cast<long>(n) * c; ++idx) {
    double* p = out.data() + idx * hw;
    const double v = s.value()[idx];
    for (long k = 0; k < hw; ++k) p[k] = v;
  }
  return Var(make_node("broadcast_chw", std::move(out), {s.node()}, [n, c, hw](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (long idx = 0; idx < static_cast<long>(n) * c; ++idx) {
      const double* p = self.grad.data() + idx * hw;
      double s2 = 0.0;
      for (long k = 0; k < hw; ++k) s2 += p[k];
      g[idx] += s2;
    }
  }));
}

// ---------------------------------------------------------------------------
// batch-dimension ops
// ---------------------------------------------------------------------------

Var gather_rows(const Var& x, const std::vector<int>& idx) {
  const long stride = row_stride(x.value());
  const int n = x.value().dim(0);
  std::vector<int> shape = x.value().shape();
  shape[0] = static_cast<int>(idx.size());
  Tensor out(shape);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= n) throw std::invalid_argument("gather_rows: index out of range");
    std::memcpy(out.data() + static_cast<long>(k) * stride, x.value().data() + static_cast<long>(idx[k]) * stride,
                static_cast<std::size_t>(stride) * sizeof(double));
  }
  return Var(make_node("gather_rows", std::move(out), {x.node()}, [idx, stride](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double* src = self.grad.data() + static_cast<long>(k) * stride;
      double* dst = g.data() + static_cast<long>(idx[k]) * stride;
      for (long i = 0; i < stride; ++i) dst[i] += src[i];
    }
  }));
}

Var scatter_replace_rows(const Var& x, const std::vector<int>& idx, const Var& repl) {
  const long stride = row_stride(x.value());
  const int n = x.value().dim(0);
  if (repl.value().rank() != x.value().rank() || repl.value().dim(0) != static_cast<int>(idx.size()) ||
      row_stride(repl.value()) != stride)
    throw std::invalid_argument("scatter_replace_rows: replacement shape mismatch");
  std::unordered_set<int> seen;
  for (int i : idx) {
    if (i < 0 || i >= n) throw std::invalid_argument("scatter_replace_rows: index out of range");
    if (!seen.insert(i).second) throw std::invalid_argument("scatter_replace_rows: duplicate index");
  }
  Tensor out = x.value();
  for (std::size_t k = 0; k < idx.size(); ++k)
    std::memcpy(out.data() + static_cast<long>(idx[k]) * stride,
                repl.value().data() + static_cast<long>(k) * stride,
                static_cast<std::size_t>(stride) * sizeof(double));
  return Var(make_node("scatter_replace_rows", std::move(out), {x.node(), repl.node()}, [idx, stride](Node& self) {
    if (self.parents[0]->requires_grad) {
      Tensor masked = self.grad;
      for (int i : idx) std::memset(masked.data() + static_cast<long>(i) * stride, 0,
                                    static_cast<std::size_t>(stride) * sizeof(double));
      axpy(self.parents[0]->ensure_grad(), masked);
    }
    if (self.parents[1]->requires_grad) {
      Tensor& g = self.parents[1]->ensure_grad();
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double* src = self.grad.data() + static_cast<long>(idx[k]) * stride;
        double* dst = g.data() + static_cast<long>(k) * stride;
        for (long i = 0; i < stride; ++i) dst[i] += src[i];
      }
    }
  }));
}

Var scale_rows(const Var& x, const std::vector<double>& factors) {
  const long stride = row_stride(x.value());
  const int n = x.value().dim(0);
  if (static_cast<int>(factors.size()) != n)
    throw std::invalid_argument("scale_rows: factor count does not match the batch");
  Tensor out(x.value().shape());
  for (int i = 0; i < n; ++i) {
    const double* src = x.value().data() + static_cast<long>(i) * stride;
    double* dst = out.data() + static_cast<long>(i) * stride;
    for (long k = 0; k < stride; ++k) dst[k] = factors[static_cast<std::size_t>(i)] * src[k];
  }
  return Var(make_node("scale_rows", std::move(out), {x.node()}, [factors, stride, n](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    Tensor& g = self.parents[0]->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const double* src = self.grad.data() + static_cast<long>(i) * stride;
      double* dst = g.data() + static_cast<long>(i) * stride;
      for (long k = 0; k < stride; ++k) dst[k] += factors[static_cast<std::size_t>(i)] * src[k];
    }
  }));
}

// ---------------------------------------------------------------------------
// domain-adaptation specific
// ---------------------------------------------------------------------------

Var gradient_reversal(const Var& x, double scale_factor) {
  if (scale_factor < 0.0) throw std::invalid_argument("gradient_reversal: scale must be >= 0");
  Tensor out = x.value();
  return Var(make_node("gradient_reversal", std::move(out), {x.node()}, [scale_factor](Node& self) {
    if (self.parents[0]->requires_grad) axpy(self.parents[0]->ensure_grad(), self.grad, -scale_factor);
  }));
}

Var detach(const Var& x) { return Var::constant(x.value()); }

Var pairwise_sqdist(const Var& a, const Var& b) {
  if (a.value().rank() != 2 || b.value().rank() != 2 || a.value().dim(1) != b.value().dim(1))
    throw std::invalid_argument("pairwise_sqdist: expected (n,d) and (m,d)");
  const int n = a.value().dim(0), m = b.value().dim(0), d = a.value().dim(1);
  Tensor out({n, m});
  for (int i = 0; i < n; ++i) {
    const double* ai = a.value().data() + static_cast<long>(i) * d;
    for (int j = 0; j < m; ++j) {
      const double* bj = b.value().data() + static_cast<long>(j) * d;
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        const double diff = ai[k] - bj[k];
        s += diff * diff;
      }
      out[static_cast<long>(i) * m + j] = s;
    }
  }
  return Var(make_node("pairwise_sqdist", std::move(out), {a.node(), b.node()}, [n, m, d](Node& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    const bool need_a = self.parents[0]->requires_grad;
    const bool need_b = self.parents[1]->requires_grad;
    if (!need_a && !need_b) return;
    Tensor* ga = need_a ? &self.parents[0]->ensure_grad() : nullptr;
    Tensor* gb = need_b ? &self.parents[1]->ensure_grad() : nullptr;
    for (int i = 0; i < n; ++i) {
      const double* ai = av.data() + static_cast<long>(i) * d;
      for (int j = 0; j < m; ++j) {
        const double g = self.grad[static_cast<long>(i) * m + j];
        if (g == 0.0) continue;
        const double* bj = bv.data() + static_cast<long>(j) * d;
        for (int k = 0; k < d; ++k) {
          const double diff = ai[k] - bj[k];
          if (need_a) (*ga)[static_cast<long>(i) * d + k] += 2.0 * g * diff;
          if (need_b) (*gb)[static_cast<long>(j) * d + k] -= 2.0 * g * diff;
        }
      }
    }
  }));
}

Var weighted_sum(const Var& x, const Tensor& coeff) {
  if (!x.value().same_shape(coeff)) throw std::invalid_argument("weighted_sum: coefficient shape mismatch");
  double s = 0.0;
  const long n = x.value().size();
  for (long i = 0; i < n; ++i) s += x.value()[i] * coeff[i];
  return Var(make_node("weighted_sum", Tensor::scalar(s), {x.node()}, [coeff](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    axpy(self.parents[0]->ensure_grad(), coeff, self.grad[0]);
  }));
}

}  // namespace qda
