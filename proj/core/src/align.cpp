#include "qda/align.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qda {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require_bandwidth(double bw) {
  if (bw <= 0.0) throw std::invalid_argument("kernel bandwidth must be positive");
}

}  // namespace

Tensor gaussian_kernel_matrix(const std::vector<double>& a, const std::vector<double>& b, double bandwidth) {
  require_bandwidth(bandwidth);
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  Tensor out({n, m});
  // multiply by the reciprocal so the scalar and autodiff routes round
  // identically
  const double factor = -1.0 / (2.0 * bandwidth * bandwidth);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double d = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)];
      out[static_cast<long>(i) * m + j] = std::exp(d * d * factor);
    }
  return out;
}

Tensor gaussian_kernel_matrix(const Tensor& a, const Tensor& b, double bandwidth) {
  require_bandwidth(bandwidth);
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1))
    throw std::invalid_argument("gaussian_kernel_matrix: expected (n,d) and (m,d)");
  const int n = a.dim(0), m = b.dim(0), d = a.dim(1);
  Tensor out({n, m});
  const double factor = -1.0 / (2.0 * bandwidth * bandwidth);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        const double diff = a[static_cast<long>(i) * d + k] - b[static_cast<long>(j) * d + k];
        s += diff * diff;
      }
      out[static_cast<long>(i) * m + j] = std::exp(s * factor);
    }
  return out;
}

Var gaussian_kernel(const Var& a, const Var& b, double bandwidth) {
  require_bandwidth(bandwidth);
  return exp_of(scale(pairwise_sqdist(a, b), -1.0 / (2.0 * bandwidth * bandwidth)));
}

Tensor rank_weights(const std::vector<double>& yhat_a, const std::vector<double>& yhat_b,
                    const std::vector<double>& y_a, const std::vector<double>& y_b) {
  if (yhat_a.size() != y_a.size() || yhat_b.size() != y_b.size())
    throw std::invalid_argument("rank_weights: prediction/label lengths differ");
  const int n = static_cast<int>(y_a.size()), m = static_cast<int>(y_b.size());
  Tensor w({n, m});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const double v = -(yhat_a[static_cast<std::size_t>(i)] - yhat_b[static_cast<std::size_t>(j)]) *
                       sign_of(y_a[static_cast<std::size_t>(i)] - y_b[static_cast<std::size_t>(j)]);
      w[static_cast<long>(i) * m + j] = std::max(0.0, v);
    }
  return w;
}

Var weighted_feature_kernel(const Var& f_a, const Var& f_b, const Tensor& weights, double bandwidth) {
  Var kernel = gaussian_kernel(f_a, f_b, bandwidth);
  if (!kernel.value().same_shape(weights))
    throw std::invalid_argument("weighted_feature_kernel: weight matrix shape mismatch");
  Tensor one_plus = weights;
  for (long i = 0; i < one_plus.size(); ++i) one_plus[i] += 1.0;
  return mul(kernel, Var::constant(std::move(one_plus)));
}

Tensor regularized_inverse(const Tensor& kernel, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("regularization epsilon must be positive");
  if (kernel.rank() != 2 || kernel.dim(0) != kernel.dim(1))
    throw std::invalid_argument("regularized_inverse: expected a square matrix");
  const int n = kernel.dim(0);
  RowMat m = ConstMap(kernel.data(), n, n);
  m.diagonal().array() += epsilon;
  Eigen::LLT<RowMat> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericError("Cholesky factorization of the regularized kernel failed");
  Tensor out({n, n});
  MutMap(out.data(), n, n) = llt.solve(RowMat::Identity(n, n));
  return out;
}

double median_pairwise_distance(const Tensor& rows) {
  if (rows.rank() != 2) throw std::invalid_argument("median_pairwise_distance: expected (n,d)");
  const int n = rows.dim(0), d = rows.dim(1);
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) {
        const double diff = rows[static_cast<long>(i) * d + k] - rows[static_cast<long>(j) * d + k];
        s += diff * diff;
      }
      dists.push_back(std::sqrt(s));
    }
  if (dists.empty()) return 1.0;
  std::sort(dists.begin(), dists.end());
  const std::size_t mid = dists.size() / 2;
  const double med = (dists.size() % 2 == 1) ? dists[mid] : 0.5 * (dists[mid - 1] + dists[mid]);
  return med > 0.0 ? med : 1.0;
}

namespace {

Tensor vstack_rows(const Tensor& a, const Tensor& b) {
  Tensor out({a.dim(0) + b.dim(0), a.dim(1)});
  std::copy(a.data(), a.data() + a.size(), out.data());
  std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
  return out;
}

// coeff = left * K^T * right for the Frobenius pairing <K~, coeff>.
Tensor trace_coefficient(const Tensor& left, const Tensor& label_kernel, const Tensor& right) {
  const int p = left.dim(0), q = right.dim(1);
  ConstMap l(left.data(), left.dim(0), left.dim(1));
  ConstMap k(label_kernel.data(), label_kernel.dim(0), label_kernel.dim(1));
  ConstMap r(right.data(), right.dim(0), right.dim(1));
  Tensor out({p, q});
  MutMap(out.data(), p, q) = l * k.transpose() * r;
  return out;
}

struct WeightStats {
  double sum = 0.0;
  long nonzero = 0;
  long total = 0;
  void absorb(const Tensor& w) {
    for (long i = 0; i < w.size(); ++i) {
      sum += w[i];
      if (w[i] > 0.0) ++nonzero;
    }
    total += w.size();
  }
};

}  // namespace

AlignmentTerms conditional_alignment_loss(const AlignmentBatch& batch, const AlignConfig& cfg) {
  const Tensor& fs = batch.source_features.value();
  const Tensor& ft = batch.target_features.value();
  if (fs.rank() != 2 || ft.rank() != 2 || fs.dim(1) != ft.dim(1))
    throw std::invalid_argument("conditional_alignment_loss: features must be (n,d) with a shared d");
  const int ns = fs.dim(0), nt = ft.dim(0);
  if (ns < 2 || nt < 2) throw std::invalid_argument("conditional_alignment_loss: need at least 2 samples per domain");
  if (static_cast<int>(batch.source_labels.size()) != ns || static_cast<int>(batch.target_labels.size()) != nt ||
      static_cast<int>(batch.source_preds.size()) != ns || static_cast<int>(batch.target_preds.size()) != nt)
    throw std::invalid_argument("conditional_alignment_loss: label/prediction counts do not match the features");

  // Label kernels and their regularized inverses are constants.
  const Tensor k_tt = gaussian_kernel_matrix(batch.target_labels, batch.target_labels, cfg.label_bandwidth);
  const Tensor k_ss = gaussian_kernel_matrix(batch.source_labels, batch.source_labels, cfg.label_bandwidth);
  const Tensor k_ts = gaussian_kernel_matrix(batch.target_labels, batch.source_labels, cfg.label_bandwidth);
  const Tensor m_t = regularized_inverse(k_tt, cfg.epsilon);
  const Tensor m_s = regularized_inverse(k_ss, cfg.epsilon);

  AlignmentTerms terms;
  terms.feature_bandwidth =
      cfg.feature_bandwidth > 0.0 ? cfg.feature_bandwidth : median_pairwise_distance(vstack_rows(fs, ft));

  Tensor w_tt({nt, nt});
  Tensor w_ss({ns, ns});
  Tensor w_st({ns, nt});
  WeightStats wstats;
  if (cfg.use_rank_weights) {
    w_st = rank_weights(batch.source_preds, batch.target_preds, batch.source_labels, batch.target_labels);
    if (cfg.rank_weight_scope == AlignConfig::Scope::All) {
      w_tt = rank_weights(batch.target_preds, batch.target_preds, batch.target_labels, batch.target_labels);
      w_ss = rank_weights(batch.source_preds, batch.source_preds, batch.source_labels, batch.source_labels);
      wstats.absorb(w_tt);
      wstats.absorb(w_ss);
    }
    wstats.absorb(w_st);
  } else {
    wstats.total = static_cast<long>(ns) * nt;
  }
  terms.mean_weight = wstats.total > 0 ? wstats.sum / static_cast<double>(wstats.total) : 0.0;
  terms.nonzero_weight_fraction =
      wstats.total > 0 ? static_cast<double>(wstats.nonzero) / static_cast<double>(wstats.total) : 0.0;

  const Var kx_tt = weighted_feature_kernel(batch.target_features, batch.target_features, w_tt, terms.feature_bandwidth);
  const Var kx_ss = weighted_feature_kernel(batch.source_features, batch.source_features, w_ss, terms.feature_bandwidth);
  const Var kx_st = weighted_feature_kernel(batch.source_features, batch.target_features, w_st, terms.feature_bandwidth);

  // tr(K_Y M K~ M) = <K~, M K_Y M> and the cross term pairs K~_st with
  // M_s K_Y^st M_t, following the printed index convention.
  const Tensor c_tt = trace_coefficient(m_t, k_tt, m_t);
  const Tensor c_ss = trace_coefficient(m_s, k_ss, m_s);
  const Tensor c_st = trace_coefficient(m_s, k_ts, m_t);

  terms.loss =
      add(add(weighted_sum(kx_tt, c_tt), weighted_sum(kx_ss, c_ss)), scale(weighted_sum(kx_st, c_st), -2.0));
  return terms;
}

Var domain_discriminator_loss(const Var& d_source, const Var& d_target) {
  const double lo = 1e-7, hi = 1.0 - 1e-7;
  const Var s = clamp(d_source, lo, hi);
  const Var t = clamp(d_target, lo, hi);
  const Var source_term = mean(log_of(add_scalar(neg(s), 1.0)));
  const Var target_term = mean(log_of(t));
  return neg(add(source_term, target_term));
}

Var mean_discrepancy_loss(const Var& f_source, const Var& f_target, double bandwidth) {
  const double bw = bandwidth > 0.0
                        ? bandwidth
                        : median_pairwise_distance(vstack_rows(f_source.value(), f_target.value()));
  const Var k_ss = gaussian_kernel(f_source, f_source, bw);
  const Var k_tt = gaussian_kernel(f_target, f_target, bw);
  const Var k_st = gaussian_kernel(f_source, f_target, bw);
  return add(add(mean(k_ss), mean(k_tt)), scale(mean(k_st), -2.0));
}

}  // namespace qda
