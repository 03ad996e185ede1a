#pragma once

#include <vector>

#include "qda/autodiff.hpp"

namespace qda {

// exp(-d^2 / (2 bw^2)) kernels over scalars or feature rows.
Tensor gaussian_kernel_matrix(const std::vector<double>& a, const std::vector<double>& b, double bandwidth);
Tensor gaussian_kernel_matrix(const Tensor& a, const Tensor& b, double bandwidth);
// Differentiable version over (n,d) feature matrices.
Var gaussian_kernel(const Var& a, const Var& b, double bandwidth);

// W(i,j) = max(0, -(yhat_a_i - yhat_b_j) * sign(y_a_i - y_b_j)). Zero on
// correctly ranked pairs and on label ties.
Tensor rank_weights(const std::vector<double>& yhat_a, const std::vector<double>& yhat_b,
                    const std::vector<double>& y_a, const std::vector<double>& y_b);

// K~(i,j) = k(f_a_i, f_b_j) * (1 + W(i,j)); W held constant.
Var weighted_feature_kernel(const Var& f_a, const Var& f_b, const Tensor& weights, double bandwidth);

// (K + eps I)^-1 by Cholesky; throws NumericError when the factorization
// fails (cannot happen for a PSD kernel with eps > 0).
Tensor regularized_inverse(const Tensor& kernel, double epsilon);

// Median of pairwise euclidean distances over the rows of a (n,d) matrix;
// falls back to 1 when all rows coincide.
double median_pairwise_distance(const Tensor& rows);

struct AlignmentBatch {
  Var source_features;  // (n_s,d), graph-connected
  Var target_features;  // (n_t,d)
  std::vector<double> source_labels;  // true labels, normalized to (0,1)
  std::vector<double> target_labels;  // pseudo labels
  std::vector<double> source_preds;   // detached predictions, drive the weights
  std::vector<double> target_preds;
};

struct AlignConfig {
  double label_bandwidth = 0.1;
  double feature_bandwidth = 0.0;  // 0 selects the median heuristic per batch
  double epsilon = 1e-3;
  enum class Scope { CrossOnly, All };
  Scope rank_weight_scope = Scope::All;
  bool use_rank_weights = true;  // false reduces to plain conditional alignment
};

struct AlignmentTerms {
  Var loss;
  double mean_weight = 0.0;
  double nonzero_weight_fraction = 0.0;
  double feature_bandwidth = 0.0;
};

// Conditional kernel alignment between the two domains: label-kernel-whitened
// feature kernel traces for each domain minus twice the cross term, with the
// feature kernels up-weighted on misranked pairs. Label kernels, their
// regularized inverses and the rank weights are constants; gradients flow
// through the feature kernels only.
AlignmentTerms conditional_alignment_loss(const AlignmentBatch& batch, const AlignConfig& cfg);

// Binary cross entropy of the domain discriminator: source labeled 0, target
// labeled 1; outputs clamped to [1e-7, 1-1e-7] before the logs.
Var domain_discriminator_loss(const Var& d_source, const Var& d_target);

// Squared mean-embedding discrepancy with a Gaussian kernel; the marginal
// alignment baseline.
Var mean_discrepancy_loss(const Var& f_source, const Var& f_target, double bandwidth = 0.0);

}  // namespace qda
