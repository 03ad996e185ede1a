#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "qda/align.hpp"
#include "qda/gradcheck.hpp"
#include "qda/rng.hpp"

using namespace qda;

namespace {

Tensor random_rows(int n, int d, Rng& rng, double scale = 1.0) {
  Tensor t({n, d});
  for (long i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

// ---- straight-line 2x2 scalar helpers for the expansion oracle ----

struct Mat2 {
  double a, b, c, d;  // row-major [[a,b],[c,d]]
};

Mat2 mat2_mul(const Mat2& x, const Mat2& y) {
  return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

double mat2_trace(const Mat2& x) { return x.a + x.d; }

Mat2 mat2_reg_inverse(const Mat2& x, double eps) {
  const double a = x.a + eps, b = x.b, c = x.c, d = x.d + eps;
  const double det = a * d - b * c;
  return {d / det, -b / det, -c / det, a / det};
}

double gauss(double sqdist, double bw) { return std::exp(-sqdist / (2.0 * bw * bw)); }

double sqdist2(const double* u, const double* v, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (u[k] - v[k]) * (u[k] - v[k]);
  return s;
}

double oracle_weight(double yhat_a, double yhat_b, double ya, double yb) {
  const double sign = ya > yb ? 1.0 : (ya < yb ? -1.0 : 0.0);
  const double v = -(yhat_a - yhat_b) * sign;
  return v > 0.0 ? v : 0.0;
}

// Full scalar expansion of the alignment loss for 2 source + 2 target
// samples, no matrix library involved.
double rca_2x2_oracle(const double* fs, const double* ft, int dim, const std::vector<double>& ys,
                      const std::vector<double>& yt, const std::vector<double>& ps,
                      const std::vector<double>& pt, double label_bw, double feat_bw, double eps) {
  const Mat2 k_tt = {gauss(0.0, label_bw), gauss((yt[0] - yt[1]) * (yt[0] - yt[1]), label_bw),
                     gauss((yt[1] - yt[0]) * (yt[1] - yt[0]), label_bw), gauss(0.0, label_bw)};
  const Mat2 k_ss = {gauss(0.0, label_bw), gauss((ys[0] - ys[1]) * (ys[0] - ys[1]), label_bw),
                     gauss((ys[1] - ys[0]) * (ys[1] - ys[0]), label_bw), gauss(0.0, label_bw)};
  const Mat2 k_ts = {gauss((yt[0] - ys[0]) * (yt[0] - ys[0]), label_bw),
                     gauss((yt[0] - ys[1]) * (yt[0] - ys[1]), label_bw),
                     gauss((yt[1] - ys[0]) * (yt[1] - ys[0]), label_bw),
                     gauss((yt[1] - ys[1]) * (yt[1] - ys[1]), label_bw)};
  const Mat2 m_t = mat2_reg_inverse(k_tt, eps);
  const Mat2 m_s = mat2_reg_inverse(k_ss, eps);

  auto fk = [&](const double* a, int i, const double* b, int j) {
    return gauss(sqdist2(a + i * dim, b + j * dim, dim), feat_bw);
  };
  const Mat2 kx_tt = {fk(ft, 0, ft, 0) * (1.0 + oracle_weight(pt[0], pt[0], yt[0], yt[0])),
                      fk(ft, 0, ft, 1) * (1.0 + oracle_weight(pt[0], pt[1], yt[0], yt[1])),
                      fk(ft, 1, ft, 0) * (1.0 + oracle_weight(pt[1], pt[0], yt[1], yt[0])),
                      fk(ft, 1, ft, 1) * (1.0 + oracle_weight(pt[1], pt[1], yt[1], yt[1]))};
  const Mat2 kx_ss = {fk(fs, 0, fs, 0) * (1.0 + oracle_weight(ps[0], ps[0], ys[0], ys[0])),
                      fk(fs, 0, fs, 1) * (1.0 + oracle_weight(ps[0], ps[1], ys[0], ys[1])),
                      fk(fs, 1, fs, 0) * (1.0 + oracle_weight(ps[1], ps[0], ys[1], ys[0])),
                      fk(fs, 1, fs, 1) * (1.0 + oracle_weight(ps[1], ps[1], ys[1], ys[1]))};
  const Mat2 kx_st = {fk(fs, 0, ft, 0) * (1.0 + oracle_weight(ps[0], pt[0], ys[0], yt[0])),
                      fk(fs, 0, ft, 1) * (1.0 + oracle_weight(ps[0], pt[1], ys[0], yt[1])),
                      fk(fs, 1, ft, 0) * (1.0 + oracle_weight(ps[1], pt[0], ys[1], yt[0])),
                      fk(fs, 1, ft, 1) * (1.0 + oracle_weight(ps[1], pt[1], ys[1], yt[1]))};

  const double term_tt = mat2_trace(mat2_mul(mat2_mul(k_tt, m_t), mat2_mul(kx_tt, m_t)));
  const double term_ss = mat2_trace(mat2_mul(mat2_mul(k_ss, m_s), mat2_mul(kx_ss, m_s)));
  const double term_ts = mat2_trace(mat2_mul(mat2_mul(k_ts, m_s), mat2_mul(kx_st, m_t)));
  return term_tt + term_ss - 2.0 * term_ts;
}

}  // namespace

TEST_CASE("gaussian kernel closed forms") {
  const Tensor a({1, 2}, {0.0, 0.0});
  const Tensor b({2, 2}, {0.0, 0.0, 1.0, 1.0});
  const double bw = 1.0;
  const Tensor k = gaussian_kernel_matrix(a, b, bw);
  CHECK(k[0] == 1.0);  // zero distance
  CHECK(k[1] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));  // distance bw*sqrt(2)
  CHECK_THROWS_AS(gaussian_kernel_matrix(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("gaussian kernel matches the naive double-loop oracle") {
  Rng rng(3);
  const Tensor a = random_rows(5, 4, rng);
  const double bw = 0.7;
  const Tensor k = gaussian_kernel_matrix(a, a, bw);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      double s = 0.0;
      for (int c = 0; c < 4; ++c) {
        const double d = a[i * 4 + c] - a[j * 4 + c];
        s += d * d;
      }
      const double expect = std::exp(-s / (2.0 * bw * bw));
      CHECK(k[i * 5 + j] == doctest::Approx(expect).epsilon(1e-12));
      CHECK(k[i * 5 + j] == k[j * 5 + i]);  // symmetric for a == b
    }
  const Var kv = gaussian_kernel(Var::constant(a), Var::constant(a), bw);
  for (long i = 0; i < k.size(); ++i) CHECK(kv.value()[i] == doctest::Approx(k[i]).epsilon(1e-12));
}

TEST_CASE("rank weights on the worked examples") {
  // correctly ranked: prediction gap agrees with the label gap
  CHECK(rank_weights({0.8}, {0.3}, {0.9}, {0.2})[0] == 0.0);
  // misranked: weight is the prediction gap magnitude
  CHECK(rank_weights({0.3}, {0.8}, {0.9}, {0.2})[0] == doctest::Approx(0.5));
  // tied labels always give zero
  CHECK(rank_weights({0.1}, {0.9}, {0.5}, {0.5})[0] == 0.0);
  CHECK(rank_weights({0.9}, {0.1}, {0.5}, {0.5})[0] == 0.0);
}

TEST_CASE("rank weights match an independent transcription on the 5-point grid") {
  const std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  int cases = 0;
  for (double ps : grid)
    for (double pt : grid)
      for (double ys : grid)
        for (double yt : grid) {
          const Tensor w = rank_weights({ps}, {pt}, {ys}, {yt});
          const double expect = oracle_weight(ps, pt, ys, yt);
          REQUIRE(w[0] == expect);
          if (ys == yt) REQUIRE(w[0] == 0.0);
          const bool correctly_ranked = (ps - pt) * (ys - yt) > 0.0;
          if (correctly_ranked || ys == yt) REQUIRE(w[0] == 0.0);
          ++cases;
        }
  CHECK(cases == 625);
}

TEST_CASE("rank weights role-swap antisymmetry") {
  Rng rng(5);
  std::vector<double> pa(6), pb(4), ya(6), yb(4);
  for (auto& v : pa) v = rng.uniform();
  for (auto& v : pb) v = rng.uniform();
  for (auto& v : ya) v = rng.uniform();
  for (auto& v : yb) v = rng.uniform();
  const Tensor w1 = rank_weights(pa, pb, ya, yb);
  std::vector<double> npa(6), npb(4), nya(6), nyb(4);
  for (int i = 0; i < 6; ++i) {
    npa[i] = -pa[i];
    nya[i] = -ya[i];
  }
  for (int i = 0; i < 4; ++i) {
    npb[i] = -pb[i];
    nyb[i] = -yb[i];
  }
  const Tensor w2 = rank_weights(npb, npa, nyb, nya);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) CHECK(w1[i * 4 + j] == w2[j * 6 + i]);
}

TEST_CASE("weighted feature kernel composes the two element oracles") {
  Rng rng(7);
  const Tensor fa = random_rows(6, 3, rng);
  const Tensor fb = random_rows(6, 3, rng);
  Tensor w({6, 6});
  for (long i = 0; i < w.size(); ++i) w[i] = rng.uniform();
  const double bw = 0.9;
  const Var k = weighted_feature_kernel(Var::constant(fa), Var::constant(fb), w, bw);
  const Tensor plain = gaussian_kernel_matrix(fa, fb, bw);
  for (long i = 0; i < k.value().size(); ++i)
    CHECK(k.value()[i] == doctest::Approx(plain[i] * (1.0 + w[i])).epsilon(1e-12));

  // W = 0 leaves the kernel untouched; W = 1 doubles the entry
  const Var k0 = weighted_feature_kernel(Var::constant(fa), Var::constant(fb), Tensor::zeros({6, 6}), bw);
  for (long i = 0; i < k0.value().size(); ++i) CHECK(k0.value()[i] == plain[i]);
  const Var k1 = weighted_feature_kernel(Var::constant(fa), Var::constant(fb), Tensor::full({6, 6}, 1.0), bw);
  for (long i = 0; i < k1.value().size(); ++i) CHECK(k1.value()[i] == doctest::Approx(2.0 * plain[i]));
}

TEST_CASE("regularized inverse residual stays tiny up to batch 64") {
  Rng rng(9);
  for (int n : {2, 8, 32, 64}) {
    std::vector<double> labels(static_cast<std::size_t>(n));
    for (auto& v : labels) v = rng.uniform();
    const Tensor k = gaussian_kernel_matrix(labels, labels, 0.1);
    // symmetric with unit diagonal
    for (int i = 0; i < n; ++i) {
      CHECK(k[static_cast<long>(i) * n + i] == 1.0);
      for (int j = 0; j < n; ++j) CHECK(k[static_cast<long>(i) * n + j] == k[static_cast<long>(j) * n + i]);
    }
    const double eps = 1e-3;
    const Tensor inv = regularized_inverse(k, eps);
    // || (K+eps I)(K+eps I)^-1 - I ||_inf
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) {
          const double klj = k[static_cast<long>(i) * n + l] + (i == l ? eps : 0.0);
          s += klj * inv[static_cast<long>(l) * n + j];
        }
        worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    INFO("batch ", n);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("alignment loss vanishes for duplicated domains with perfect predictions") {
  Rng rng(11);
  const Tensor f = random_rows(4, 3, rng);
  std::vector<double> y = {0.2, 0.4, 0.6, 0.8};
  AlignmentBatch batch;
  batch.source_features = Var::constant(f);
  batch.target_features = Var::constant(f);
  batch.source_labels = y;
  batch.target_labels = y;
  batch.source_preds = y;  // perfect predictions: every pair correctly ranked
  batch.target_preds = y;
  AlignConfig cfg;
  const AlignmentTerms terms = conditional_alignment_loss(batch, cfg);
  CHECK(std::abs(terms.loss.value().item()) < 1e-8);
  CHECK(terms.mean_weight == 0.0);
  CHECK(terms.nonzero_weight_fraction == 0.0);
}

TEST_CASE("alignment loss matches the straight-line 2x2 expansion oracle") {
  Rng rng(13);
  const Tensor fs = random_rows(2, 3, rng);
  const Tensor ft = random_rows(2, 3, rng);
  const std::vector<double> ys = {0.3, 0.7};
  const std::vector<double> yt = {0.45, 0.6};
  const std::vector<double> ps = {0.35, 0.55};
  const std::vector<double> pt = {0.5, 0.52};
  AlignmentBatch batch;
  batch.source_features = Var::constant(fs);
  batch.target_features = Var::constant(ft);
  batch.source_labels = ys;
  batch.target_labels = yt;
  batch.source_preds = ps;
  batch.target_preds = pt;
  AlignConfig cfg;
  cfg.feature_bandwidth = 0.8;  // pinned so both routes share it
  const double got = conditional_alignment_loss(batch, cfg).loss.value().item();
  const double expect = rca_2x2_oracle(fs.data(), ft.data(), 3, ys, yt, ps, pt, cfg.label_bandwidth,
                                       cfg.feature_bandwidth, cfg.epsilon);
  CHECK(got == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("alignment loss gradient matches finite differences") {
  Rng rng(17);
  Var fs = Var::param(random_rows(3, 4, rng));
  Var ft = Var::param(random_rows(3, 4, rng));
  const std::vector<double> ys = {0.2, 0.5, 0.8};
  const std::vector<double> yt = {0.3, 0.6, 0.7};
  const std::vector<double> ps = {0.25, 0.65, 0.7};
  const std::vector<double> pt = {0.4, 0.5, 0.75};
  AlignConfig cfg;
  cfg.feature_bandwidth = 1.1;  // frozen so the loss is a pure function of features
  auto loss_fn = [&]() {
    AlignmentBatch batch;
    batch.source_features = fs;
    batch.target_features = ft;
    batch.source_labels = ys;
    batch.target_labels = yt;
    batch.source_preds = ps;
    batch.target_preds = pt;
    return conditional_alignment_loss(batch, cfg).loss;
  };
  CHECK(grad_check(loss_fn, {{"fs", fs}, {"ft", ft}}, 1e-4).pass);
}

TEST_CASE("alignment loss is invariant to within-domain permutations") {
  Rng rng(19);
  const int n = 5, d = 3;
  const Tensor fs = random_rows(n, d, rng);
  const Tensor ft = random_rows(n, d, rng);
  std::vector<double> ys(n), yt(n), ps(n), pt(n);
  for (int i = 0; i < n; ++i) {
    ys[i] = rng.uniform();
    yt[i] = rng.uniform();
    ps[i] = rng.uniform();
    pt[i] = rng.uniform();
  }
  AlignConfig cfg;
  cfg.feature_bandwidth = 0.9;
  auto eval = [&](const Tensor& fs_, const std::vector<double>& ys_, const std::vector<double>& ps_,
                  const Tensor& ft_, const std::vector<double>& yt_, const std::vector<double>& pt_) {
    AlignmentBatch b;
    b.source_features = Var::constant(fs_);
    b.target_features = Var::constant(ft_);
    b.source_labels = ys_;
    b.target_labels = yt_;
    b.source_preds = ps_;
    b.target_preds = pt_;
    return conditional_alignment_loss(b, cfg).loss.value().item();
  };
  const double base = eval(fs, ys, ps, ft, yt, pt);

  std::vector<int> perm = {3, 1, 4, 0, 2};
  Tensor fs_p({n, d});
  std::vector<double> ys_p(n), ps_p(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) fs_p[static_cast<long>(i) * d + c] = fs[static_cast<long>(perm[i]) * d + c];
    ys_p[i] = ys[static_cast<std::size_t>(perm[i])];
    ps_p[i] = ps[static_cast<std::size_t>(perm[i])];
  }
  CHECK(eval(fs_p, ys_p, ps_p, ft, yt, pt) == doctest::Approx(base).epsilon(1e-10));

  Tensor ft_p({n, d});
  std::vector<double> yt_p(n), pt_p(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) ft_p[static_cast<long>(i) * d + c] = ft[static_cast<long>(perm[i]) * d + c];
    yt_p[i] = yt[static_cast<std::size_t>(perm[i])];
    pt_p[i] = pt[static_cast<std::size_t>(perm[i])];
  }
  CHECK(eval(fs, ys, ps, ft_p, yt_p, pt_p) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("single weight bumps move only their own trace term") {
  Rng rng(23);
  const int n = 3, d = 2;
  const Tensor fs = random_rows(n, d, rng);
  const Tensor ft = random_rows(n, d, rng);
  std::vector<double> ys(n), yt(n);
  for (int i = 0; i < n; ++i) {
    ys[i] = rng.uniform();
    yt[i] = rng.uniform();
  }
  const double label_bw = 0.1, feat_bw = 0.8, eps = 1e-3;
  const Tensor k_tt = gaussian_kernel_matrix(yt, yt, label_bw);
  const Tensor k_ss = gaussian_kernel_matrix(ys, ys, label_bw);
  const Tensor k_ts = gaussian_kernel_matrix(yt, ys, label_bw);
  const Tensor m_t = regularized_inverse(k_tt, eps);
  const Tensor m_s = regularized_inverse(k_ss, eps);

  auto matmul3 = [n](const Tensor& a, const Tensor& b, const Tensor& c) {
    Tensor ab({n, n});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += a[static_cast<long>(i) * n + l] * b[static_cast<long>(l) * n + j];
        ab[static_cast<long>(i) * n + j] = s;
      }
    Tensor abc({n, n});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ab[static_cast<long>(i) * n + l] * c[static_cast<long>(l) * n + j];
        abc[static_cast<long>(i) * n + j] = s;
      }
    return abc;
  };
  auto transpose = [n](const Tensor& a) {
    Tensor t({n, n});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) t[static_cast<long>(i) * n + j] = a[static_cast<long>(j) * n + i];
    return t;
  };

  auto assemble = [&](const Tensor& w_tt, const Tensor& w_ss, const Tensor& w_st) {
    const Var kx_tt = weighted_feature_kernel(Var::constant(ft), Var::constant(ft), w_tt, feat_bw);
    const Var kx_ss = weighted_feature_kernel(Var::constant(fs), Var::constant(fs), w_ss, feat_bw);
    const Var kx_st = weighted_feature_kernel(Var::constant(fs), Var::constant(ft), w_st, feat_bw);
    const Tensor c_tt = matmul3(m_t, k_tt, m_t);
    const Tensor c_ss = matmul3(m_s, k_ss, m_s);
    const Tensor c_st = matmul3(m_s, transpose(k_ts), m_t);
    double loss = 0.0;
    for (long i = 0; i < c_tt.size(); ++i) loss += kx_tt.value()[i] * c_tt[i];
    for (long i = 0; i < c_ss.size(); ++i) loss += kx_ss.value()[i] * c_ss[i];
    for (long i = 0; i < c_st.size(); ++i) loss -= 2.0 * kx_st.value()[i] * c_st[i];
    return loss;
  };

  Tensor w_tt = Tensor::zeros({n, n});
  Tensor w_ss = Tensor::zeros({n, n});
  Tensor w_st = Tensor::zeros({n, n});
  const double base = assemble(w_tt, w_ss, w_st);
  const Tensor kx_plain_tt = gaussian_kernel_matrix(ft, ft, feat_bw);
  const Tensor kx_plain_st = gaussian_kernel_matrix(fs, ft, feat_bw);
  const Tensor c_tt = matmul3(m_t, k_tt, m_t);
  const Tensor c_st = matmul3(m_s, transpose(k_ts), m_t);

  const double delta = 0.37;
  // within-domain bump: contributes + delta * k * coeff
  Tensor w_tt_bumped = w_tt;
  w_tt_bumped[1 * n + 2] = delta;
  const double within = assemble(w_tt_bumped, w_ss, w_st);
  CHECK(within - base == doctest::Approx(delta * kx_plain_tt[1 * n + 2] * c_tt[1 * n + 2]).epsilon(1e-9));

  // cross-domain bump: contributes - 2 * delta * k * coeff
  Tensor w_st_bumped = w_st;
  w_st_bumped[2 * n + 0] = delta;
  const double cross = assemble(w_tt, w_ss, w_st_bumped);
  CHECK(cross - base == doctest::Approx(-2.0 * delta * kx_plain_st[2 * n + 0] * c_st[2 * n + 0]).epsilon(1e-9));

  // and the production loss agrees with the local assembly at matching weights
  AlignmentBatch batch;
  batch.source_features = Var::constant(fs);
  batch.target_features = Var::constant(ft);
  batch.source_labels = ys;
  batch.target_labels = yt;
  batch.source_preds = ys;
  batch.target_preds = yt;  // perfect predictions: all weights zero
  AlignConfig cfg;
  cfg.feature_bandwidth = feat_bw;
  CHECK(conditional_alignment_loss(batch, cfg).loss.value().item() == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("discriminator loss closed forms and oracle") {
  const Var half_s = Var::constant(Tensor({3, 1}, {0.5, 0.5, 0.5}));
  const Var half_t = Var::constant(Tensor({2, 1}, {0.5, 0.5}));
  CHECK(domain_discriminator_loss(half_s, half_t).value().item() ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  // perfect discrimination drives the loss to zero
  const Var s0 = Var::constant(Tensor({2, 1}, {1e-9, 1e-9}));
  const Var t1 = Var::constant(Tensor({2, 1}, {1.0 - 1e-9, 1.0 - 1e-9}));
  CHECK(domain_discriminator_loss(s0, t1).value().item() == doctest::Approx(0.0).epsilon(1e-6));

  Rng rng(29);
  std::vector<double> ds(3), dt(3);
  for (auto& v : ds) v = rng.uniform(0.05, 0.95);
  for (auto& v : dt) v = rng.uniform(0.05, 0.95);
  const Var vs = Var::constant(Tensor({3, 1}, std::vector<double>(ds)));
  const Var vt = Var::constant(Tensor({3, 1}, std::vector<double>(dt)));
  double expect = 0.0;
  for (double v : ds) expect -= std::log(1.0 - v) / 3.0;
  for (double v : dt) expect -= std::log(v) / 3.0;
  CHECK(domain_discriminator_loss(vs, vt).value().item() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("discriminator loss gradient matches finite differences") {
  Rng rng(31);
  Var logits = Var::param(random_rows(4, 1, rng));
  auto loss_fn = [&]() {
    const Var d = sigmoid(logits);
    const Var ds = gather_rows(d, {0, 1});
    const Var dt = gather_rows(d, {2, 3});
    return domain_discriminator_loss(ds, dt);
  };
  CHECK(grad_check(loss_fn, {{"logits", logits}}, 1e-5).pass);
}

TEST_CASE("mean discrepancy vanishes for identical sets and grows with shift") {
  Rng rng(37);
  const Tensor f = random_rows(6, 3, rng);
  const double same = mean_discrepancy_loss(Var::constant(f), Var::constant(f), 1.0).value().item();
  CHECK(std::abs(same) < 1e-12);
  Tensor shifted = f;
  for (long i = 0; i < shifted.size(); ++i) shifted[i] += 2.0;
  const double far = mean_discrepancy_loss(Var::constant(f), Var::constant(shifted), 1.0).value().item();
  CHECK(far > 0.1);
}

TEST_CASE("median pairwise distance heuristic") {
  const Tensor rows({3, 1}, {0.0, 1.0, 3.0});
  // pairwise distances {1, 3, 2}, median 2
  CHECK(median_pairwise_distance(rows) == doctest::Approx(2.0));
  CHECK(median_pairwise_distance(Tensor({2, 1}, {5.0, 5.0})) == 1.0);  // degenerate fallback
}
