#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qda/metrics.hpp"
#include "qda/rng.hpp"

using namespace qda;

namespace {

// Brute-force ranks: 1 + (#smaller) + (#equal - 1)/2, no sorting involved.
std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int smaller = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++smaller;
      if (v[j] == v[i]) ++equal;
    }
    ranks[i] = 1.0 + smaller + (equal - 1) / 2.0;
  }
  return ranks;
}

double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double oracle_srocc(const std::vector<double>& x, const std::vector<double>& y) {
  return oracle_pearson(oracle_ranks(x), oracle_ranks(y));
}

// tau-b by direct pair counting.
double oracle_krocc(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double num = 0.0;
  long tx = 0, ty = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = x[i] - x[j], b = y[i] - y[j];
      const double sa = a > 0 ? 1.0 : (a < 0 ? -1.0 : 0.0);
      const double sb = b > 0 ? 1.0 : (b < 0 ? -1.0 : 0.0);
      num += sa * sb;
      if (sa == 0.0) ++tx;
      if (sb == 0.0) ++ty;
    }
  const double n0 = n * (n - 1) / 2.0;
  return num / std::sqrt((n0 - tx) * (n0 - ty));
}

}  // namespace

TEST_CASE("perfect and inverted agreement") {
  const std::vector<double> y = {1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(plcc(y, y) == doctest::Approx(1.0));
  CHECK(srocc(y, y) == doctest::Approx(1.0));
  CHECK(krocc(y, y) == doctest::Approx(1.0));
  CHECK(rmse(y, y) == 0.0);
  std::vector<double> neg(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) neg[i] = -y[i];
  CHECK(plcc(neg, y) == doctest::Approx(-1.0));
  CHECK(srocc(neg, y) == doctest::Approx(-1.0));
  CHECK(krocc(neg, y) == doctest::Approx(-1.0));
}

TEST_CASE("rank metrics match brute-force oracles on random data with ties") {
  Rng rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> a(50), b(50);
    for (auto& v : a) v = rng.uniform_int(0, 12) / 4.0;  // many ties
    for (auto& v : b) v = rng.uniform_int(0, 9) / 3.0;
    CHECK(srocc(a, b) == doctest::Approx(oracle_srocc(a, b)).epsilon(1e-12));
    CHECK(krocc(a, b) == doctest::Approx(oracle_krocc(a, b)).epsilon(1e-12));
    CHECK(plcc(a, b) == doctest::Approx(oracle_pearson(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("rank metrics are invariant under strictly monotone transforms") {
  Rng rng(103);
  std::vector<double> pred(40), labels(40);
  for (auto& v : pred) v = rng.uniform(-2.0, 2.0);
  for (auto& v : labels) v = rng.uniform(0.0, 5.0);
  const double s0 = srocc(pred, labels);
  const double k0 = krocc(pred, labels);
  std::vector<double> exp_t(pred.size()), cube_t(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    exp_t[i] = std::exp(pred[i]);
    cube_t[i] = pred[i] * pred[i] * pred[i];
  }
  CHECK(srocc(exp_t, labels) == doctest::Approx(s0).epsilon(1e-12));
  CHECK(srocc(cube_t, labels) == doctest::Approx(s0).epsilon(1e-12));
  CHECK(krocc(exp_t, labels) == doctest::Approx(k0).epsilon(1e-12));
  CHECK(krocc(cube_t, labels) == doctest::Approx(k0).epsilon(1e-12));
}

TEST_CASE("plcc is invariant under positive affine transforms") {
  Rng rng(107);
  std::vector<double> pred(30), labels(30);
  for (auto& v : pred) v = rng.normal();
  for (auto& v : labels) v = rng.normal();
  const double base = plcc(pred, labels);
  std::vector<double> affine_t(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) affine_t[i] = 3.5 * pred[i] + 11.0;
  CHECK(plcc(affine_t, labels) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("constant inputs raise instead of returning zero") {
  const std::vector<double> flat = {1.0, 1.0, 1.0};
  const std::vector<double> vary = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(plcc(flat, vary), std::invalid_argument);
  CHECK_THROWS_AS(srocc(vary, flat), std::invalid_argument);
  CHECK_THROWS_AS(krocc(flat, vary), std::invalid_argument);
  CHECK_NOTHROW(rmse(flat, vary));
}

TEST_CASE("metric input validation") {
  CHECK_THROWS_AS(plcc({1.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(rmse({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("average ranks handle ties") {
  const std::vector<double> v = {3.0, 1.0, 3.0, 2.0};
  const std::vector<double> r = average_ranks(v);
  CHECK(r[0] == doctest::Approx(3.5));
  CHECK(r[1] == doctest::Approx(1.0));
  CHECK(r[2] == doctest::Approx(3.5));
  CHECK(r[3] == doctest::Approx(2.0));
}

TEST_CASE("rmse is computed on the given scale") {
  CHECK(rmse({1.0, 2.0}, {2.0, 4.0}) == doctest::Approx(std::sqrt((1.0 + 4.0) / 2.0)));
}
