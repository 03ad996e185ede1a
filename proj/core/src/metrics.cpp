#include "qda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qda {

namespace {

void require_paired(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("metric inputs have different lengths");
  if (a.size() < 2) throw std::invalid_argument("metrics need at least 2 samples");
}

bool is_constant(const std::vector<double>& v) {
  for (double x : v)
    if (x != v[0]) return false;
  return true;
}

void require_nonconstant(const std::vector<double>& a, const std::vector<double>& b) {
  if (is_constant(a) || is_constant(b))
    throw std::invalid_argument("correlation undefined for a constant input vector");
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double plcc(const std::vector<double>& predictions, const std::vector<double>& labels) {
  require_paired(predictions, labels);
  require_nonconstant(predictions, labels);
  const std::size_t n = predictions.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += predictions[i];
    my += labels[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = predictions[i] - mx;
    const double dy = labels[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

double srocc(const std::vector<double>& predictions, const std::vector<double>& labels) {
  require_paired(predictions, labels);
  require_nonconstant(predictions, labels);
  return plcc(average_ranks(predictions), average_ranks(labels));
}

double krocc(const std::vector<double>& predictions, const std::vector<double>& labels) {
  require_paired(predictions, labels);
  require_nonconstant(predictions, labels);
  const std::size_t n = predictions.size();
  long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = predictions[i] - predictions[j];
      const double dy = labels[i] - labels[j];
      if (dx == 0.0 && dy == 0.0) {
        ++ties_x;
        ++ties_y;
      } else if (dx == 0.0) {
        ++ties_x;
      } else if (dy == 0.0) {
        ++ties_y;
      } else if (dx * dy > 0.0) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  const double n0 = static_cast<double>(n) * (static_cast<double>(n) - 1.0) / 2.0;
  const double denom = std::sqrt((n0 - static_cast<double>(ties_x)) * (n0 - static_cast<double>(ties_y)));
  if (denom == 0.0) throw std::invalid_argument("correlation undefined: all pairs tied");
  return (static_cast<double>(concordant) - static_cast<double>(discordant)) / denom;
}

double rmse(const std::vector<double>& predictions, const std::vector<double>& labels) {
  require_paired(predictions, labels);
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - labels[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

MetricReport compute_metrics(const std::vector<double>& predictions, const std::vector<double>& labels) {
  MetricReport r;
  r.plcc = plcc(predictions, labels);
  r.srocc = srocc(predictions, labels);
  r.krocc = krocc(predictions, labels);
  r.rmse = rmse(predictions, labels);
  return r;
}

}  // namespace qda
