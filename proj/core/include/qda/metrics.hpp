#pragma once

#include <vector>

namespace qda {

struct MetricReport {
  double plcc = 0.0;
  double srocc = 0.0;
  double krocc = 0.0;
  double rmse = 0.0;
};

// Pearson linear correlation.
double plcc(const std::vector<double>& predictions, const std::vector<double>& labels);
// Spearman rank correlation with averaged ranks on ties.
double srocc(const std::vector<double>& predictions, const std::vector<double>& labels);
// Kendall tau-b.
double krocc(const std::vector<double>& predictions, const std::vector<double>& labels);
// Root mean squared error on the given scale.
double rmse(const std::vector<double>& predictions, const std::vector<double>& labels);

// Average ranks (1-based, ties averaged).
std::vector<double> average_ranks(const std::vector<double>& values);

MetricReport compute_metrics(const std::vector<double>& predictions, const std::vector<double>& labels);

}  // namespace qda
