#include "qda/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace qda {

GradCheckReport grad_check(const std::function<Var()>& loss_fn,
                           const std::vector<std::pair<std::string, Var>>& params, double tolerance, double step,
                           long max_entries_per_param) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");

  const double first = loss_fn().value().item();
  const double second = loss_fn().value().item();
  if (first != second) throw std::logic_error("grad_check: loss function is not deterministic; check invalid");

  for (auto& [name, p] : params) {
    Var v = p;
    v.zero_grad();
  }
  Var loss = loss_fn();
  loss.backward();

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, p] : params)
    analytic.push_back(p.has_grad() ? p.grad() : Tensor::zeros(p.value().shape()));

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Var p = params[pi].second;
    Tensor& value = p.mutable_value();
    const long total = value.size();
    const long limit = (max_entries_per_param < 0) ? total : std::min(total, max_entries_per_param);
    // Deterministic stride sample when a cap is requested.
    const long stride = (limit > 0) ? std::max<long>(1, total / limit) : 1;
    for (long i = 0; i < total && (max_entries_per_param < 0 || i / stride < limit); i += stride) {
      const double saved = value[i];
      value[i] = saved + step;
      const double up = loss_fn().value().item();
      value[i] = saved - step;
      const double down = loss_fn().value().item();
      value[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-2});
      const double rel = std::abs(a - numeric) / denom;
      ++report.entries_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_entry = params[pi].first + "[" + std::to_string(i) + "]";
      }
    }
  }
  report.pass = report.max_rel_error < tolerance;
  return report;
}

}  // namespace qda
