#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qda/autodiff.hpp"

namespace qda {

struct GradCheckReport {
  double max_rel_error = 0.0;
  long entries_checked = 0;
  bool pass = false;
  std::string worst_entry;  // "name[i]" of the worst mismatch
};

// Compares reverse-mode gradients of a scalar loss against central finite
// differences over every entry of the given leaf parameters. The loss
// function must rebuild its graph from the current parameter values on every
// call and be deterministic; non-determinism (detected by a repeated
// evaluation) invalidates the check.
//
// Relative error uses max(|analytic|, |numeric|, 0.01) as the denominator so
// finite-difference round-off on near-zero gradients cannot fail the check.
GradCheckReport grad_check(const std::function<Var()>& loss_fn,
                           const std::vector<std::pair<std::string, Var>>& params, double tolerance,
                           double step = 1e-5, long max_entries_per_param = -1);

}  // namespace qda
