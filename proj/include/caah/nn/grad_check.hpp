#pragma once

#include <functional>
#include <span>
#include <string>

#include "caah/errors.hpp"
#include "caah/nn/graph.hpp"

namespace caah::nn {

// Raised when a check cannot be performed at all, e.g. a stochastic graph.
class GradCheckError : public Error {
 public:
  using Error::Error;
};

struct NamedParameter {
  std::string name;
  Parameter<double>* param = nullptr;
};

struct GradCheckOptions {
  double rel_tol = 1e-4;
  double step = 1e-5;
  // Denominator floor so entries with vanishing gradients are compared
  // absolutely.
  double abs_floor = 1e-6;
};

struct GradCheckReport {
  bool passed = false;
  double max_rel_error = 0.0;
  std::string worst_entry;
  std::size_t checked = 0;
  std::string failure;  // set when a non-finite value was seen
};

// Builds a scalar loss on a fresh graph. Called once for the analytic
// gradient and twice per parameter entry for central differences.
using Objective = std::function<Expr<double>(Graph<double>&)>;

// Compares every analytic gradient entry of `params` with central finite
// differences. rel_error = |a - n| / max(|a|, |n|, abs_floor).
GradCheckReport grad_check(const Objective& objective, std::span<const NamedParameter> params,
                           const GradCheckOptions& options = {});

}  // namespace caah::nn
