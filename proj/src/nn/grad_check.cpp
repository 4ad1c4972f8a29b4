#include "caah/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace caah::nn {

namespace {

double evaluate(const Objective& objective) {
  Graph<double> g;
  return objective(g).value().item();
}

std::string entry_name(const NamedParameter& p, std::size_t k) {
  return p.name + "[" + std::to_string(k) + "]";
}

}  // namespace

GradCheckReport grad_check(const Objective& objective, std::span<const NamedParameter> params,
                           const GradCheckOptions& options) {
  GradCheckReport report;
  for (const auto& p : params) p.param->zero_grad();
  {
    Graph<double> g;
    const auto loss = objective(g);
    if (g.stochastic()) {
      throw GradCheckError(
          "grad_check: the objective graph contains active dropout; finite differences of a "
          "stochastic graph are meaningless. Evaluate the model in eval mode.");
    }
    if (!std::isfinite(loss.value().item())) {
      report.failure = "non-finite loss at the base point";
      return report;
    }
    g.backward(loss);
  }

  for (const auto& p : params) {
    auto& value = p.param->value;
    const auto& grad = p.param->grad;
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double analytic = grad[k];
      const double saved = value[k];
      value[k] = saved + options.step;
      const double plus = evaluate(objective);
      value[k] = saved - options.step;
      const double minus = evaluate(objective);
      value[k] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      ++report.checked;
      if (!std::isfinite(analytic) || !std::isfinite(numeric)) {
        report.failure = "non-finite gradient at " + entry_name(p, k);
        report.passed = false;
        return report;
      }
      const double denom = std::max({std::abs(analytic), std::abs(numeric), options.abs_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_entry = entry_name(p, k);
      }
    }
  }
  report.passed = report.max_rel_error < options.rel_tol;
  return report;
}

}  // namespace caah::nn
