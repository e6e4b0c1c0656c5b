#include "selrcn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "selrcn/errors.hpp"
#include "selrcn/rng.hpp"

namespace selrcn {

namespace {

struct Evaluation {
  double value = 0.0;
  std::uint64_t branches = 0;
};

Evaluation evaluate(const ScalarFunction& f) {
  Tape tape(Precision::f64);
  tape.set_grad_enabled(false);
  tape.set_track_branches(true);
  const Tensor out = f(tape);
  if (out.numel() != 1) throw ContractError("grad_check: function must return a scalar");
  return {out.item(), tape.branch_signature()};
}

}  // namespace

GradCheckResult grad_check(const ScalarFunction& f, std::span<Tensor> params, const GradCheckOptions& options) {
  std::vector<bool> previously_required(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    previously_required[i] = params[i].requires_grad();
    params[i].set_requires_grad(true);
    params[i].clear_grad();
  }

  std::vector<std::vector<double>> analytic(params.size());
  {
    Tape tape(Precision::f64);
    const Tensor loss = f(tape);
    tape.backward(loss);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto g = params[i].grad();
      analytic[i] = g.empty() ? std::vector<double>(params[i].numel(), 0.0) : std::vector<double>(g.begin(), g.end());
    }
  }

  GradCheckResult result;
  const Evaluation base = evaluate(f);
  Rng rng(options.seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    std::vector<std::size_t> coords(p.numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_tensor != 0 && coords.size() > options.max_coords_per_tensor) {
      rng.shuffle(std::span<std::size_t>(coords));
      coords.resize(options.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t j : coords) {
      const double original = p.data()[j];
      const auto at = [&](double offset, bool& smooth) {
        p.mutable_data()[j] = original + offset;
        const Evaluation e = evaluate(f);
        smooth = smooth && e.branches == base.branches;
        return e.value;
      };
      std::optional<double> numeric;
      double h = options.step;
      for (std::size_t attempt = 0; attempt <= options.refinements && !numeric; ++attempt, h /= 10.0) {
        bool smooth = true;
        const double d1 = at(h, smooth) - at(-h, smooth);
        const double d2 = at(2.0 * h, smooth) - at(-2.0 * h, smooth);
        if (smooth) numeric = (8.0 * d1 - d2) / (12.0 * h);
      }
      p.mutable_data()[j] = original;
      if (!numeric) {
        ++result.coords_skipped;
        continue;
      }
      const double a = analytic[i][j];
      const double denom = std::max({std::abs(a), std::abs(*numeric), 1e-8});
      const double err = std::abs(a - *numeric) / denom;
      ++result.coords_checked;
      if (err > result.max_relative_error || std::isnan(err)) {
        result.max_relative_error = err;
        result.worst_tensor = i;
        result.worst_index = j;
        result.worst_analytic = a;
        result.worst_numeric = *numeric;
      }
    }
  }

  for (std::size_t i = 0; i < params.size(); ++i) params[i].set_requires_grad(previously_required[i]);
  return result;
}

double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x, double step) {
  Tensor input = x;
  std::vector<Tensor> params{input};
  GradCheckOptions options;
  options.step = step;
  return grad_check([&](Tape& tape) { return f(tape, input); }, params, options).max_relative_error;
}

}  // namespace selrcn
