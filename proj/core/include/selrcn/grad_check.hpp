#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "selrcn/tape.hpp"
#include "selrcn/tensor.hpp"

namespace selrcn {

struct GradCheckOptions {
  /// Initial finite-difference step δ.
  double step = 1e-3;
  /// Times δ is divided by 10 when a perturbation changes the branch taken by
  /// a piecewise-linear op; a coordinate still straddling a kink after the
  /// last refinement is skipped.
  std::size_t refinements = 2;
  /// Coordinates sampled per tensor; 0 checks every coordinate.
  std::size_t max_coords_per_tensor = 0;
  /// Seed for coordinate sampling.
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t coords_skipped = 0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Builds a scalar on the tape it is given. Called once with recording on and
/// then repeatedly with recording off.
using ScalarFunction = std::function<Tensor(Tape&)>;

/// Compares reverse-mode gradients of `f` with respect to `params` against
/// the fourth-order central difference
///   (8·[f(x+δ) − f(x−δ)] − [f(x+2δ) − f(x−2δ)]) / 12δ,
/// all in 64-bit precision. The error for a coordinate is
/// |analytic − numeric| / max(|analytic|, |numeric|, 1e-8); the maximum is
/// reported. Parameter values are restored on return; their gradients are
/// overwritten.
GradCheckResult grad_check(const ScalarFunction& f, std::span<Tensor> params, const GradCheckOptions& options = {});

/// Single-input convenience form. Returns the max relative error.
double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& x, double step = 1e-3);

}  // namespace selrcn
