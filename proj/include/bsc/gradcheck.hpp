#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bsc/matrix.hpp"

namespace bsc {

struct GradCheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// |analytic - numeric| relative to max(1, |analytic|, |numeric|), so checks
// stay meaningful for near-zero gradients.
double gradient_error(double analytic, double numeric);

// Central difference d f / d x at the given coordinate, step h.
double central_difference(double& x, double h, const std::function<double()>& f);

// Worst gradient_error over all entries of `params`, comparing `analytic`
// against central differences of `f`.
double max_gradient_error(Matrix& params, const Matrix& analytic, double h,
                          const std::function<double()>& f);

// The full finite-difference suite: every pairwise loss variant crossed with
// every normalization mode (embedding gradients and trainable-temperature
// gradients at 1e-6), the triplet loss, the normalization backward passes,
// and the end-to-end encoder chain at 1e-5.
std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed);

bool all_passed(const std::vector<GradCheckResult>& results);

}  // namespace bsc
