#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robshrink/rnl.hpp"

namespace robshrink {

enum class Method { sample, ls, nl, tyler, rls, rnl, rcnl };

// "sample", "ls", "nl", "tyler", "rls", "rnl", "rcnl".
std::string_view method_name(Method m);
// Throws InvalidInput for an unknown id.
Method parse_method(std::string_view id);
const std::vector<Method> &all_methods();

struct EstimatorOptions {
  bool demean = false;
  // Required by Method::rls.
  std::optional<double> rho;
  double epsilon = 1e-10;
  int max_iter = 1000;
  double fixed_point_tol = 1e-8;
  int fixed_point_max_iter = 1000;
  TraceTarget trace_target = TraceTarget::dimension;
  std::shared_ptr<const EigenvalueShrinker> shrinker = default_shrinker();
  std::function<void(const VIterationStep &)> observer;
};

struct EstimateResult {
  // Symmetric; positive definite for every method except possibly `sample`.
  Matrix matrix;
  std::optional<int> iterations;
  std::optional<double> final_criterion;
};

// Runs one estimator on raw observations (rows). Scales: sample, ls and nl
// return covariance-scale matrices; tyler, rls, rnl and rcnl return
// dispersion estimates normalized per options.trace_target.
EstimateResult run_estimator(Method method, const DataMatrix &y,
                             const EstimatorOptions &options);

} // namespace robshrink
