#include "robshrink/estimators.hpp"

#include <array>
#include <utility>

#include "robshrink/tyler.hpp"

namespace robshrink {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kNames{{
    {Method::sample, "sample"},
    {Method::ls, "ls"},
    {Method::nl, "nl"},
    {Method::tyler, "tyler"},
    {Method::rls, "rls"},
    {Method::rnl, "rnl"},
    {Method::rcnl, "rcnl"},
}};

DataMatrix centered_if(const DataMatrix &y, bool demean) {
  if (!demean) {
    return y;
  }
  return DataMatrix(y.values().rowwise() - y.values().colwise().mean());
}

Matrix rescaled(const SpdMatrix &h, const DataMatrix &y,
                const EstimatorOptions &o) {
  if (o.trace_target == TraceTarget::dimension) {
    return trace_normalize(h, static_cast<double>(h.dim())).values();
  }
  return trace_normalize(h, sample_covariance(y, o.demean).trace()).values();
}

} // namespace

std::string_view method_name(Method m) {
  for (const auto &[method, name] : kNames) {
    if (method == m) {
      return name;
    }
  }
  return "unknown";
}

Method parse_method(std::string_view id) {
  for (const auto &[method, name] : kNames) {
    if (name == id) {
      return method;
    }
  }
  throw InvalidInput("unknown method '" + std::string(id) +
                     "' (expected sample, ls, nl, tyler, rls, rnl or rcnl)");
}

const std::vector<Method> &all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto &entry : kNames) {
      out.push_back(entry.first);
    }
    return out;
  }();
  return methods;
}

EstimateResult run_estimator(Method method, const DataMatrix &y,
                             const EstimatorOptions &o) {
  const Index n_eff = o.demean ? y.n() - 1 : y.n();
  FixedPointConfig fp{o.fixed_point_tol, o.fixed_point_max_iter};
  switch (method) {
  case Method::sample:
    return {sample_covariance(y, o.demean).values(), std::nullopt, std::nullopt};
  case Method::ls:
    return {linear_shrinkage(y, o.demean).values(), std::nullopt, std::nullopt};
  case Method::nl: {
    if (!o.shrinker) {
      throw InvalidInput("nl: no eigenvalue shrinker supplied");
    }
    const SpdMatrix h = nl_estimate(sample_covariance(y, o.demean), n_eff,
                                    *o.shrinker);
    return {h.values(), std::nullopt, std::nullopt};
  }
  case Method::tyler: {
    const AngularData z = normalize_rows(centered_if(y, o.demean));
    return {rescaled(tyler_estimate(z, fp), y, o), std::nullopt, std::nullopt};
  }
  case Method::rls: {
    if (!o.rho) {
      throw InvalidInput("rls: shrinkage intensity rho is required");
    }
    const AngularData z = normalize_rows(centered_if(y, o.demean));
    return {rescaled(robust_linear_shrinkage(z, *o.rho, fp), y, o),
            std::nullopt, std::nullopt};
  }
  case Method::rnl:
  case Method::rcnl: {
    RnlOptions ro;
    ro.shrinker = o.shrinker;
    ro.epsilon = o.epsilon;
    ro.max_iter = o.max_iter;
    ro.demean = o.demean;
    ro.trace_target = o.trace_target;
    ro.observer = o.observer;
    const RnlEstimate e =
        method == Method::rnl ? rnl_estimate(y, ro) : rcnl_estimate(y, ro);
    return {e.h.values(), e.trace.iterations,
            e.trace.criterion_history.empty()
                ? std::optional<double>{}
                : e.trace.criterion_history.back()};
  }
  }
  throw InvalidInput("unhandled method");
}

} // namespace robshrink
