#include "robshrink/angular.hpp"

#include <cmath>
#include <string>

namespace robshrink {

AngularData::AngularData(DataMatrix z) : z_(std::move(z)) {
  const Vector norms = z_.values().rowwise().norm();
  for (Index t = 0; t < norms.size(); ++t) {
    if (std::abs(norms(t) - 1.0) > 1e-10) {
      throw InvalidInput("AngularData: row " + std::to_string(t) +
                         " does not have unit norm");
    }
  }
}

AngularData normalize_rows(const DataMatrix &y) {
  Matrix z = y.values();
  for (Index t = 0; t < z.rows(); ++t) {
    const double norm = z.row(t).norm();
    if (norm == 0.0) {
      throw InvalidInput("normalize_rows: row " + std::to_string(t) +
                         " is all zero");
    }
    z.row(t) /= norm;
  }
  return AngularData(DataMatrix(std::move(z)));
}

} // namespace robshrink
