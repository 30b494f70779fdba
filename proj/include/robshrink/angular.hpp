#pragma once

#include "robshrink/numkit.hpp"

namespace robshrink {

// Observations projected onto the unit sphere: every row has norm 1 to within
// 1e-10.
class AngularData {
public:
  // Validates row norms; throws InvalidInput otherwise.
  explicit AngularData(DataMatrix z);

  const DataMatrix &data() const noexcept { return z_; }
  const Matrix &values() const noexcept { return z_.values(); }
  Index n() const noexcept { return z_.n(); }
  Index p() const noexcept { return z_.p(); }

private:
  DataMatrix z_;
};

// Z_t = Y_t / ||Y_t||. Throws InvalidInput naming the first all-zero row.
AngularData normalize_rows(const DataMatrix &y);

} // namespace robshrink
