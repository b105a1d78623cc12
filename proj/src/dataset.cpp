#include "icmpr/dataset.hpp"

#include "icmpr/errors.hpp"

#include <cmath>

namespace icmpr {

int Dataset::n_right_censored() const {
  int k = 0;
  for (int i = 0; i < n(); ++i)
    if (std::isinf(right[i])) ++k;
  return k;
}

int Dataset::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < column_names.size(); ++j)
    if (column_names[j] == name) return static_cast<int>(j);
  return -1;
}

void Dataset::validate() const {
  if (right.size() != left.size())
    throw ValidationError("left/right endpoint vectors differ in length");
  if (covariates.rows() != left.size())
    throw ValidationError("covariate matrix rows do not match endpoint count");
  if (static_cast<int>(column_names.size()) != covariates.cols())
    throw ValidationError("column name count does not match covariate matrix");
  for (int i = 0; i < n(); ++i) {
    if (!(left[i] >= 0.0))
      throw ValidationError("left endpoint negative at row " + std::to_string(i + 1));
    if (!(right[i] > left[i]))
      throw ValidationError("interval empty at row " + std::to_string(i + 1));
    if (std::isnan(right[i]) || std::isinf(left[i]))
      throw ValidationError("non-finite endpoint at row " + std::to_string(i + 1));
  }
  if (!covariates.allFinite()) throw ValidationError("covariate matrix has non-finite entries");
}

}  // namespace icmpr
