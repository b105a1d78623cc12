#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace icmpr {

// Interval-censored observations (left[i], right[i]] with right[i] = +inf
// for right censoring, plus the covariate matrix. Endpoints are stored
// offset-adjusted.
struct Dataset {
  Eigen::VectorXd left;
  Eigen::VectorXd right;
  Eigen::MatrixXd covariates;  // n x m
  std::vector<std::string> column_names;

  int n() const { return static_cast<int>(left.size()); }
  int n_columns() const { return static_cast<int>(covariates.cols()); }

  int n_right_censored() const;

  // Index of a named covariate column, -1 if absent.
  int column_index(const std::string& name) const;

  // left >= 0, right > left, finite covariates, consistent shapes.
  void validate() const;
};

}  // namespace icmpr
