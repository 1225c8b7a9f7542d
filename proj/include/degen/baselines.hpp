#pragma once

#include <string>
#include <vector>

#include "degen/dataset.hpp"
#include "degen/numerics.hpp"

namespace degen {

/// Design toggles mirroring the experiment grid columns.
struct DesignSpec {
  bool multi = false;
  bool use_features = false;
};

/// Multiple linear regression on lagged score histories, ridge-stabilized.
/// The intercept is fitted by centering and never penalized.
struct RegressionModel {
  Matrix coefficients;  // out_dim x design_dim
  Vector intercept;     // out_dim
  double ridge_lambda = 0.0;
  DesignSpec design_spec;
};

/// Flattens the history of waves 1..T-1 for the selected indices and, when
/// use_features is on, appends the encoded static vector. The sample must
/// come from a train set built with the same toggles.
Vector build_design(const TrainSample& sample, const DesignSpec& spec);

/// Solves (X^T X + lambda I) beta = X^T Y per output column after centering;
/// lambda never touches the intercept. Throws SingularityError at lambda=0
/// when the normal equations are singular.
RegressionModel fit_ridge(const Matrix& rows, const Matrix& targets,
                          double lambda);

Vector predict_regression(const RegressionModel& model, const Vector& row);

/// Symmetric positive-definite solve via Cholesky; shared with tests.
/// a is n x n, b is n x m; returns the n x m solution.
Matrix solve_spd(const Matrix& a, const Matrix& b);

}  // namespace degen
