#include "degen/baselines.hpp"

#include <cmath>
#include <string>

#include "degen/errors.hpp"

namespace degen {

Vector build_design(const TrainSample& sample, const DesignSpec& spec) {
  const std::size_t dyn_dim = spec.multi ? 2 : 1;
  Vector row;
  row.reserve(sample.inputs.size() * dyn_dim + sample.statics.size());
  for (const auto& x : sample.inputs) {
    if (x.size() != dyn_dim) {
      throw ShapeError("build_design: sample carries " +
                       std::to_string(x.size()) +
                       " dynamic columns but the spec expects " +
                       std::to_string(dyn_dim));
    }
    row.insert(row.end(), x.begin(), x.end());
  }
  if (spec.use_features) {
    if (sample.statics.empty()) {
      throw ShapeError("build_design: spec wants features but the sample has "
                       "no statics");
    }
    row.insert(row.end(), sample.statics.begin(), sample.statics.end());
  }
  return row;
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  if (a.rows != a.cols || a.rows != b.rows) {
    throw ShapeError("solve_spd: shape mismatch");
  }
  const std::size_t n = a.rows;
  Matrix chol(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = a(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= chol(i, k) * chol(j, k);
      if (i == j) {
        if (acc <= 1e-12) {
          throw SingularityError(
              "normal equations are singular; use lambda > 0");
        }
        chol(i, i) = std::sqrt(acc);
      } else {
        chol(i, j) = acc / chol(j, j);
      }
    }
  }

  Matrix x(n, b.cols);
  for (std::size_t col = 0; col < b.cols; ++col) {
    // forward substitution: L y = b
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = b(i, col);
      for (std::size_t k = 0; k < i; ++k) acc -= chol(i, k) * y[k];
      y[i] = acc / chol(i, i);
    }
    // back substitution: L^T x = y
    for (std::size_t i = n; i-- > 0;) {
      double acc = y[i];
      for (std::size_t k = i + 1; k < n; ++k) acc -= chol(k, i) * x(k, col);
      x(i, col) = acc / chol(i, i);
    }
  }
  return x;
}

RegressionModel fit_ridge(const Matrix& rows, const Matrix& targets,
                          double lambda) {
  if (rows.rows == 0) throw InvalidInputError("fit_ridge: no rows");
  if (rows.rows != targets.rows) {
    throw ShapeError("fit_ridge: " + std::to_string(rows.rows) +
                     " rows vs " + std::to_string(targets.rows) + " targets");
  }
  if (lambda < 0.0) throw InvalidInputError("fit_ridge: lambda must be >= 0");

  const std::size_t n = rows.rows;
  const std::size_t d = rows.cols;
  const std::size_t out = targets.cols;

  Vector x_mean(d, 0.0), y_mean(out, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) x_mean[c] += rows(r, c);
    for (std::size_t c = 0; c < out; ++c) y_mean[c] += targets(r, c);
  }
  for (auto& v : x_mean) v /= static_cast<double>(n);
  for (auto& v : y_mean) v /= static_cast<double>(n);

  // Gram matrix and cross-products on centered data
  Matrix gram(d, d);
  Matrix xty(d, out);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t ci = 0; ci < d; ++ci) {
      const double xi = rows(r, ci) - x_mean[ci];
      for (std::size_t cj = ci; cj < d; ++cj) {
        gram(ci, cj) += xi * (rows(r, cj) - x_mean[cj]);
      }
      for (std::size_t co = 0; co < out; ++co) {
        xty(ci, co) += xi * (targets(r, co) - y_mean[co]);
      }
    }
  }
  for (std::size_t ci = 0; ci < d; ++ci) {
    for (std::size_t cj = 0; cj < ci; ++cj) gram(ci, cj) = gram(cj, ci);
    gram(ci, ci) += lambda;
  }

  Matrix beta = solve_spd(gram, xty);  // d x out

  RegressionModel model;
  model.ridge_lambda = lambda;
  model.coefficients = Matrix(out, d);
  model.intercept = Vector(out, 0.0);
  for (std::size_t co = 0; co < out; ++co) {
    double b0 = y_mean[co];
    for (std::size_t ci = 0; ci < d; ++ci) {
      model.coefficients(co, ci) = beta(ci, co);
      b0 -= beta(ci, co) * x_mean[ci];
    }
    model.intercept[co] = b0;
  }
  return model;
}

Vector predict_regression(const RegressionModel& model, const Vector& row) {
  return affine(model.coefficients, row, model.intercept);
}

}  // namespace degen
