#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "degen/rng.hpp"

namespace degen {

using Vector = std::vector<double>;

/// Dense row-major matrix. Kept deliberately minimal: the cohorts here are
/// desk scale, so clarity beats BLAS throughput.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) {
    return values[r * cols + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }

  const double* row(std::size_t r) const { return values.data() + r * cols; }
  double* row(std::size_t r) { return values.data() + r * cols; }
};

enum class Activation { sigmoid, tanh, identity };

/// Numerically stable logistic; result clamped to the open interval (0, 1).
double stable_sigmoid(double x);

/// tanh clamped to the open interval (-1, 1).
double clamped_tanh(double x);

/// Elementwise activation. Rejects non-finite inputs.
Vector apply_activation(Activation kind, const Vector& v);

/// W * v + b. Shapes must agree.
Vector affine(const Matrix& w, const Vector& v, const Vector& b);

/// W^T * v (used by reverse-mode accumulation).
Vector matvec_transposed(const Matrix& w, const Vector& v);

/// M += a * b^T.
void add_outer(Matrix& m, const Vector& a, const Vector& b);

/// Xavier-uniform init: entries in [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].
Matrix xavier_init(std::size_t rows, std::size_t cols, SeededRng& rng);

double dot(const Vector& a, const Vector& b);

double sum_of_squares(const Vector& v);

bool all_finite(const Vector& v);

/// Throws InvalidInputError naming `what` if v has a NaN or infinity.
void require_finite(const Vector& v, std::string_view what);

}  // namespace degen
