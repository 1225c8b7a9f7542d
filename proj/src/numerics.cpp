#include "degen/numerics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "degen/errors.hpp"

namespace degen {

namespace {

// Largest double below 1. Gate outputs must stay inside the open interval
// even where exp() rounds to the boundary.
constexpr double kBelowOne = 1.0 - std::numeric_limits<double>::epsilon() / 2;

}  // namespace

double stable_sigmoid(double x) {
  double y;
  if (x >= 0.0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    y = e / (1.0 + e);
  }
  if (y >= 1.0) y = kBelowOne;
  if (y <= 0.0) y = std::numeric_limits<double>::denorm_min();
  return y;
}

double clamped_tanh(double x) {
  double y = std::tanh(x);
  if (y >= 1.0) y = kBelowOne;
  if (y <= -1.0) y = -kBelowOne;
  return y;
}

Vector apply_activation(Activation kind, const Vector& v) {
  require_finite(v, "apply_activation input");
  Vector out(v.size());
  switch (kind) {
    case Activation::sigmoid:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = stable_sigmoid(v[i]);
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < v.size(); ++i) out[i] = clamped_tanh(v[i]);
      break;
    case Activation::identity:
      out = v;
      break;
  }
  return out;
}

Vector affine(const Matrix& w, const Vector& v, const Vector& b) {
  if (w.cols != v.size() || w.rows != b.size()) {
    throw ShapeError("affine: W is " + std::to_string(w.rows) + "x" +
                     std::to_string(w.cols) + " but v has " +
                     std::to_string(v.size()) + " and b has " +
                     std::to_string(b.size()) + " entries");
  }
  Vector out(w.rows);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    double acc = b[r];
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * v[c];
    out[r] = acc;
  }
  return out;
}

Vector matvec_transposed(const Matrix& w, const Vector& v) {
  if (w.rows != v.size()) {
    throw ShapeError("matvec_transposed: W has " + std::to_string(w.rows) +
                     " rows but v has " + std::to_string(v.size()) +
                     " entries");
  }
  Vector out(w.cols, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    const double vr = v[r];
    for (std::size_t c = 0; c < w.cols; ++c) out[c] += wr[c] * vr;
  }
  return out;
}

void add_outer(Matrix& m, const Vector& a, const Vector& b) {
  if (m.rows != a.size() || m.cols != b.size()) {
    throw ShapeError("add_outer: shape mismatch");
  }
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* mr = m.row(r);
    const double ar = a[r];
    for (std::size_t c = 0; c < m.cols; ++c) mr[c] += ar * b[c];
  }
}

Matrix xavier_init(std::size_t rows, std::size_t cols, SeededRng& rng) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("xavier_init: dimensions must be positive");
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (auto& x : m.values) x = rng.uniform(-limit, limit);
  return m;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum_of_squares(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

bool all_finite(const Vector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void require_finite(const Vector& v, std::string_view what) {
  if (!all_finite(v)) {
    throw InvalidInputError(std::string(what) + ": non-finite entry");
  }
}

}  // namespace degen
