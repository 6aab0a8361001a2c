#pragma once

#include <Eigen/Dense>

namespace bdarma {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Strictly positive vector of proportions summing to one.
///
/// Validation happens once, at construction; every other operation in the
/// library may assume a Composition is well formed.
class Composition {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Throws DomainError unless every entry is > 0, finite, and the entries
  /// sum to 1 within kSumTolerance.
  explicit Composition(Vector values);

  /// Divides by the sum before validating; for outputs of exp/gamma draws.
  static Composition normalized(const Vector& positive);

  const Vector& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index j) const { return values_[j]; }

 private:
  Vector values_;
};

/// C x (C-1) Helmert-style orthonormal contrast matrix.
///
/// Column i (1-based) has 1/sqrt(i(i+1)) in rows 1..i, -i/sqrt(i(i+1)) in
/// row i+1 and zeros below.
Matrix helmert_contrast(int parts);

Vector clr(const Composition& y);
Vector clr(const Vector& positive);

Vector ilr(const Composition& y, const Matrix& contrast);

/// Inverse ILR. Max-subtracted before exponentiation so any finite input maps
/// to a valid composition.
Composition ilr_inv(const Vector& coords, const Matrix& contrast);

/// Softmax of contrast * coords written into `out`; no validation, hot path.
void ilr_inv_into(const Vector& coords, const Matrix& contrast, Vector& out);

double aitchison_distance(const Composition& x, const Composition& y);

/// Replaces entries below `floor` by `floor`, then renormalizes.
Composition close_with_floor(const Vector& raw, double floor = 1e-8);

}  // namespace bdarma
