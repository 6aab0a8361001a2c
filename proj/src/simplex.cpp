#include "bdarma/simplex.hpp"

#include <cmath>
#include <string>

#include "bdarma/errors.hpp"

namespace bdarma {

Composition::Composition(Vector values) : values_(std::move(values)) {
  if (values_.size() < 2) throw DimensionError("composition needs at least 2 parts");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < values_.size(); ++j) {
    const double v = values_[j];
    if (!std::isfinite(v) || v <= 0.0) {
      throw DomainError("composition entry " + std::to_string(j) + " is not strictly positive");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw DomainError("composition does not sum to 1 (sum=" + std::to_string(sum) + ")");
  }
}

Composition Composition::normalized(const Vector& positive) {
  return Composition(positive / positive.sum());
}

Matrix helmert_contrast(int parts) {
  if (parts < 2) throw DimensionError("helmert_contrast requires C >= 2");
  Matrix v = Matrix::Zero(parts, parts - 1);
  for (int i = 1; i < parts; ++i) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(i) * (i + 1));
    for (int j = 0; j < i; ++j) v(j, i - 1) = scale;
    v(i, i - 1) = -static_cast<double>(i) * scale;
  }
  return v;
}

Vector clr(const Vector& positive) {
  if ((positive.array() <= 0.0).any() || !positive.allFinite()) {
    throw DomainError("clr requires strictly positive entries");
  }
  Vector logs = positive.array().log();
  return logs.array() - logs.mean();
}

Vector clr(const Composition& y) { return clr(y.values()); }

Vector ilr(const Composition& y, const Matrix& contrast) {
  if (contrast.rows() != y.size() || contrast.cols() != y.size() - 1) {
    throw DimensionError("ilr: contrast matrix does not match composition size");
  }
  return contrast.transpose() * clr(y);
}

void ilr_inv_into(const Vector& coords, const Matrix& contrast, Vector& out) {
  out.noalias() = contrast * coords;
  const double peak = out.maxCoeff();
  out = (out.array() - peak).exp();
  out /= out.sum();
}

Composition ilr_inv(const Vector& coords, const Matrix& contrast) {
  if (contrast.cols() != coords.size()) {
    throw DimensionError("ilr_inv: contrast matrix does not match coordinate size");
  }
  if (!coords.allFinite()) throw DomainError("ilr_inv: non-finite coordinates");
  Vector out;
  ilr_inv_into(coords, contrast, out);
  // Extreme coordinates can underflow a share to exactly zero.
  if ((out.array() <= 0.0).any()) return close_with_floor(out, 1e-300);
  return Composition(std::move(out));
}

double aitchison_distance(const Composition& x, const Composition& y) {
  if (x.size() != y.size()) throw DimensionError("aitchison_distance: size mismatch");
  return (clr(x) - clr(y)).norm();
}

Composition close_with_floor(const Vector& raw, double floor) {
  if (raw.size() < 2) throw DimensionError("close_with_floor: need at least 2 parts");
  if (!raw.allFinite() || (raw.array() < 0.0).any()) {
    throw DomainError("close_with_floor: entries must be finite and non-negative");
  }
  if (!(raw.array() > 0.0).any()) throw DomainError("close_with_floor: all-zero input");
  Vector floored = raw.array().max(floor);
  floored /= floored.sum();
  return Composition(std::move(floored));
}

}  // namespace bdarma
