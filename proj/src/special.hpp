#pragma once

#include <math.h>

#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/digamma.hpp>

namespace bdarma::detail {

// glibc's lgamma writes the global signgam; lgamma_r does not.
inline double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

using FastPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

inline double digamma(double x) { return boost::math::digamma(x, FastPolicy()); }

// log(1 / (1 + exp(-x)))
inline double log_sigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace bdarma::detail
