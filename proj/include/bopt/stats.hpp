#pragma once

#include <cmath>
#include <numbers>

namespace bopt {

inline double norm_pdf(double z) {
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

// Standard normal CDF through erfc, accurate to a few ulp over the whole
// real line (comfortably beyond the 1e-12 contract).
inline double norm_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

}  // namespace bopt
