#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace bopt {

namespace detail {
inline constexpr unsigned kHaltonBases[] = {
    2,  3,  5,  7,  11, 13, 17, 19, 23, 29,  31,  37,  41,  43,  47,  53,
    59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
inline constexpr int kMaxHaltonDim =
    static_cast<int>(sizeof(kHaltonBases) / sizeof(kHaltonBases[0]));
}  // namespace detail

inline double radical_inverse(std::uint64_t index, unsigned base) {
  double value = 0.0;
  double digit = 1.0 / base;
  while (index > 0) {
    value += digit * static_cast<double>(index % base);
    index /= base;
    digit /= base;
  }
  return value;
}

// index must be >= 1; index 0 is the all-zero corner.
inline Eigen::VectorXd halton_point(std::uint64_t index, int dim) {
  if (dim < 1 || dim > detail::kMaxHaltonDim) {
    throw std::invalid_argument("halton_point: dimension out of range");
  }
  Eigen::VectorXd point(dim);
  for (int d = 0; d < dim; ++d) {
    point[d] = radical_inverse(index, detail::kHaltonBases[d]);
  }
  return point;
}

// Cranley-Patterson rotation: frac(halton + shift). Keeps the low-discrepancy
// structure while making the stream depend on the seed-derived shift.
inline Eigen::VectorXd shifted_halton_point(std::uint64_t index,
                                            const Eigen::VectorXd& shift) {
  Eigen::VectorXd point = halton_point(index, static_cast<int>(shift.size()));
  for (int d = 0; d < shift.size(); ++d) {
    const double v = point[d] + shift[d];
    point[d] = v - std::floor(v);
  }
  return point;
}

}  // namespace bopt
