#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace bopt {

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

using Bounds = std::pair<Eigen::VectorXd, Eigen::VectorXd>;  // lower, upper

// Derivative-free simplex minimization (reflect / expand / contract / shrink).
// With bounds, every trial point is clamped into the box before evaluation.
// Returns the best point ever evaluated, so the result is never worse than
// the start.
inline NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, double step, int max_iterations,
    const std::optional<Bounds>& bounds = {}) {
  const int n = static_cast<int>(start.size());
  int evaluations = 0;

  auto clamp = [&](Eigen::VectorXd x) {
    if (bounds) {
      x = x.cwiseMax(bounds->first).cwiseMin(bounds->second);
    }
    return x;
  };
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    const double f = objective(x);
    return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
  };

  std::vector<Eigen::VectorXd> simplex;
  simplex.reserve(n + 1);
  simplex.push_back(clamp(start));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd vertex = start;
    vertex[i] += step;
    vertex = clamp(vertex);
    if ((vertex - simplex[0]).norm() == 0.0) {
      vertex = start;
      vertex[i] -= step;  // start sat on the upper bound
      vertex = clamp(vertex);
    }
    simplex.push_back(vertex);
  }
  std::vector<double> values(n + 1);
  for (int i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  Eigen::VectorXd best_x = simplex[0];
  double best_value = values[0];
  auto remember = [&](const Eigen::VectorXd& x, double f) {
    if (f < best_value) {
      best_value = f;
      best_x = x;
    }
  };
  for (int i = 0; i <= n; ++i) remember(simplex[i], values[i]);

  constexpr double alpha = 1.0;  // reflection
  constexpr double gamma = 2.0;  // expansion
  constexpr double rho = 0.5;    // contraction
  constexpr double sigma = 0.5;  // shrink

  std::vector<int> order(n + 1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return values[a] < values[b]; });
    const int lo = order[0], hi = order[n], second_hi = order[n - 1];

    // Relative spread only, so the trajectory is invariant under positive
    // rescaling of the objective; also stops exactly-flat simplices.
    if (values[hi] - values[lo] <=
        1e-13 * (std::abs(values[lo]) + std::abs(values[hi]))) {
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i) {
      if (i != hi) centroid += simplex[i];
    }
    centroid /= n;

    const Eigen::VectorXd reflected =
        clamp(centroid + alpha * (centroid - simplex[hi]));
    const double f_reflected = eval(reflected);
    remember(reflected, f_reflected);

    if (f_reflected < values[lo]) {
      const Eigen::VectorXd expanded =
          clamp(centroid + gamma * (reflected - centroid));
      const double f_expanded = eval(expanded);
      remember(expanded, f_expanded);
      if (f_expanded < f_reflected) {
        simplex[hi] = expanded;
        values[hi] = f_expanded;
      } else {
        simplex[hi] = reflected;
        values[hi] = f_reflected;
      }
    } else if (f_reflected < values[second_hi]) {
      simplex[hi] = reflected;
      values[hi] = f_reflected;
    } else {
      const Eigen::VectorXd contracted =
          clamp(centroid + rho * (simplex[hi] - centroid));
      const double f_contracted = eval(contracted);
      remember(contracted, f_contracted);
      if (f_contracted < values[hi]) {
        simplex[hi] = contracted;
        values[hi] = f_contracted;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == lo) continue;
          simplex[i] = clamp(simplex[lo] + sigma * (simplex[i] - simplex[lo]));
          values[i] = eval(simplex[i]);
          remember(simplex[i], values[i]);
        }
      }
    }
  }

  return {best_x, best_value, evaluations};
}

}  // namespace bopt
