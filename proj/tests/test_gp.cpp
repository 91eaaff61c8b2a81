#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "bopt/gp.hpp"
#include "bopt/stats.hpp"
#include "oracles.hpp"

using namespace bopt;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (const double x : values) v[i++] = x;
  return v;
}

GpHyperparams make_hyper(double amplitude, std::initializer_list<double> scales,
                         double noise, double mean) {
  GpHyperparams hyper;
  hyper.amplitude = amplitude;
  hyper.length_scales = vec(scales);
  hyper.noise_variance = noise;
  hyper.mean = mean;
  return hyper;
}

GpHyperparams random_hyper(int dim, std::mt19937_64& rng, double noise) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GpHyperparams hyper;
  hyper.amplitude = 0.5 + 1.5 * unit(rng);
  hyper.length_scales.resize(dim);
  for (int d = 0; d < dim; ++d) hyper.length_scales[d] = 0.15 + unit(rng);
  hyper.noise_variance = noise;
  hyper.mean = -1.0 + 2.0 * unit(rng);
  return hyper;
}

Eigen::MatrixXd random_inputs(int n, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd inputs(n, dim);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) inputs(i, d) = unit(rng);
  }
  return inputs;
}

}  // namespace

TEST_CASE("squared_distance basics") {
  const auto ones = vec({1.0, 1.0});
  CHECK(squared_distance(vec({0.3, 0.7}), vec({0.3, 0.7}), ones) == 0.0);
  CHECK(squared_distance(vec({0.0}), vec({2.0}), vec({2.0})) ==
        doctest::Approx(1.0));
  CHECK(squared_distance(vec({1.0, 0.0}), vec({0.0, 3.0}), vec({1.0, 3.0})) ==
        doctest::Approx(2.0));
  CHECK(squared_distance(vec({1.0, 2.0}), vec({2.0, 1.0}), ones) ==
        squared_distance(vec({2.0, 1.0}), vec({1.0, 2.0}), ones));
  CHECK_THROWS_AS(squared_distance(vec({1.0}), vec({1.0, 2.0}), ones),
                  std::invalid_argument);
}

TEST_CASE("squared exponential kernel") {
  const auto hyper = make_hyper(1.0, {1.0}, 0.0, 0.0);
  CHECK(kernel_se(vec({0.4}), vec({0.4}), hyper) == doctest::Approx(1.0));
  // r^2 = 1 with unit length scale
  CHECK(kernel_se(vec({0.0}), vec({1.0}), hyper) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  const auto scaled = make_hyper(2.5, {1.0}, 0.0, 0.0);
  CHECK(kernel_se(vec({0.0}), vec({1.0}), scaled) ==
        doctest::Approx(2.5 * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("matern 5/2 kernel") {
  const auto hyper = make_hyper(1.7, {1.0}, 0.0, 0.0);
  CHECK(kernel_m52(vec({0.2}), vec({0.2}), hyper) == doctest::Approx(1.7));
  const auto unit_amp = make_hyper(1.0, {1.0}, 0.0, 0.0);
  const double expected =
      (1.0 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0));
  CHECK(kernel_m52(vec({0.0}), vec({1.0}), unit_amp) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.52399).epsilon(1e-4));
  // monotone decay in distance
  const double at_one = kernel_m52(vec({0.0}), vec({1.0}), unit_amp);
  const double at_tenth = kernel_m52(vec({0.0}), vec({0.1}), unit_amp);
  CHECK(at_one < at_tenth);
  CHECK(at_tenth < 1.0);
}

TEST_CASE("gp fit scalar and rank-deficient cases") {
  const auto hyper = make_hyper(1.3, {0.5}, 0.2, 0.0);
  Eigen::MatrixXd one_input(1, 1);
  one_input << 0.5;
  const auto posterior =
      GpPosterior::fit(one_input, vec({0.7}), hyper, KernelKind::Matern52);
  CHECK(posterior.chol_lower()(0, 0) ==
        doctest::Approx(std::sqrt(1.3 + 0.2)).epsilon(1e-12));

  // Duplicate row with zero noise forces the jitter path.
  Eigen::MatrixXd duplicated(2, 1);
  duplicated << 0.5, 0.5;
  const auto noise_free = make_hyper(1.0, {0.5}, 0.0, 0.0);
  const auto jittered = GpPosterior::fit(duplicated, vec({0.1, 0.1}),
                                         noise_free, KernelKind::Matern52);
  CHECK(jittered.jitter() > 0.0);
  CHECK(jittered.jitter() <= 1e-6);
}

TEST_CASE("gp fit reconstructs the covariance") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd inputs = random_inputs(20, 3, rng);
  const auto hyper = random_hyper(3, rng, 1e-4);
  Eigen::VectorXd targets(20);
  for (int i = 0; i < 20; ++i) targets[i] = std::sin(3.0 * inputs(i, 0));

  for (const auto kind : {KernelKind::SquaredExponential, KernelKind::Matern52}) {
    const auto posterior = GpPosterior::fit(inputs, targets, hyper, kind);
    Eigen::MatrixXd expected = kernel_matrix(kind, inputs, hyper);
    expected.diagonal().array() += hyper.noise_variance + posterior.jitter();
    const Eigen::MatrixXd rebuilt =
        posterior.chol_lower() * posterior.chol_lower().transpose();
    CHECK((rebuilt - expected).norm() / expected.norm() <= 1e-8);
  }
}

TEST_CASE("gp predict interpolates, reverts to the prior, and matches the "
          "scalar solve") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd inputs = random_inputs(12, 2, rng);
  auto hyper = random_hyper(2, rng, 0.0);
  Eigen::VectorXd targets(12);
  for (int i = 0; i < 12; ++i) {
    targets[i] = std::cos(4.0 * inputs(i, 0)) + inputs(i, 1);
  }
  const auto posterior =
      GpPosterior::fit(inputs, targets, hyper, KernelKind::Matern52);
  for (int i = 0; i < 12; ++i) {
    const auto moments = posterior.predict(inputs.row(i));
    CHECK(moments.mean == doctest::Approx(targets[i]).epsilon(1e-6));
    CHECK(moments.variance <= 1e-6);
  }

  // N=1, m=0: mu(x) = K(x, x1) / (theta0 + nu) * y1.
  auto scalar_hyper = make_hyper(1.4, {0.6}, 0.3, 0.0);
  Eigen::MatrixXd one_input(1, 1);
  one_input << 0.2;
  const auto scalar =
      GpPosterior::fit(one_input, vec({0.9}), scalar_hyper, KernelKind::Matern52);
  const Eigen::VectorXd query = vec({0.55});
  const double cross = kernel_m52(query, vec({0.2}), scalar_hyper);
  CHECK(scalar.predict(query).mean ==
        doctest::Approx(cross / (1.4 + 0.3) * 0.9).epsilon(1e-12));

  // Far from all data the prior takes over.
  auto prior_hyper = make_hyper(2.0, {0.01, 0.01}, 0.0, 0.4);
  const auto tight =
      GpPosterior::fit(inputs, targets, prior_hyper, KernelKind::SquaredExponential);
  const auto far = tight.predict(vec({-50.0, 60.0}));
  CHECK(far.mean == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(far.variance == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("log marginal likelihood closed scalar cases") {
  Eigen::MatrixXd one_input(1, 1);
  one_input << 0.3;
  const auto hyper = make_hyper(0.6, {0.5}, 0.4, 0.0);  // theta0 + nu = 1
  CHECK(log_marginal_likelihood(one_input, vec({0.0}), hyper,
                                KernelKind::Matern52) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));

  // Zero residual: value is -0.5 ln(2 pi s) with s the total variance.
  const double s = 0.37;
  auto centered = make_hyper(s, {0.5}, 0.0, 1.25);
  CHECK(log_marginal_likelihood(one_input, vec({1.25}), centered,
                                KernelKind::SquaredExponential) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * s))
            .epsilon(1e-12));
}

TEST_CASE("log marginal likelihood matches the dense oracle") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 9);  // up to 10
    const int dim = 1 + static_cast<int>(rng() % 3);
    const Eigen::MatrixXd inputs = random_inputs(n, dim, rng);
    const auto hyper = random_hyper(dim, rng, 1e-3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd targets(n);
    for (int i = 0; i < n; ++i) targets[i] = gauss(rng);

    for (const auto kind :
         {KernelKind::SquaredExponential, KernelKind::Matern52}) {
      Eigen::MatrixXd covariance = kernel_matrix(kind, inputs, hyper);
      covariance.diagonal().array() += hyper.noise_variance;
      const double expected = oracle::dense_log_marginal_likelihood(
          covariance, targets, hyper.mean);
      const double actual =
          log_marginal_likelihood(inputs, targets, hyper, kind);
      CHECK(actual ==
            doctest::Approx(expected).epsilon(1e-8));
    }
  }
}

TEST_CASE("normal cdf and pdf") {
  CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(norm_pdf(0.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(std::abs(norm_cdf(1.0) - oracle::simpson_norm_cdf(1.0)) < 1e-7);
  CHECK(norm_cdf(1.0) == doctest::Approx(0.841345).epsilon(1e-6));
  CHECK(std::abs(norm_cdf(-2.3) - oracle::simpson_norm_cdf(-2.3)) < 1e-10);
  CHECK(norm_cdf(40.0) == 1.0);
  CHECK(norm_cdf(-40.0) >= 0.0);
}

TEST_CASE("random kernel matrices stay factorable with small jitter") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);   // up to 50
    const int dim = 1 + static_cast<int>(rng() % 8);  // up to 8
    const Eigen::MatrixXd inputs = random_inputs(n, dim, rng);
    const double noise = (trial % 3 == 0) ? 0.0 : 1e-6;
    const auto hyper = random_hyper(dim, rng, noise);
    Eigen::VectorXd targets(n);
    for (int i = 0; i < n; ++i) targets[i] = unit(rng);
    const auto kind = (trial % 2 == 0) ? KernelKind::SquaredExponential
                                       : KernelKind::Matern52;
    const auto posterior = GpPosterior::fit(inputs, targets, hyper, kind);
    CHECK(posterior.jitter() <= 1e-8);

    // Predictive variance never exceeds the prior amplitude.
    Eigen::VectorXd query(dim);
    for (int d = 0; d < dim; ++d) query[d] = unit(rng);
    CHECK(posterior.predict(query).variance <= hyper.amplitude + 1e-8);
  }
}

TEST_CASE("kernels agree at zero distance and decay together") {
  const auto hyper = make_hyper(1.9, {0.7}, 0.0, 0.0);
  CHECK(kernel_se(vec({0.3}), vec({0.3}), hyper) ==
        doctest::Approx(kernel_m52(vec({0.3}), vec({0.3}), hyper)));
  double previous_se = kernel_se(vec({0.0}), vec({0.0}), hyper);
  double previous_m52 = kernel_m52(vec({0.0}), vec({0.0}), hyper);
  for (double gap = 0.05; gap < 2.0; gap += 0.05) {
    const double se = kernel_se(vec({0.0}), vec({gap}), hyper);
    const double m52 = kernel_m52(vec({0.0}), vec({gap}), hyper);
    CHECK(se < previous_se);
    CHECK(m52 < previous_m52);
    previous_se = se;
    previous_m52 = m52;
  }
}
