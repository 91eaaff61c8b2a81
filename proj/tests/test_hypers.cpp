#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "bopt/gp.hpp"
#include "bopt/hypers.hpp"
#include "oracles.hpp"

using namespace bopt;

namespace {

Dataset scalar_dataset(double x, double y) {
  Dataset data;
  data.inputs.resize(1, 1);
  data.inputs(0, 0) = x;
  data.targets.resize(1);
  data.targets[0] = y;
  return data;
}

// Function values drawn from a known GP, used by the generate-and-recover
// experiments. The draw uses Eigen directly rather than the library fit path.
Dataset synthetic_gp_dataset(int n, double length_scale, double amplitude,
                             std::mt19937_64& rng) {
  Dataset data;
  data.inputs.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    data.inputs(i, 0) = (i + 0.5) / n;
  }
  Eigen::MatrixXd covariance(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double gap = (data.inputs(i, 0) - data.inputs(j, 0)) / length_scale;
      covariance(i, j) = amplitude * std::exp(-0.5 * gap * gap);
    }
  }
  covariance.diagonal().array() += 1e-8;
  const Eigen::MatrixXd factor = covariance.llt().matrixL();
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = gauss(rng);
  data.targets = factor * z;
  return data;
}

GpHyperparams unit_hyper(double amplitude, double scale, double noise,
                         double mean) {
  GpHyperparams hyper;
  hyper.amplitude = amplitude;
  hyper.length_scales = Eigen::VectorXd::Constant(1, scale);
  hyper.noise_variance = noise;
  hyper.mean = mean;
  return hyper;
}

}  // namespace

TEST_CASE("log posterior decomposes into likelihood plus priors") {
  const Dataset data = scalar_dataset(0.4, 0.9);
  const HyperPrior prior = HyperPrior::defaults(1, data.targets);
  const auto hyper = unit_hyper(1.2, 0.3, 1e-3, 0.1);

  const double expected =
      log_marginal_likelihood(data.inputs, data.targets, hyper,
                              KernelKind::Matern52) +
      log_normal_log_density(hyper.amplitude, prior.amplitude) +
      log_normal_log_density(hyper.length_scales[0], prior.length_scales[0]) +
      log_normal_log_density(hyper.noise_variance, prior.noise_variance) +
      gaussian_log_density(hyper.mean, prior.mean);
  CHECK(log_posterior_density(hyper, data, prior, KernelKind::Matern52) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log posterior is -inf outside the support") {
  const Dataset data = scalar_dataset(0.4, 0.9);
  const HyperPrior prior = HyperPrior::defaults(1, data.targets);
  auto hyper = unit_hyper(1.0, 0.3, 1e-3, 0.0);
  hyper.length_scales[0] = -0.2;
  CHECK(log_posterior_density(hyper, data, prior, KernelKind::Matern52) ==
        -std::numeric_limits<double>::infinity());
  hyper.length_scales[0] = 0.0;
  CHECK(log_posterior_density(hyper, data, prior, KernelKind::Matern52) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("doubling a prior density shifts the log posterior by ln 2") {
  const Dataset data = scalar_dataset(0.4, 0.9);
  HyperPrior base = HyperPrior::defaults(1, data.targets);
  base.mean = {0.25, 1.0};
  HyperPrior doubled = base;
  doubled.mean.spread = 0.5;  // density at the center doubles exactly

  auto hyper = unit_hyper(1.0, 0.3, 1e-3, 0.25);  // m at the prior center
  const double before =
      log_posterior_density(hyper, data, base, KernelKind::Matern52);
  const double after =
      log_posterior_density(hyper, data, doubled, KernelKind::Matern52);
  CHECK(after - before == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("univariate slice sampling reproduces a standard normal") {
  std::mt19937_64 rng(5);
  auto log_density = [](double x) { return -0.5 * x * x; };
  std::vector<double> samples;
  samples.reserve(10000);
  double x = 0.0;
  for (int i = 0; i < 10000; ++i) {
    x = slice_sample_univariate(x, log_density, 1.0, rng);
    samples.push_back(x);
  }
  CHECK(std::abs(oracle::mean_of(samples)) < 0.05);
  const double variance = oracle::variance_of(samples);
  CHECK(variance > 0.9);
  CHECK(variance < 1.1);

  auto normal_cdf = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  CHECK(oracle::ks_distance(samples, normal_cdf) < 0.03);
}

TEST_CASE("slice sampling preserves a bounded support") {
  std::mt19937_64 rng(9);
  auto log_density = [](double x) {
    return (x >= 0.0 && x <= 1.0) ? 0.0
                                  : -std::numeric_limits<double>::infinity();
  };
  double x = 0.5;
  for (int i = 0; i < 2000; ++i) {
    x = slice_sample_univariate(x, log_density, 0.7, rng);
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }
}

TEST_CASE("slice sampling is deterministic given the seed") {
  auto log_density = [](double x) { return -0.5 * x * x; };
  std::vector<double> first, second;
  for (int run = 0; run < 2; ++run) {
    std::mt19937_64 rng(123);
    double x = 0.3;
    auto& out = run == 0 ? first : second;
    for (int i = 0; i < 50; ++i) {
      x = slice_sample_univariate(x, log_density, 1.0, rng);
      out.push_back(x);
    }
  }
  CHECK(first == second);
}

TEST_CASE("slice_sample_step keeps the posterior finite and is seeded") {
  std::mt19937_64 rng(17);
  const Dataset data = synthetic_gp_dataset(12, 0.3, 1.0, rng);
  const HyperPrior prior = HyperPrior::defaults(1, data.targets);
  const auto start = unit_hyper(1.0, 0.1, 1e-3, 0.0);

  std::mt19937_64 chain_a(42), chain_b(42);
  GpHyperparams a = start, b = start;
  for (int i = 0; i < 5; ++i) {
    a = slice_sample_step(a, data, prior, KernelKind::Matern52, chain_a);
    b = slice_sample_step(b, data, prior, KernelKind::Matern52, chain_b);
    CHECK(std::isfinite(
        log_posterior_density(a, data, prior, KernelKind::Matern52)));
    CHECK(a.amplitude == b.amplitude);
    CHECK(a.length_scales[0] == b.length_scales[0]);
    CHECK(a.noise_variance == b.noise_variance);
    CHECK(a.mean == b.mean);
  }
}

TEST_CASE("sample_hypers plumbing and stochasticity") {
  std::mt19937_64 data_rng(31);
  const Dataset data = synthetic_gp_dataset(10, 0.3, 1.0, data_rng);
  const HyperPrior prior = HyperPrior::defaults(1, data.targets);

  McmcOptions one;
  one.count = 1;
  one.burn_in = 0;
  std::mt19937_64 rng(1);
  const auto set = sample_hypers(data, prior, KernelKind::Matern52, one, rng);
  CHECK(set.samples.size() == 1);
  CHECK(std::isfinite(log_posterior_density(set.samples[0], data, prior,
                                            KernelKind::Matern52)));

  McmcOptions several;
  several.count = 5;
  several.burn_in = 10;
  std::mt19937_64 rng_a(7), rng_b(8);
  const auto set_a =
      sample_hypers(data, prior, KernelKind::Matern52, several, rng_a);
  const auto set_b =
      sample_hypers(data, prior, KernelKind::Matern52, several, rng_b);
  bool any_difference = false;
  for (std::size_t i = 0; i < set_a.samples.size(); ++i) {
    if (set_a.samples[i].amplitude != set_b.samples[i].amplitude) {
      any_difference = true;
    }
    CHECK(std::isfinite(log_posterior_density(set_a.samples[i], data, prior,
                                              KernelKind::Matern52)));
  }
  CHECK(any_difference);
}

TEST_CASE("posterior samples concentrate near the generating length scale") {
  std::mt19937_64 data_rng(77);
  const Dataset data = synthetic_gp_dataset(25, 0.3, 1.0, data_rng);
  const HyperPrior prior = HyperPrior::defaults(1, data.targets);

  McmcOptions options;
  options.count = 40;
  options.burn_in = 100;
  options.thinning = 2;
  std::mt19937_64 rng(3);
  const auto set =
      sample_hypers(data, prior, KernelKind::SquaredExponential, options, rng);
  std::vector<double> scales;
  for (const auto& sample : set.samples) {
    scales.push_back(sample.length_scales[0]);
  }
  const double median = oracle::median_of(scales);
  CHECK(median > 0.1);
  CHECK(median < 0.9);
}

TEST_CASE("optimize_hypers beats its starting draws and is repeatable") {
  std::mt19937_64 data_rng(13);
  const Dataset data = synthetic_gp_dataset(20, 0.3, 1.0, data_rng);
  const HyperPrior prior = HyperPrior::defaults(1, data.targets);

  std::mt19937_64 rng(99);
  const auto best = optimize_hypers(data, prior, KernelKind::SquaredExponential,
                                    rng);
  const double best_density =
      log_posterior_density(best, data, prior, KernelKind::SquaredExponential);
  CHECK(std::isfinite(best_density));

  // No prior draw should beat the optimized point.
  std::mt19937_64 draw_rng(5);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    GpHyperparams draw;
    draw.amplitude = std::exp(prior.amplitude.location +
                              prior.amplitude.scale * gauss(draw_rng));
    draw.length_scales = Eigen::VectorXd::Constant(
        1, std::exp(prior.length_scales[0].location +
                    prior.length_scales[0].scale * gauss(draw_rng)));
    draw.noise_variance = std::exp(prior.noise_variance.location +
                                   prior.noise_variance.scale * gauss(draw_rng));
    draw.mean = prior.mean.center + prior.mean.spread * gauss(draw_rng);
    CHECK(log_posterior_density(draw, data, prior,
                                KernelKind::SquaredExponential) <=
          best_density + 1e-9);
  }

  // Same seed, same answer.
  std::mt19937_64 rng_again(99);
  const auto repeat = optimize_hypers(data, prior,
                                      KernelKind::SquaredExponential, rng_again);
  const double repeat_density = log_posterior_density(
      repeat, data, prior, KernelKind::SquaredExponential);
  CHECK(repeat_density == doctest::Approx(best_density).epsilon(1e-6));

  // Generate-and-recover: length scale within a factor of three.
  CHECK(best.length_scales[0] > 0.1);
  CHECK(best.length_scales[0] < 0.9);
}
