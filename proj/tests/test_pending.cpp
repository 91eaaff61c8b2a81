#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bopt/acquisition.hpp"
#include "bopt/gp.hpp"
#include "bopt/pending.hpp"
#include "oracles.hpp"

using namespace bopt;

namespace {

GpHyperparams hyper_1d(double amplitude, double scale, double noise,
                       double mean) {
  GpHyperparams hyper;
  hyper.amplitude = amplitude;
  hyper.length_scales = Eigen::VectorXd::Constant(1, scale);
  hyper.noise_variance = noise;
  hyper.mean = mean;
  return hyper;
}

Dataset dataset_1d(std::initializer_list<double> xs,
                   std::initializer_list<double> ys) {
  Dataset data;
  data.inputs.resize(static_cast<int>(xs.size()), 1);
  data.targets.resize(static_cast<int>(ys.size()));
  int i = 0;
  for (const double x : xs) data.inputs(i++, 0) = x;
  i = 0;
  for (const double y : ys) data.targets[i++] = y;
  return data;
}

Eigen::VectorXd point1(double x) { return Eigen::VectorXd::Constant(1, x); }

}  // namespace

TEST_CASE("pending set rejects duplicates and bad points") {
  PendingSet pending;
  pending.add(point1(0.25), 0);
  CHECK(pending.count() == 1);
  CHECK_THROWS_AS(pending.add(point1(0.25), 1), std::invalid_argument);
  CHECK_THROWS_AS(pending.add(point1(1.5), 1), std::invalid_argument);
  pending.add(point1(0.75), 1);
  CHECK(pending.find(point1(0.75)) == 1);
  pending.remove(0);
  CHECK(pending.count() == 1);
  CHECK(pending.find(point1(0.75)) == 0);
  CHECK(pending.find(point1(0.25)) == -1);
}

TEST_CASE("joint predictive marginals match gp_predict exactly") {
  const Dataset data = dataset_1d({0.1, 0.5, 0.9}, {0.4, -0.2, 0.7});
  const auto hyper = hyper_1d(1.3, 0.3, 0.05, 0.1);
  const auto posterior = GpPosterior::fit(data, hyper, KernelKind::Matern52);

  Eigen::MatrixXd pending(1, 1);
  pending << 0.33;
  const auto joint = joint_pending_predictive(posterior, pending);
  const auto moments = posterior.predict(point1(0.33));
  CHECK(joint.mean[0] == moments.mean);
  CHECK(joint.covariance(0, 0) ==
        doctest::Approx(moments.variance + 0.05).epsilon(1e-14));
}

TEST_CASE("joint predictive collapses at noise-free training points") {
  const Dataset data = dataset_1d({0.2, 0.7}, {0.0, 1.0});
  const auto hyper = hyper_1d(1.0, 0.4, 0.0, 0.0);
  const auto posterior = GpPosterior::fit(data, hyper, KernelKind::Matern52);

  Eigen::MatrixXd pending(2, 1);
  pending << 0.2, 0.45;
  const auto joint = joint_pending_predictive(posterior, pending);
  CHECK(joint.mean[0] == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(std::abs(joint.covariance(0, 0)) < 1e-8);
  CHECK(joint.covariance(1, 1) > 1e-4);  // the other point keeps uncertainty
}

TEST_CASE("joint predictive reverts to the prior far from everything") {
  const Dataset data = dataset_1d({0.5}, {0.3});
  const auto hyper = hyper_1d(1.6, 0.02, 0.01, 0.0);
  const auto posterior = GpPosterior::fit(data, hyper, KernelKind::Matern52);

  Eigen::MatrixXd pending(2, 1);
  pending << 0.05, 0.95;  // far apart and far from the datum at these scales
  const auto joint = joint_pending_predictive(posterior, pending);
  CHECK(joint.covariance(0, 0) == doctest::Approx(1.61).epsilon(1e-6));
  CHECK(joint.covariance(1, 1) == doctest::Approx(1.61).epsilon(1e-6));
  CHECK(std::abs(joint.covariance(0, 1)) < 1e-6);
}

TEST_CASE("zero covariance gives deterministic fantasies") {
  JointPredictive joint;
  joint.mean = (Eigen::VectorXd(2) << 0.7, -0.4).finished();
  joint.covariance = Eigen::MatrixXd::Zero(2, 2);
  std::mt19937_64 rng(3);
  const auto fantasies =
      sample_fantasies(joint, hyper_1d(1, 1, 0, 0), 25, rng);
  CHECK(fantasies.size() == 25);
  for (const auto& fantasy : fantasies) {
    CHECK(fantasy.outcomes[0] == 0.7);
    CHECK(fantasy.outcomes[1] == -0.4);
  }
}

TEST_CASE("fantasy draws reproduce the joint moments") {
  JointPredictive joint;
  joint.mean = (Eigen::VectorXd(2) << 1.0, -2.0).finished();
  joint.covariance =
      (Eigen::MatrixXd(2, 2) << 0.9, 0.35, 0.35, 0.5).finished();
  std::mt19937_64 rng(11);
  const auto fantasies =
      sample_fantasies(joint, hyper_1d(1, 1, 0, 0), 10000, rng);

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& fantasy : fantasies) mean += fantasy.outcomes;
  mean /= static_cast<double>(fantasies.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& fantasy : fantasies) {
    const Eigen::Vector2d centered = fantasy.outcomes - mean;
    cov += centered * centered.transpose();
  }
  cov /= static_cast<double>(fantasies.size());

  CHECK(std::abs(mean[0] - 1.0) < 0.05);
  CHECK(std::abs(mean[1] + 2.0) < 0.05);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(cov(i, j) - joint.covariance(i, j)) <
            0.1 * std::abs(joint.covariance(i, j)) + 1e-3);
    }
  }
}

TEST_CASE("fantasies are deterministic given the seed") {
  JointPredictive joint;
  joint.mean = (Eigen::VectorXd(1) << 0.2).finished();
  joint.covariance = (Eigen::MatrixXd(1, 1) << 0.4).finished();
  std::mt19937_64 rng_a(21), rng_b(21);
  const auto first = sample_fantasies(joint, hyper_1d(1, 1, 0, 0), 50, rng_a);
  const auto second = sample_fantasies(joint, hyper_1d(1, 1, 0, 0), 50, rng_b);
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].outcomes[0] == second[i].outcomes[0]);
  }
}

TEST_CASE("no pending points reduces to the integrated acquisition") {
  const Dataset data = dataset_1d({0.15, 0.5, 0.85}, {0.6, -0.1, 0.3});
  const std::vector<GpHyperparams> samples = {hyper_1d(1.0, 0.25, 1e-4, 0.0),
                                              hyper_1d(1.8, 0.4, 1e-3, 0.2)};
  const AcquisitionKind ei{};
  const Eigen::MatrixXd no_pending(0, 1);
  std::mt19937_64 rng(5);
  for (double x = 0.05; x < 1.0; x += 0.17) {
    const double with = acquisition_with_pending(
        point1(x), data, no_pending, samples, KernelKind::Matern52, 10, ei, rng);
    const double without = integrated_acquisition(point1(x), data, samples, ei,
                                                  KernelKind::Matern52);
    CHECK(with == without);
  }
}

TEST_CASE("a pending duplicate of a noise-free datum changes nothing") {
  const Dataset data = dataset_1d({0.2, 0.6, 0.9}, {0.5, -0.4, 0.1});
  const std::vector<GpHyperparams> samples = {hyper_1d(1.0, 0.3, 0.0, 0.0)};
  const AcquisitionKind ei{};
  Eigen::MatrixXd pending(1, 1);
  pending << 0.6;
  std::mt19937_64 rng(13);
  for (double x = 0.1; x < 1.0; x += 0.23) {
    const double with = acquisition_with_pending(
        point1(x), data, pending, samples, KernelKind::Matern52, 5, ei, rng);
    const double without = integrated_acquisition(point1(x), data, samples, ei,
                                                  KernelKind::Matern52);
    CHECK(with == doctest::Approx(without).epsilon(1e-5));
  }
}

TEST_CASE("fantasized EI vanishes at a pending point that is already known") {
  const Dataset data = dataset_1d({0.2, 0.6, 0.9}, {0.5, -0.4, 0.1});
  const std::vector<GpHyperparams> samples = {hyper_1d(1.0, 0.3, 0.0, 0.0)};
  const AcquisitionKind ei{};
  Eigen::MatrixXd pending(1, 1);
  pending << 0.9;  // duplicates a training point, fantasy is deterministic
  std::mt19937_64 rng(29);
  FantasizedEnsemble ensemble(data, pending, samples, KernelKind::Matern52, 8,
                              rng);
  CHECK(ensemble.score(point1(0.9), ei) <= 1e-9);
  CHECK(ensemble.score(point1(0.4), ei) > 1e-6);
  CHECK(ensemble.score(point1(0.75), ei) >= 0.0);
}

TEST_CASE("single-pending acquisition matches Gauss-Hermite quadrature") {
  const Dataset data = dataset_1d({0.1, 0.45, 0.8}, {0.3, -0.2, 0.6});
  const auto hyper = hyper_1d(1.0, 0.25, 1e-4, 0.0);
  const std::vector<GpHyperparams> samples = {hyper};
  const AcquisitionKind ei{};
  Eigen::MatrixXd pending(1, 1);
  pending << 0.62;
  const Eigen::VectorXd query = point1(0.3);

  // Quadrature over the pending outcome.
  const auto posterior = GpPosterior::fit(data, hyper, KernelKind::Matern52);
  const auto joint = joint_pending_predictive(posterior, pending);
  const double mu = joint.mean[0];
  const double sigma = std::sqrt(joint.covariance(0, 0));
  const auto gh = oracle::gauss_hermite(20);

  Incumbent incumbent;
  incumbent.best_value = -0.2;
  incumbent.best_location = point1(0.45);
  Eigen::MatrixXd augmented_inputs(4, 1);
  augmented_inputs << 0.1, 0.45, 0.8, 0.62;
  double quadrature = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double outcome = mu + std::sqrt(2.0) * sigma * gh.nodes[i];
    Eigen::VectorXd augmented_targets(4);
    augmented_targets << 0.3, -0.2, 0.6, outcome;
    const auto branch = GpPosterior::fit(augmented_inputs, augmented_targets,
                                         hyper, KernelKind::Matern52);
    quadrature +=
        gh.weights[i] * expected_improvement(branch.predict(query), incumbent);
  }
  quadrature /= std::sqrt(std::numbers::pi);

  std::mt19937_64 rng(7);
  const double monte_carlo = acquisition_with_pending(
      query, data, pending, samples, KernelKind::Matern52, 10000, ei, rng);
  CHECK(std::abs(monte_carlo - quadrature) / quadrature < 0.01);
}

TEST_CASE("fantasy Monte Carlo error shrinks like one over sqrt(count)") {
  const Dataset data = dataset_1d({0.1, 0.45, 0.8}, {0.3, -0.2, 0.6});
  const std::vector<GpHyperparams> samples = {hyper_1d(1.0, 0.25, 1e-4, 0.0)};
  const AcquisitionKind ei{};
  Eigen::MatrixXd pending(1, 1);
  pending << 0.62;
  const Eigen::VectorXd query = point1(0.3);

  auto spread_at = [&](int fantasy_count, std::uint64_t seed_base) {
    std::vector<double> estimates;
    for (int repeat = 0; repeat < 30; ++repeat) {
      std::mt19937_64 rng(seed_base + repeat);
      estimates.push_back(acquisition_with_pending(query, data, pending,
                                                   samples, KernelKind::Matern52,
                                                   fantasy_count, ei, rng));
    }
    return std::sqrt(oracle::variance_of(estimates));
  };
  const double coarse = spread_at(50, 1000);
  const double fine = spread_at(200, 2000);
  // Quadrupling the count should halve the spread, up to sampling noise.
  CHECK(coarse / fine > 1.3);
  CHECK(coarse / fine < 3.2);
}
