#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "bopt/gp.hpp"

namespace bopt {

// Prior over a positive parameter; density of ln(value) is
// Normal(location, scale).
struct LogNormalPrior {
  double location = 0.0;
  double scale = 1.0;
};

struct GaussianPrior {
  double center = 0.0;
  double spread = 1.0;
};

// The D+3 priors for one GP. Defaults assume inputs normalized to the unit
// hypercube; the mean prior adapts to the observed targets.
struct HyperPrior {
  LogNormalPrior amplitude{0.0, 1.0};
  std::vector<LogNormalPrior> length_scales;
  LogNormalPrior noise_variance{-18.420680743952367, 4.0};  // ln 1e-8, heavy tail
  GaussianPrior mean{0.0, 1.0};

  static HyperPrior defaults(int dim, const Eigen::VectorXd& targets);

  void validate() const;
  int dim() const { return static_cast<int>(length_scales.size()); }
};

struct HyperSampleSet {
  std::vector<GpHyperparams> samples;
  int burn_in = 0;
  int thinning = 1;
  std::uint64_t seed = 0;

  bool empty() const { return samples.empty(); }
};

struct McmcOptions {
  int count = 10;
  int burn_in = 50;
  int thinning = 1;
  std::uint64_t seed = 0;  // recorded as metadata only
};

double log_normal_log_density(double value, const LogNormalPrior& prior);
double gaussian_log_density(double value, const GaussianPrior& prior);

// Marginal likelihood plus prior terms; -inf outside the prior support.
double log_posterior_density(const GpHyperparams& hyper, const Dataset& data,
                             const HyperPrior& prior, KernelKind kind);

// One step-out/shrink update of a single coordinate. log_density(x0) must be
// finite; the shrink loop is capped (NumericalError past the cap).
double slice_sample_univariate(double x0,
                               const std::function<double(double)>& log_density,
                               double width, std::mt19937_64& rng,
                               int max_steps = 1000);

// One full sweep: coordinate-wise slice updates of v in index order.
void slice_sweep(Eigen::VectorXd& v,
                 const std::function<double(const Eigen::VectorXd&)>& log_density,
                 const Eigen::VectorXd& widths, std::mt19937_64& rng,
                 int max_steps = 1000);

// One sweep over all D+3 hyperparameters, positive ones in log space.
GpHyperparams slice_sample_step(const GpHyperparams& current,
                                const Dataset& data, const HyperPrior& prior,
                                KernelKind kind, std::mt19937_64& rng);

// Cold start: one chain from the prior median, burn_in discarded sweeps,
// then count samples collected every thinning-th sweep. With warm_start,
// each member of the previous set continues as its own chain for burn_in
// sweeps, which keeps the refreshed set decorrelated.
HyperSampleSet sample_hypers(const Dataset& data, const HyperPrior& prior,
                             KernelKind kind, const McmcOptions& options,
                             std::mt19937_64& rng,
                             const HyperSampleSet* warm_start = nullptr);

// Multi-start derivative-free maximization of the log posterior; the point
// estimate used by the non-marginalized strategy.
GpHyperparams optimize_hypers(const Dataset& data, const HyperPrior& prior,
                              KernelKind kind, std::mt19937_64& rng,
                              int starts = 10, int iterations = 150);

}  // namespace bopt
