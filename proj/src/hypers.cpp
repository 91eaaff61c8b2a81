#include "bopt/hypers.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "bopt/errors.hpp"
#include "bopt/nelder_mead.hpp"

namespace bopt {

namespace {

constexpr double kNegativeInfinity = -std::numeric_limits<double>::infinity();

double normal_log_density(double x, double center, double spread) {
  const double z = (x - center) / spread;
  return -0.5 * z * z - std::log(spread) -
         0.5 * std::log(2.0 * std::numbers::pi);
}

// Sampler coordinates: [ln theta0, ln theta_1..D, ln nu, m].
Eigen::VectorXd pack(const GpHyperparams& hyper) {
  const int dim = static_cast<int>(hyper.length_scales.size());
  Eigen::VectorXd v(dim + 3);
  v[0] = std::log(hyper.amplitude);
  for (int d = 0; d < dim; ++d) v[1 + d] = std::log(hyper.length_scales[d]);
  v[dim + 1] = std::log(hyper.noise_variance);
  v[dim + 2] = hyper.mean;
  return v;
}

GpHyperparams unpack(const Eigen::VectorXd& v) {
  const int dim = static_cast<int>(v.size()) - 3;
  GpHyperparams hyper;
  hyper.amplitude = std::exp(v[0]);
  hyper.length_scales.resize(dim);
  for (int d = 0; d < dim; ++d) hyper.length_scales[d] = std::exp(v[1 + d]);
  hyper.noise_variance = std::exp(v[dim + 1]);
  hyper.mean = v[dim + 2];
  return hyper;
}

// Log posterior over the transformed coordinates. The log-space change of
// variables turns each log-normal prior into a plain Gaussian, so no
// separate Jacobian term appears here.
double transformed_log_posterior(const Eigen::VectorXd& v, const Dataset& data,
                                 const HyperPrior& prior, KernelKind kind) {
  const int dim = prior.dim();
  double value = normal_log_density(v[0], prior.amplitude.location,
                                    prior.amplitude.scale);
  for (int d = 0; d < dim; ++d) {
    value += normal_log_density(v[1 + d], prior.length_scales[d].location,
                                prior.length_scales[d].scale);
  }
  value += normal_log_density(v[dim + 1], prior.noise_variance.location,
                              prior.noise_variance.scale);
  value += normal_log_density(v[dim + 2], prior.mean.center, prior.mean.spread);
  if (!std::isfinite(value)) return kNegativeInfinity;
  try {
    value += log_marginal_likelihood(data.inputs, data.targets, unpack(v), kind);
  } catch (const NumericalError&) {
    return kNegativeInfinity;  // shrink away from unfactorable corners
  }
  return std::isfinite(value) ? value : kNegativeInfinity;
}

Eigen::VectorXd sweep_widths(const HyperPrior& prior) {
  Eigen::VectorXd widths(prior.dim() + 3);
  widths.setConstant(2.0);
  widths[prior.dim() + 2] = std::max(prior.mean.spread, 1e-3);
  return widths;
}

Eigen::VectorXd prior_median(const HyperPrior& prior) {
  const int dim = prior.dim();
  Eigen::VectorXd v(dim + 3);
  v[0] = prior.amplitude.location;
  for (int d = 0; d < dim; ++d) v[1 + d] = prior.length_scales[d].location;
  v[dim + 1] = prior.noise_variance.location;
  v[dim + 2] = prior.mean.center;
  return v;
}

}  // namespace

HyperPrior HyperPrior::defaults(int dim, const Eigen::VectorXd& targets) {
  if (dim < 1) throw std::invalid_argument("HyperPrior::defaults: dim < 1");
  HyperPrior prior;
  prior.amplitude = {0.0, 1.0};
  prior.length_scales.assign(dim, LogNormalPrior{std::log(0.1), 1.0});
  prior.noise_variance = {std::log(1e-5), 2.0};
  double center = 0.0;
  double spread = 1.0;
  if (targets.size() > 0) {
    center = targets.mean();
    const double variance =
        (targets.array() - center).square().sum() / targets.size();
    spread = std::max(std::sqrt(variance), 1.0);
  }
  prior.mean = {center, spread};
  return prior;
}

void HyperPrior::validate() const {
  if (length_scales.empty()) {
    throw std::invalid_argument("HyperPrior: no length scale priors");
  }
  auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (!positive(amplitude.scale) || !positive(noise_variance.scale) ||
      !positive(mean.spread)) {
    throw std::invalid_argument("HyperPrior: scales must be positive");
  }
  for (const auto& ls : length_scales) {
    if (!positive(ls.scale)) {
      throw std::invalid_argument("HyperPrior: scales must be positive");
    }
  }
}

double log_normal_log_density(double value, const LogNormalPrior& prior) {
  if (!(value > 0.0)) return kNegativeInfinity;
  const double log_value = std::log(value);
  return normal_log_density(log_value, prior.location, prior.scale) - log_value;
}

double gaussian_log_density(double value, const GaussianPrior& prior) {
  return normal_log_density(value, prior.center, prior.spread);
}

double log_posterior_density(const GpHyperparams& hyper, const Dataset& data,
                             const HyperPrior& prior, KernelKind kind) {
  if (prior.dim() != hyper.length_scales.size()) {
    throw std::invalid_argument(
        "log_posterior_density: prior/hyper dimension mismatch");
  }
  double value = log_normal_log_density(hyper.amplitude, prior.amplitude);
  for (int d = 0; d < prior.dim(); ++d) {
    value +=
        log_normal_log_density(hyper.length_scales[d], prior.length_scales[d]);
  }
  value += log_normal_log_density(hyper.noise_variance, prior.noise_variance);
  value += gaussian_log_density(hyper.mean, prior.mean);
  if (!std::isfinite(value)) return kNegativeInfinity;  // outside support
  return value + log_marginal_likelihood(data.inputs, data.targets, hyper, kind);
}

double slice_sample_univariate(double x0,
                               const std::function<double(double)>& log_density,
                               double width, std::mt19937_64& rng,
                               int max_steps) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double f0 = log_density(x0);
  if (!std::isfinite(f0)) {
    throw std::invalid_argument(
        "slice_sample_univariate: log density not finite at the start point");
  }
  const double level = f0 + std::log(unit(rng));

  // Step out.
  double lower = x0 - width * unit(rng);
  double upper = lower + width;
  int steps = 0;
  while (log_density(lower) > level) {
    lower -= width;
    if (++steps > max_steps) {
      throw NumericalError("slice_sample_univariate: step-out did not close");
    }
  }
  steps = 0;
  while (log_density(upper) > level) {
    upper += width;
    if (++steps > max_steps) {
      throw NumericalError("slice_sample_univariate: step-out did not close");
    }
  }

  // Shrink.
  for (int attempt = 0; attempt < max_steps; ++attempt) {
    const double x1 = lower + (upper - lower) * unit(rng);
    if (log_density(x1) > level) return x1;
    if (x1 < x0) {
      lower = x1;
    } else {
      upper = x1;
    }
  }
  throw NumericalError("slice_sample_univariate: shrinkage cap exceeded");
}

void slice_sweep(Eigen::VectorXd& v,
                 const std::function<double(const Eigen::VectorXd&)>& log_density,
                 const Eigen::VectorXd& widths, std::mt19937_64& rng,
                 int max_steps) {
  if (widths.size() != v.size()) {
    throw std::invalid_argument("slice_sweep: width count mismatch");
  }
  for (int i = 0; i < v.size(); ++i) {
    const double updated = slice_sample_univariate(
        v[i],
        [&](double t) {
          Eigen::VectorXd probe = v;
          probe[i] = t;
          return log_density(probe);
        },
        widths[i], rng, max_steps);
    v[i] = updated;
  }
}

GpHyperparams slice_sample_step(const GpHyperparams& current,
                                const Dataset& data, const HyperPrior& prior,
                                KernelKind kind, std::mt19937_64& rng) {
  prior.validate();
  Eigen::VectorXd v = pack(current);
  auto target = [&](const Eigen::VectorXd& probe) {
    return transformed_log_posterior(probe, data, prior, kind);
  };
  slice_sweep(v, target, sweep_widths(prior), rng);
  return unpack(v);
}

HyperSampleSet sample_hypers(const Dataset& data, const HyperPrior& prior,
                             KernelKind kind, const McmcOptions& options,
                             std::mt19937_64& rng,
                             const HyperSampleSet* warm_start) {
  if (options.count < 1) {
    throw std::invalid_argument("sample_hypers: count must be >= 1");
  }
  if (data.n() < 1) {
    throw std::invalid_argument("sample_hypers: need at least one observation");
  }
  prior.validate();

  auto target = [&](const Eigen::VectorXd& probe) {
    return transformed_log_posterior(probe, data, prior, kind);
  };
  const Eigen::VectorXd widths = sweep_widths(prior);
  const int thinning = std::max(1, options.thinning);

  HyperSampleSet set;
  set.burn_in = options.burn_in;
  set.thinning = options.thinning;
  set.seed = options.seed;
  set.samples.reserve(options.count);

  Eigen::VectorXd v = prior_median(prior);
  if (warm_start != nullptr && !warm_start->empty()) {
    v = pack(warm_start->samples.back());
    if (!std::isfinite(target(v))) v = prior_median(prior);
  }
  if (!std::isfinite(target(v))) {
    throw NumericalError(
        "sample_hypers: log posterior not finite at the prior median");
  }
  for (int sweep = 0; sweep < options.burn_in; ++sweep) {
    slice_sweep(v, target, widths, rng);
  }
  for (int s = 0; s < options.count; ++s) {
    for (int t = 0; t < thinning; ++t) {
      slice_sweep(v, target, widths, rng);
    }
    set.samples.push_back(unpack(v));
  }
  return set;
}

GpHyperparams optimize_hypers(const Dataset& data, const HyperPrior& prior,
                              KernelKind kind, std::mt19937_64& rng,
                              int starts, int iterations) {
  if (data.n() < 1) {
    throw std::invalid_argument(
        "optimize_hypers: need at least one observation");
  }
  prior.validate();
  const int dim = prior.dim();
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto negative_target = [&](const Eigen::VectorXd& v) {
    const double value = transformed_log_posterior(v, data, prior, kind);
    return std::isfinite(value) ? -value
                                : std::numeric_limits<double>::infinity();
  };

  bool found = false;
  double best_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_point;
  for (int k = 0; k < starts; ++k) {
    Eigen::VectorXd v0(dim + 3);
    v0[0] = prior.amplitude.location + prior.amplitude.scale * gauss(rng);
    for (int d = 0; d < dim; ++d) {
      v0[1 + d] = prior.length_scales[d].location +
                  prior.length_scales[d].scale * gauss(rng);
    }
    v0[dim + 1] =
        prior.noise_variance.location + prior.noise_variance.scale * gauss(rng);
    v0[dim + 2] = prior.mean.center + prior.mean.spread * gauss(rng);

    const NelderMeadResult result =
        nelder_mead(negative_target, v0, 0.3, iterations);
    if (std::isfinite(result.value) && result.value < best_value) {
      best_value = result.value;
      best_point = result.x;
      found = true;
    }
  }
  if (!found) {
    throw NumericalError("optimize_hypers: every start failed numerically");
  }
  return unpack(best_point);
}

}  // namespace bopt
