#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bopt/gp.hpp"

namespace bopt {

enum class AcquisitionType {
  ProbabilityOfImprovement,
  ExpectedImprovement,
  LowerConfidenceBound
};

struct AcquisitionKind {
  AcquisitionType type = AcquisitionType::ExpectedImprovement;
  double kappa = 2.0;  // only read for LowerConfidenceBound

  void validate() const;
};

std::string to_string(AcquisitionType type);
AcquisitionType acquisition_type_from_string(const std::string& name);

// Best (minimum) completed value and where it was observed.
struct Incumbent {
  double best_value = 0.0;
  Eigen::VectorXd best_location;
};

// (best - mu) / sigma; callers must branch on sigma == 0 first.
double gamma_score(double mu, double sigma, double best_value);

double probability_of_improvement(const PredictiveMoments& moments,
                                  const Incumbent& incumbent);
// sigma (gamma Phi(gamma) + phi(gamma)), the closed form of
// E[max(best - Y, 0)] for Y ~ N(mu, sigma^2).
double expected_improvement(const PredictiveMoments& moments,
                            const Incumbent& incumbent);
// mu - kappa sigma; rank candidates by its minimum.
double lower_confidence_bound(const PredictiveMoments& moments, double kappa);

// Maximization-oriented score for any kind (LCB is negated internally).
double acquisition_score(const AcquisitionKind& kind,
                         const PredictiveMoments& moments,
                         const Incumbent& incumbent);

// Mean of 1/c under a log-normal predictive for ln c.
double expected_inverse_duration(const PredictiveMoments& log_duration_moments);

// One dataset, one posterior per hyperparameter sample. Acquisition values
// are averaged across the members (the Monte Carlo marginalization).
class MarginalizedGp {
 public:
  MarginalizedGp(Dataset data, const std::vector<GpHyperparams>& samples,
                 KernelKind kind);

  double integrated_acquisition(const Eigen::VectorXd& x,
                                const AcquisitionKind& kind) const;
  double integrated_expected_inverse_duration(const Eigen::VectorXd& x) const;

  const std::vector<GpPosterior>& members() const { return members_; }
  const Incumbent& incumbent() const { return incumbent_; }
  const Dataset& data() const { return data_; }

 private:
  Dataset data_;
  std::vector<GpPosterior> members_;
  Incumbent incumbent_;
};

// Convenience form matching the one-shot call shape; fits the per-sample
// posteriors on the fly.
double integrated_acquisition(const Eigen::VectorXd& x, const Dataset& data,
                              const std::vector<GpHyperparams>& samples,
                              const AcquisitionKind& kind, KernelKind kernel);

double expected_improvement_per_second(const Eigen::VectorXd& x,
                                       const GpPosterior& objective,
                                       const GpPosterior& duration,
                                       const Incumbent& incumbent);
double expected_improvement_per_second(const Eigen::VectorXd& x,
                                       const MarginalizedGp& objective,
                                       const MarginalizedGp& duration);

struct MaximizeOptions {
  int candidates = 1000;      // low-discrepancy scan size
  int refine_count = 5;       // scan leaders passed to local refinement
  int refine_iterations = 50;
  double skip_radius = 1e-6;  // candidates this close to history are skipped
};

using ScoreFunction = std::function<double(const Eigen::VectorXd&)>;

// Continuous mode: scan shifted-Halton candidates, refine the leaders with a
// bounded simplex, return the best point. Grid mode (grid_unit engaged):
// argmax over grid points not already completed or pending. Both modes break
// ties toward the earlier candidate and are deterministic given the RNG
// state.
Eigen::VectorXd maximize_acquisition(
    const ScoreFunction& score, int dim, const Eigen::MatrixXd& completed_unit,
    const Eigen::MatrixXd& pending_unit, std::mt19937_64& rng,
    const std::optional<Eigen::MatrixXd>& grid_unit = {},
    const MaximizeOptions& options = {});

}  // namespace bopt
