#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "bopt/acquisition.hpp"
#include "bopt/gp.hpp"

namespace bopt {

// In-flight evaluation sites in normalized coordinates, plus the iteration
// at which each was issued.
struct PendingSet {
  Eigen::MatrixXd locations;  // J x D
  std::vector<long> issued_iterations;

  int count() const { return static_cast<int>(locations.rows()); }
  // Rejects out-of-box points and near-duplicates (1e-9).
  void add(const Eigen::VectorXd& unit_point, long iteration);
  void remove(int index);
  // Index of the row within `radius` of unit_point, or -1.
  int find(const Eigen::VectorXd& unit_point, double radius = 1e-9) const;
};

struct JointPredictive {
  Eigen::VectorXd mean;        // J
  Eigen::MatrixXd covariance;  // J x J, includes noise on the diagonal
};

JointPredictive joint_pending_predictive(const GpPosterior& posterior,
                                         const Eigen::MatrixXd& pending_unit);

// Hypothesized outcomes for the pending sites under one hyperparameter draw.
struct FantasySample {
  Eigen::VectorXd outcomes;  // J
  GpHyperparams hyper;
};

std::vector<FantasySample> sample_fantasies(const JointPredictive& joint,
                                            const GpHyperparams& hyper,
                                            int count, std::mt19937_64& rng);

// For every hyperparameter sample: fit the real-data posterior, draw
// fantasy_count joint outcomes at the pending sites, and keep one augmented
// posterior per fantasy. Scores average over all branches; the incumbent
// comes from the real observations only. With no pending points this
// degenerates to the plain marginalized model.
class FantasizedEnsemble {
 public:
  FantasizedEnsemble(const Dataset& data, const Eigen::MatrixXd& pending_unit,
                     const std::vector<GpHyperparams>& samples,
                     KernelKind kernel, int fantasy_count,
                     std::mt19937_64& rng);

  double score(const Eigen::VectorXd& x, const AcquisitionKind& kind) const;

  const std::vector<GpPosterior>& branches() const { return branches_; }
  const Incumbent& incumbent() const { return incumbent_; }

 private:
  std::vector<GpPosterior> branches_;
  Incumbent incumbent_;
};

// One-shot form: the mean acquisition over hyper samples and fantasy draws.
double acquisition_with_pending(const Eigen::VectorXd& x, const Dataset& data,
                                const Eigen::MatrixXd& pending_unit,
                                const std::vector<GpHyperparams>& samples,
                                KernelKind kernel, int fantasy_count,
                                const AcquisitionKind& kind,
                                std::mt19937_64& rng);

}  // namespace bopt
