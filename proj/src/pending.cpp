#include "bopt/pending.hpp"

#include <cmath>
#include <utility>

#include "bopt/errors.hpp"

namespace bopt {

void PendingSet::add(const Eigen::VectorXd& unit_point, long iteration) {
  for (int d = 0; d < unit_point.size(); ++d) {
    if (!(unit_point[d] >= 0.0 && unit_point[d] <= 1.0)) {
      throw std::invalid_argument("PendingSet: point outside the unit cube");
    }
  }
  if (find(unit_point) >= 0) {
    throw std::invalid_argument("PendingSet: duplicate pending location");
  }
  if (locations.rows() == 0) {
    locations.resize(1, unit_point.size());
    locations.row(0) = unit_point;
  } else {
    locations.conservativeResize(locations.rows() + 1, Eigen::NoChange);
    locations.row(locations.rows() - 1) = unit_point;
  }
  issued_iterations.push_back(iteration);
}

void PendingSet::remove(int index) {
  const int n = count();
  if (index < 0 || index >= n) {
    throw std::invalid_argument("PendingSet: bad index");
  }
  for (int i = index; i + 1 < n; ++i) {
    locations.row(i) = locations.row(i + 1);
    issued_iterations[i] = issued_iterations[i + 1];
  }
  locations.conservativeResize(n - 1, Eigen::NoChange);
  issued_iterations.pop_back();
}

int PendingSet::find(const Eigen::VectorXd& unit_point, double radius) const {
  for (int i = 0; i < count(); ++i) {
    if ((locations.row(i).transpose() - unit_point).lpNorm<Eigen::Infinity>() <=
        radius) {
      return i;
    }
  }
  return -1;
}

JointPredictive joint_pending_predictive(const GpPosterior& posterior,
                                         const Eigen::MatrixXd& pending_unit) {
  const int j = static_cast<int>(pending_unit.rows());
  if (j < 1) {
    throw std::invalid_argument("joint_pending_predictive: empty pending set");
  }
  if (pending_unit.cols() != posterior.inputs().cols()) {
    throw std::invalid_argument("joint_pending_predictive: dimension mismatch");
  }
  const auto& hyper = posterior.hyper();
  const int n = posterior.size();

  Eigen::MatrixXd cross(n, j);  // K(X, P)
  for (int col = 0; col < j; ++col) {
    cross.col(col) = kernel_cross(posterior.kind(), posterior.inputs(),
                                  pending_unit.row(col), hyper);
  }
  Eigen::MatrixXd prior_cov =
      kernel_matrix(posterior.kind(), pending_unit, hyper);

  JointPredictive joint;
  joint.mean = Eigen::VectorXd::Constant(j, hyper.mean) +
               cross.transpose() * posterior.weights();

  Eigen::MatrixXd whitened = cross;  // L^{-1} K(X, P)
  posterior.chol_lower().triangularView<Eigen::Lower>().solveInPlace(whitened);
  Eigen::MatrixXd cov = prior_cov - whitened.transpose() * whitened;
  cov.diagonal().array() += hyper.noise_variance;
  joint.covariance = 0.5 * (cov + cov.transpose());
  return joint;
}

namespace {

// Any factor B with B B^T = cov. Cholesky when it holds; otherwise an
// eigendecomposition with negative eigenvalues clamped, which also covers
// exactly singular covariances (deterministic fantasies).
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(cov);
  if (eigen.info() != Eigen::Success) {
    throw NumericalError("sample_fantasies: covariance factorization failed");
  }
  const Eigen::VectorXd scaled =
      eigen.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eigen.eigenvectors() * scaled.asDiagonal();
}

}  // namespace

std::vector<FantasySample> sample_fantasies(const JointPredictive& joint,
                                            const GpHyperparams& hyper,
                                            int count, std::mt19937_64& rng) {
  if (count < 1) {
    throw std::invalid_argument("sample_fantasies: count must be >= 1");
  }
  const int j = static_cast<int>(joint.mean.size());
  const Eigen::MatrixXd factor = covariance_factor(joint.covariance);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<FantasySample> fantasies;
  fantasies.reserve(count);
  for (int f = 0; f < count; ++f) {
    Eigen::VectorXd z(j);
    for (int i = 0; i < j; ++i) z[i] = gauss(rng);
    fantasies.push_back({joint.mean + factor * z, hyper});
  }
  return fantasies;
}

FantasizedEnsemble::FantasizedEnsemble(const Dataset& data,
                                       const Eigen::MatrixXd& pending_unit,
                                       const std::vector<GpHyperparams>& samples,
                                       KernelKind kernel, int fantasy_count,
                                       std::mt19937_64& rng) {
  if (samples.empty()) {
    throw std::invalid_argument("FantasizedEnsemble: no hyper samples");
  }
  const int j = static_cast<int>(pending_unit.rows());
  if (j > 0 && fantasy_count < 1) {
    throw std::invalid_argument("FantasizedEnsemble: fantasy_count must be >= 1");
  }

  int best_index = 0;
  for (int i = 1; i < data.n(); ++i) {
    if (data.targets[i] < data.targets[best_index]) best_index = i;
  }
  incumbent_.best_value = data.targets[best_index];
  incumbent_.best_location = data.inputs.row(best_index);

  branches_.reserve(samples.size() * (j == 0 ? 1 : fantasy_count));
  for (const auto& hyper : samples) {
    GpPosterior posterior = GpPosterior::fit(data, hyper, kernel);
    if (j == 0) {
      branches_.push_back(std::move(posterior));
      continue;
    }
    const JointPredictive joint =
        joint_pending_predictive(posterior, pending_unit);
    const auto fantasies = sample_fantasies(joint, hyper, fantasy_count, rng);

    Eigen::MatrixXd augmented_inputs(data.n() + j, data.dim());
    augmented_inputs.topRows(data.n()) = data.inputs;
    augmented_inputs.bottomRows(j) = pending_unit;
    Eigen::VectorXd augmented_targets(data.n() + j);
    augmented_targets.head(data.n()) = data.targets;
    for (const auto& fantasy : fantasies) {
      augmented_targets.tail(j) = fantasy.outcomes;
      branches_.push_back(GpPosterior::fit(augmented_inputs, augmented_targets,
                                           hyper, kernel));
    }
  }
}

double FantasizedEnsemble::score(const Eigen::VectorXd& x,
                                 const AcquisitionKind& kind) const {
  double sum = 0.0;
  for (const auto& branch : branches_) {
    sum += acquisition_score(kind, branch.predict(x), incumbent_);
  }
  return sum / static_cast<double>(branches_.size());
}

double acquisition_with_pending(const Eigen::VectorXd& x, const Dataset& data,
                                const Eigen::MatrixXd& pending_unit,
                                const std::vector<GpHyperparams>& samples,
                                KernelKind kernel, int fantasy_count,
                                const AcquisitionKind& kind,
                                std::mt19937_64& rng) {
  return FantasizedEnsemble(data, pending_unit, samples, kernel, fantasy_count,
                            rng)
      .score(x, kind);
}

}  // namespace bopt
