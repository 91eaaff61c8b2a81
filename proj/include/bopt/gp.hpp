#pragma once

#include <Eigen/Dense>

#include <string>

#include "bopt/errors.hpp"

namespace bopt {

enum class KernelKind { SquaredExponential, Matern52 };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

// The D+3 quantities governing one GP: covariance amplitude, one length
// scale per input dimension, observation noise variance, constant mean.
struct GpHyperparams {
  double amplitude = 1.0;
  Eigen::VectorXd length_scales;
  double noise_variance = 0.0;
  double mean = 0.0;

  // expected_dim < 0 skips the dimension check.
  void validate(int expected_dim = -1) const;
};

struct PredictiveMoments {
  double mean = 0.0;
  double variance = 0.0;  // latent-function variance, clamped at 0
};

struct Dataset {
  Eigen::MatrixXd inputs;   // N x D, one observation per row
  Eigen::VectorXd targets;  // N

  int n() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }
};

// ARD distance: sum_d (a_d - b_d)^2 / l_d^2.
double squared_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& length_scales);

double kernel_se(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 const GpHyperparams& hyper);
double kernel_m52(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  const GpHyperparams& hyper);
double kernel_value(KernelKind kind, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& b, const GpHyperparams& hyper);

// Gram matrix of the rows of x, without the noise diagonal.
Eigen::MatrixXd kernel_matrix(KernelKind kind, const Eigen::MatrixXd& x,
                              const GpHyperparams& hyper);
// Cross-covariances k(x_i, q) for every row of x.
Eigen::VectorXd kernel_cross(KernelKind kind, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& q,
                             const GpHyperparams& hyper);

// Trained surrogate: the Cholesky factor of (K + nu I + jitter I) and the
// precomputed solve against the centered targets. Immutable once fitted and
// safe to share across threads.
class GpPosterior {
 public:
  static GpPosterior fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets,
                         GpHyperparams hyper, KernelKind kind);
  static GpPosterior fit(const Dataset& data, GpHyperparams hyper,
                         KernelKind kind);

  PredictiveMoments predict(const Eigen::VectorXd& x) const;

  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const GpHyperparams& hyper() const { return hyper_; }
  KernelKind kind() const { return kind_; }
  int size() const { return static_cast<int>(inputs_.rows()); }

  // Lower-triangular factor L with L L^T = K + nu I + jitter I.
  const Eigen::MatrixXd& chol_lower() const { return chol_lower_; }
  // (K + nu I + jitter I)^{-1} (y - m 1)
  const Eigen::VectorXd& weights() const { return weights_; }
  // Diagonal jitter that was needed for the factorization (0 if none).
  double jitter() const { return jitter_; }

  double log_marginal_likelihood() const { return log_marginal_likelihood_; }

 private:
  GpPosterior() = default;

  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  GpHyperparams hyper_;
  KernelKind kind_ = KernelKind::Matern52;
  Eigen::MatrixXd chol_lower_;
  Eigen::VectorXd weights_;
  double jitter_ = 0.0;
  double log_marginal_likelihood_ = 0.0;
};

// log N(y | m 1, K + nu I). Factorization failures raise NumericalError.
double log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                               const Eigen::VectorXd& targets,
                               const GpHyperparams& hyper, KernelKind kind);

}  // namespace bopt
