#include "bopt/gp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace bopt {

namespace {

// Escalation ladder tried in order; 0 means "no jitter".
constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6};

}  // namespace

std::string to_string(KernelKind kind) {
  return kind == KernelKind::SquaredExponential ? "se" : "matern52";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "se" || name == "squared-exponential") {
    return KernelKind::SquaredExponential;
  }
  if (name == "matern52" || name == "matern") {
    return KernelKind::Matern52;
  }
  throw std::invalid_argument("unknown kernel kind: " + name);
}

void GpHyperparams::validate(int expected_dim) const {
  if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
    throw std::invalid_argument("GpHyperparams: amplitude must be > 0");
  }
  if (length_scales.size() == 0) {
    throw std::invalid_argument("GpHyperparams: no length scales");
  }
  for (int d = 0; d < length_scales.size(); ++d) {
    if (!(length_scales[d] > 0.0) || !std::isfinite(length_scales[d])) {
      throw std::invalid_argument("GpHyperparams: length scales must be > 0");
    }
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("GpHyperparams: noise variance must be >= 0");
  }
  if (!std::isfinite(mean)) {
    throw std::invalid_argument("GpHyperparams: mean must be finite");
  }
  if (expected_dim >= 0 && length_scales.size() != expected_dim) {
    throw std::invalid_argument(
        "GpHyperparams: length scale count does not match dimension");
  }
}

double squared_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                        const Eigen::VectorXd& length_scales) {
  if (a.size() != b.size() || a.size() != length_scales.size()) {
    throw std::invalid_argument("squared_distance: dimension mismatch");
  }
  double sum = 0.0;
  for (int d = 0; d < a.size(); ++d) {
    const double delta = (a[d] - b[d]) / length_scales[d];
    sum += delta * delta;
  }
  return sum;
}

namespace {

inline double se_from_r2(double r2, double amplitude) {
  return amplitude * std::exp(-0.5 * r2);
}

inline double m52_from_r2(double r2, double amplitude) {
  const double s = std::sqrt(5.0 * r2);
  return amplitude * (1.0 + s + (5.0 / 3.0) * r2) * std::exp(-s);
}

}  // namespace

double kernel_se(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                 const GpHyperparams& hyper) {
  return se_from_r2(squared_distance(a, b, hyper.length_scales),
                    hyper.amplitude);
}

double kernel_m52(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  const GpHyperparams& hyper) {
  return m52_from_r2(squared_distance(a, b, hyper.length_scales),
                     hyper.amplitude);
}

double kernel_value(KernelKind kind, const Eigen::VectorXd& a,
                    const Eigen::VectorXd& b, const GpHyperparams& hyper) {
  return kind == KernelKind::SquaredExponential ? kernel_se(a, b, hyper)
                                                : kernel_m52(a, b, hyper);
}

Eigen::MatrixXd kernel_matrix(KernelKind kind, const Eigen::MatrixXd& x,
                              const GpHyperparams& hyper) {
  const int n = static_cast<int>(x.rows());
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    gram(i, i) = hyper.amplitude;
    for (int j = 0; j < i; ++j) {
      const double r2 =
          squared_distance(x.row(i), x.row(j), hyper.length_scales);
      const double value = kind == KernelKind::SquaredExponential
                               ? se_from_r2(r2, hyper.amplitude)
                               : m52_from_r2(r2, hyper.amplitude);
      gram(i, j) = value;
      gram(j, i) = value;
    }
  }
  return gram;
}

Eigen::VectorXd kernel_cross(KernelKind kind, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& q,
                             const GpHyperparams& hyper) {
  const int n = static_cast<int>(x.rows());
  Eigen::VectorXd cross(n);
  for (int i = 0; i < n; ++i) {
    cross[i] = kernel_value(kind, x.row(i), q, hyper);
  }
  return cross;
}

GpPosterior GpPosterior::fit(Eigen::MatrixXd inputs, Eigen::VectorXd targets,
                             GpHyperparams hyper, KernelKind kind) {
  const int n = static_cast<int>(inputs.rows());
  if (n < 1) {
    throw std::invalid_argument("GpPosterior::fit: need at least one point");
  }
  if (targets.size() != n) {
    throw std::invalid_argument(
        "GpPosterior::fit: target count does not match input count");
  }
  hyper.validate(static_cast<int>(inputs.cols()));

  const Eigen::MatrixXd gram = kernel_matrix(kind, inputs, hyper);

  GpPosterior posterior;
  bool factored = false;
  for (const double jitter : kJitterLadder) {
    Eigen::MatrixXd shifted = gram;
    shifted.diagonal().array() += hyper.noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      posterior.chol_lower_ = llt.matrixL();
      posterior.jitter_ = jitter;
      factored = true;
      break;
    }
  }
  if (!factored) {
    std::ostringstream message;
    message << "GpPosterior::fit: Cholesky factorization failed for N=" << n
            << " even with diagonal jitter up to 1e-6; the kernel matrix is "
               "numerically indefinite (near-duplicate inputs or degenerate "
               "length scales)";
    throw NumericalError(message.str());
  }

  const Eigen::VectorXd centered =
      targets.array() - hyper.mean;  // y - m 1
  Eigen::VectorXd weights = centered;
  posterior.chol_lower_.triangularView<Eigen::Lower>().solveInPlace(weights);
  const double quadratic = weights.squaredNorm();  // (y-m1)^T A^{-1} (y-m1)
  posterior.chol_lower_.triangularView<Eigen::Lower>()
      .transpose()
      .solveInPlace(weights);

  double log_det_half = 0.0;
  for (int i = 0; i < n; ++i) {
    log_det_half += std::log(posterior.chol_lower_(i, i));
  }
  posterior.log_marginal_likelihood_ =
      -0.5 * quadratic - log_det_half -
      0.5 * n * std::log(2.0 * std::numbers::pi);

  posterior.inputs_ = std::move(inputs);
  posterior.targets_ = std::move(targets);
  posterior.hyper_ = std::move(hyper);
  posterior.kind_ = kind;
  posterior.weights_ = std::move(weights);
  return posterior;
}

GpPosterior GpPosterior::fit(const Dataset& data, GpHyperparams hyper,
                             KernelKind kind) {
  return fit(data.inputs, data.targets, std::move(hyper), kind);
}

PredictiveMoments GpPosterior::predict(const Eigen::VectorXd& x) const {
  if (x.size() != inputs_.cols()) {
    throw std::invalid_argument("GpPosterior::predict: dimension mismatch");
  }
  const Eigen::VectorXd cross = kernel_cross(kind_, inputs_, x, hyper_);
  PredictiveMoments moments;
  moments.mean = hyper_.mean + cross.dot(weights_);
  Eigen::VectorXd whitened = cross;
  chol_lower_.triangularView<Eigen::Lower>().solveInPlace(whitened);
  moments.variance = std::max(0.0, hyper_.amplitude - whitened.squaredNorm());
  return moments;
}

double log_marginal_likelihood(const Eigen::MatrixXd& inputs,
                               const Eigen::VectorXd& targets,
                               const GpHyperparams& hyper, KernelKind kind) {
  return GpPosterior::fit(inputs, targets, hyper, kind)
      .log_marginal_likelihood();
}

}  // namespace bopt
