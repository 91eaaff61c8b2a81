#include "bopt/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bopt/errors.hpp"
#include "bopt/halton.hpp"
#include "bopt/nelder_mead.hpp"
#include "bopt/stats.hpp"

namespace bopt {

void AcquisitionKind::validate() const {
  if (type == AcquisitionType::LowerConfidenceBound &&
      (!(kappa > 0.0) || !std::isfinite(kappa))) {
    throw std::invalid_argument("AcquisitionKind: kappa must be > 0 for LCB");
  }
}

std::string to_string(AcquisitionType type) {
  switch (type) {
    case AcquisitionType::ProbabilityOfImprovement:
      return "pi";
    case AcquisitionType::ExpectedImprovement:
      return "ei";
    case AcquisitionType::LowerConfidenceBound:
      return "lcb";
  }
  return "ei";
}

AcquisitionType acquisition_type_from_string(const std::string& name) {
  if (name == "pi") return AcquisitionType::ProbabilityOfImprovement;
  if (name == "ei") return AcquisitionType::ExpectedImprovement;
  if (name == "lcb") return AcquisitionType::LowerConfidenceBound;
  throw std::invalid_argument("unknown acquisition type: " + name);
}

double gamma_score(double mu, double sigma, double best_value) {
  return (best_value - mu) / sigma;
}

double probability_of_improvement(const PredictiveMoments& moments,
                                  const Incumbent& incumbent) {
  const double sigma = std::sqrt(moments.variance);
  if (sigma == 0.0) {
    return moments.mean < incumbent.best_value ? 1.0 : 0.0;
  }
  return norm_cdf(gamma_score(moments.mean, sigma, incumbent.best_value));
}

double expected_improvement(const PredictiveMoments& moments,
                            const Incumbent& incumbent) {
  const double sigma = std::sqrt(moments.variance);
  if (sigma == 0.0) {
    return std::max(incumbent.best_value - moments.mean, 0.0);
  }
  const double g = gamma_score(moments.mean, sigma, incumbent.best_value);
  return std::max(0.0, sigma * (g * norm_cdf(g) + norm_pdf(g)));
}

double lower_confidence_bound(const PredictiveMoments& moments, double kappa) {
  return moments.mean - kappa * std::sqrt(moments.variance);
}

double acquisition_score(const AcquisitionKind& kind,
                         const PredictiveMoments& moments,
                         const Incumbent& incumbent) {
  switch (kind.type) {
    case AcquisitionType::ProbabilityOfImprovement:
      return probability_of_improvement(moments, incumbent);
    case AcquisitionType::ExpectedImprovement:
      return expected_improvement(moments, incumbent);
    case AcquisitionType::LowerConfidenceBound:
      return -lower_confidence_bound(moments, kind.kappa);
  }
  return 0.0;
}

double expected_inverse_duration(const PredictiveMoments& log_duration_moments) {
  return std::exp(-log_duration_moments.mean +
                  0.5 * log_duration_moments.variance);
}

MarginalizedGp::MarginalizedGp(Dataset data,
                               const std::vector<GpHyperparams>& samples,
                               KernelKind kind)
    : data_(std::move(data)) {
  if (samples.empty()) {
    throw std::invalid_argument("MarginalizedGp: no hyperparameter samples");
  }
  members_.reserve(samples.size());
  for (const auto& hyper : samples) {
    members_.push_back(GpPosterior::fit(data_, hyper, kind));
  }
  int best_index = 0;
  for (int i = 1; i < data_.n(); ++i) {
    if (data_.targets[i] < data_.targets[best_index]) best_index = i;
  }
  incumbent_.best_value = data_.targets[best_index];
  incumbent_.best_location = data_.inputs.row(best_index);
}

double MarginalizedGp::integrated_acquisition(const Eigen::VectorXd& x,
                                              const AcquisitionKind& kind) const {
  double sum = 0.0;
  for (const auto& member : members_) {
    sum += acquisition_score(kind, member.predict(x), incumbent_);
  }
  return sum / static_cast<double>(members_.size());
}

double MarginalizedGp::integrated_expected_inverse_duration(
    const Eigen::VectorXd& x) const {
  double sum = 0.0;
  for (const auto& member : members_) {
    sum += expected_inverse_duration(member.predict(x));
  }
  return sum / static_cast<double>(members_.size());
}

double integrated_acquisition(const Eigen::VectorXd& x, const Dataset& data,
                              const std::vector<GpHyperparams>& samples,
                              const AcquisitionKind& kind, KernelKind kernel) {
  return MarginalizedGp(data, samples, kernel).integrated_acquisition(x, kind);
}

double expected_improvement_per_second(const Eigen::VectorXd& x,
                                       const GpPosterior& objective,
                                       const GpPosterior& duration,
                                       const Incumbent& incumbent) {
  return expected_improvement(objective.predict(x), incumbent) *
         expected_inverse_duration(duration.predict(x));
}

double expected_improvement_per_second(const Eigen::VectorXd& x,
                                       const MarginalizedGp& objective,
                                       const MarginalizedGp& duration) {
  const AcquisitionKind ei{AcquisitionType::ExpectedImprovement, 0.0};
  return objective.integrated_acquisition(x, ei) *
         duration.integrated_expected_inverse_duration(x);
}

namespace {

bool near_any_row(const Eigen::VectorXd& x, const Eigen::MatrixXd& rows,
                  double radius) {
  for (int i = 0; i < rows.rows(); ++i) {
    if ((rows.row(i).transpose() - x).norm() <= radius) return true;
  }
  return false;
}

Eigen::VectorXd maximize_on_grid(const ScoreFunction& score,
                                 const Eigen::MatrixXd& grid_unit,
                                 const Eigen::MatrixXd& completed_unit,
                                 const Eigen::MatrixXd& pending_unit) {
  constexpr double kMatchRadius = 1e-9;
  bool found = false;
  double best_score = -std::numeric_limits<double>::infinity();
  int best_index = -1;
  for (int i = 0; i < grid_unit.rows(); ++i) {
    const Eigen::VectorXd point = grid_unit.row(i);
    if (near_any_row(point, completed_unit, kMatchRadius) ||
        near_any_row(point, pending_unit, kMatchRadius)) {
      continue;
    }
    const double value = score(point);
    if (!found || value > best_score) {
      found = true;
      best_score = value;
      best_index = i;
    }
  }
  if (!found) {
    throw GridExhaustedError(
        "maximize_acquisition: every grid point is already completed or "
        "pending");
  }
  return grid_unit.row(best_index);
}

}  // namespace

Eigen::VectorXd maximize_acquisition(
    const ScoreFunction& score, int dim, const Eigen::MatrixXd& completed_unit,
    const Eigen::MatrixXd& pending_unit, std::mt19937_64& rng,
    const std::optional<Eigen::MatrixXd>& grid_unit,
    const MaximizeOptions& options) {
  if (grid_unit) {
    return maximize_on_grid(score, *grid_unit, completed_unit, pending_unit);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd shift(dim);
  for (int d = 0; d < dim; ++d) shift[d] = unit(rng);

  struct Candidate {
    Eigen::VectorXd point;
    double value;
  };
  std::vector<Candidate> leaders;  // kept sorted, best first
  leaders.reserve(options.refine_count + 1);

  for (int i = 0; i < options.candidates; ++i) {
    const Eigen::VectorXd point =
        shifted_halton_point(static_cast<std::uint64_t>(i) + 1, shift);
    if (near_any_row(point, completed_unit, options.skip_radius) ||
        near_any_row(point, pending_unit, options.skip_radius)) {
      continue;
    }
    const double value = score(point);
    if (static_cast<int>(leaders.size()) < options.refine_count ||
        value > leaders.back().value) {
      auto at = std::find_if(leaders.begin(), leaders.end(),
                             [&](const Candidate& c) { return value > c.value; });
      leaders.insert(at, {point, value});
      if (static_cast<int>(leaders.size()) > options.refine_count) {
        leaders.pop_back();
      }
    }
  }
  if (leaders.empty()) {
    throw NumericalError(
        "maximize_acquisition: no admissible candidates (all skipped)");
  }

  const Bounds box{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
  Eigen::VectorXd best_point = leaders.front().point;
  double best_value = leaders.front().value;
  for (const auto& leader : leaders) {
    const NelderMeadResult refined = nelder_mead(
        [&](const Eigen::VectorXd& x) { return -score(x); }, leader.point,
        0.05, options.refine_iterations, box);
    if (-refined.value > best_value) {
      best_value = -refined.value;
      best_point = refined.x;
    }
  }

  // Refinement may drift onto an existing location; fall back to the best
  // scanned candidate, which already cleared the skip radius.
  constexpr double kMatchRadius = 1e-9;
  if (near_any_row(best_point, completed_unit, kMatchRadius) ||
      near_any_row(best_point, pending_unit, kMatchRadius)) {
    best_point = leaders.front().point;
  }
  return best_point;
}

}  // namespace bopt
