#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bopt/acquisition.hpp"
#include "bopt/gp.hpp"
#include "bopt/hypers.hpp"
#include "bopt/pending.hpp"
#include "bopt/space.hpp"

namespace bopt {

struct Observation {
  Eigen::VectorXd location;  // native units
  double value = 0.0;
  std::optional<double> duration_seconds;
  bool from_failure = false;  // synthetic value, excluded from the cost model
};

enum class SurrogateTreatment { Mcmc, PointEstimate };

std::string to_string(SurrogateTreatment treatment);
SurrogateTreatment surrogate_treatment_from_string(const std::string& name);

struct StrategyConfig {
  SurrogateTreatment treatment = SurrogateTreatment::Mcmc;
  int mcmc_samples = 10;
  int mcmc_burn_in = 50;       // first fit of a fresh chain
  int mcmc_warm_burn_in = 10;  // subsequent warm-started refreshes
  AcquisitionKind acquisition{};
  bool cost_aware = false;  // expected improvement per second
  int parallel_degree = 1;  // also the pending cap
  int fantasy_count = 10;
  int initial_design_count = 2;
  KernelKind kernel = KernelKind::Matern52;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static StrategyConfig from_json(const nlohmann::json& doc);
};

// The suggest/observe state machine. Mutations must be externally
// serialized; evaluation of suggested points happens elsewhere and results
// may be reported in any order.
class Optimizer {
 public:
  Optimizer(ParameterSpace space, StrategyConfig config,
            std::optional<Eigen::MatrixXd> grid_native = {});

  // Next point to evaluate, in native units. The point becomes pending.
  Eigen::VectorXd suggest();

  // Fold in a finished evaluation. The point must be pending unless force
  // is set. Non-finite values are rejected; report crashes through
  // observe_failure instead.
  void observe(const Eigen::VectorXd& native_point, double value,
               std::optional<double> duration_seconds = {}, bool force = false);

  // Failure marker: records the point at worst-observed plus one spread so
  // the surrogate stays defined; excluded from the duration model.
  void observe_failure(const Eigen::VectorXd& native_point, bool force = false);

  std::pair<Eigen::VectorXd, double> best() const;

  const std::vector<Observation>& completed() const { return completed_; }
  const PendingSet& pending() const { return pending_; }
  long iteration() const { return iteration_; }
  const ParameterSpace& space() const { return space_; }
  const StrategyConfig& config() const { return config_; }
  bool grid_mode() const { return grid_native_.has_value(); }
  const std::optional<Eigen::MatrixXd>& grid_native() const {
    return grid_native_;
  }

  nlohmann::json save_state() const;
  static Optimizer load_state(const nlohmann::json& doc);

  // Training views of the completed observations.
  Dataset objective_dataset() const;  // unit inputs, standardized targets
  Dataset duration_dataset() const;   // unit inputs, ln durations

  static constexpr int kStateVersion = 1;

 private:
  Eigen::VectorXd next_initial_point();
  Eigen::VectorXd suggest_by_model();
  Eigen::MatrixXd completed_unit() const;
  Dataset standardized_dataset(double& center, double& scale) const;
  void refresh_hyper_samples(const Dataset& data, double center, double scale);
  int pending_cap() const { return config_.parallel_degree; }

  ParameterSpace space_;
  StrategyConfig config_;
  std::optional<Eigen::MatrixXd> grid_native_;
  std::optional<Eigen::MatrixXd> grid_unit_;

  std::vector<Observation> completed_;
  PendingSet pending_;
  std::mt19937_64 rng_;
  std::optional<HyperSampleSet> hyper_samples_;
  std::optional<HyperSampleSet> duration_hyper_samples_;
  long iteration_ = 0;
  std::uint64_t initial_cursor_ = 0;  // Halton index for the initial design
  double target_center_ = 0.0;  // standardization used by hyper_samples_
  double target_scale_ = 1.0;
};

}  // namespace bopt
