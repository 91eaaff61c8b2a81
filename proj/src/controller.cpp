#include "bopt/controller.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "bopt/errors.hpp"
#include "bopt/halton.hpp"

namespace bopt {

namespace {

constexpr double kMatchRadius = 1e-9;

// Seed-derived shift for the initial-design Halton stream, independent of
// the main RNG so the design does not move when other draws change.
Eigen::VectorXd design_shift(std::uint64_t seed, int dim) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd shift(dim);
  for (int d = 0; d < dim; ++d) shift[d] = unit(rng);
  return shift;
}

}  // namespace

std::string to_string(SurrogateTreatment treatment) {
  return treatment == SurrogateTreatment::Mcmc ? "mcmc" : "point";
}

SurrogateTreatment surrogate_treatment_from_string(const std::string& name) {
  if (name == "mcmc") return SurrogateTreatment::Mcmc;
  if (name == "point") return SurrogateTreatment::PointEstimate;
  throw std::invalid_argument("unknown surrogate treatment: " + name);
}

void StrategyConfig::validate() const {
  acquisition.validate();
  if (cost_aware &&
      acquisition.type != AcquisitionType::ExpectedImprovement) {
    throw std::invalid_argument(
        "StrategyConfig: cost_aware requires the expected-improvement "
        "acquisition");
  }
  if (parallel_degree < 1) {
    throw std::invalid_argument("StrategyConfig: parallel_degree must be >= 1");
  }
  if (mcmc_samples < 1 || mcmc_burn_in < 0 || mcmc_warm_burn_in < 0) {
    throw std::invalid_argument("StrategyConfig: bad MCMC schedule");
  }
  if (fantasy_count < 1) {
    throw std::invalid_argument("StrategyConfig: fantasy_count must be >= 1");
  }
  if (initial_design_count < 1) {
    throw std::invalid_argument(
        "StrategyConfig: initial_design_count must be >= 1");
  }
}

nlohmann::json StrategyConfig::to_json() const {
  return nlohmann::json{{"treatment", to_string(treatment)},
                        {"mcmc_samples", mcmc_samples},
                        {"mcmc_burn_in", mcmc_burn_in},
                        {"mcmc_warm_burn_in", mcmc_warm_burn_in},
                        {"acquisition", to_string(acquisition.type)},
                        {"kappa", acquisition.kappa},
                        {"cost_aware", cost_aware},
                        {"parallel_degree", parallel_degree},
                        {"fantasy_count", fantasy_count},
                        {"initial_design_count", initial_design_count},
                        {"kernel", to_string(kernel)},
                        {"seed", seed}};
}

StrategyConfig StrategyConfig::from_json(const nlohmann::json& doc) {
  StrategyConfig config;
  try {
    if (doc.contains("treatment")) {
      config.treatment =
          surrogate_treatment_from_string(doc.at("treatment").get<std::string>());
    }
    if (doc.contains("mcmc_samples")) {
      config.mcmc_samples = doc.at("mcmc_samples").get<int>();
    }
    if (doc.contains("mcmc_burn_in")) {
      config.mcmc_burn_in = doc.at("mcmc_burn_in").get<int>();
    }
    if (doc.contains("mcmc_warm_burn_in")) {
      config.mcmc_warm_burn_in = doc.at("mcmc_warm_burn_in").get<int>();
    }
    if (doc.contains("acquisition")) {
      config.acquisition.type =
          acquisition_type_from_string(doc.at("acquisition").get<std::string>());
    }
    if (doc.contains("kappa")) {
      config.acquisition.kappa = doc.at("kappa").get<double>();
    }
    if (doc.contains("cost_aware")) {
      config.cost_aware = doc.at("cost_aware").get<bool>();
    }
    if (doc.contains("parallel_degree")) {
      config.parallel_degree = doc.at("parallel_degree").get<int>();
    }
    if (doc.contains("fantasy_count")) {
      config.fantasy_count = doc.at("fantasy_count").get<int>();
    }
    if (doc.contains("initial_design_count")) {
      config.initial_design_count = doc.at("initial_design_count").get<int>();
    }
    if (doc.contains("kernel")) {
      config.kernel = kernel_kind_from_string(doc.at("kernel").get<std::string>());
    }
    if (doc.contains("seed")) {
      config.seed = doc.at("seed").get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw StateFormatError(std::string("strategy: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw StateFormatError(std::string("strategy: ") + e.what());
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw StateFormatError(std::string("strategy: ") + e.what());
  }
  return config;
}

Optimizer::Optimizer(ParameterSpace space, StrategyConfig config,
                     std::optional<Eigen::MatrixXd> grid_native)
    : space_(std::move(space)),
      config_(std::move(config)),
      grid_native_(std::move(grid_native)),
      rng_(config_.seed) {
  config_.validate();
  if (!grid_native_ && space_.fully_gridded()) {
    grid_native_ = space_.grid_points_native();
  }
  if (grid_native_) {
    if (grid_native_->rows() < 1 || grid_native_->cols() != space_.dim()) {
      throw std::invalid_argument("Optimizer: bad grid point matrix");
    }
    grid_unit_ = Eigen::MatrixXd(grid_native_->rows(), space_.dim());
    for (int i = 0; i < grid_native_->rows(); ++i) {
      grid_unit_->row(i) = space_.to_unit(grid_native_->row(i));
    }
  }
}

Eigen::MatrixXd Optimizer::completed_unit() const {
  Eigen::MatrixXd unit(static_cast<int>(completed_.size()), space_.dim());
  for (std::size_t i = 0; i < completed_.size(); ++i) {
    unit.row(static_cast<int>(i)) = space_.to_unit(completed_[i].location);
  }
  return unit;
}

Dataset Optimizer::standardized_dataset(double& center, double& scale) const {
  Dataset data;
  data.inputs = completed_unit();
  data.targets.resize(static_cast<int>(completed_.size()));
  for (std::size_t i = 0; i < completed_.size(); ++i) {
    data.targets[static_cast<int>(i)] = completed_[i].value;
  }
  // Standardize so the unit-cube priors fit regardless of the objective's
  // scale. Expected improvement's ranking is invariant under this map.
  center = data.targets.mean();
  scale = std::sqrt(
      (data.targets.array() - center).square().sum() / data.targets.size());
  if (!(scale > 1e-12)) scale = 1.0;
  data.targets = (data.targets.array() - center) / scale;
  return data;
}

Dataset Optimizer::objective_dataset() const {
  double center = 0.0;
  double scale = 1.0;
  return standardized_dataset(center, scale);
}

Dataset Optimizer::duration_dataset() const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < completed_.size(); ++i) {
    if (completed_[i].duration_seconds && !completed_[i].from_failure) {
      rows.push_back(static_cast<int>(i));
    }
  }
  Dataset data;
  data.inputs.resize(static_cast<int>(rows.size()), space_.dim());
  data.targets.resize(static_cast<int>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    data.inputs.row(static_cast<int>(k)) =
        space_.to_unit(completed_[rows[k]].location);
    data.targets[static_cast<int>(k)] =
        std::log(*completed_[rows[k]].duration_seconds);
  }
  return data;
}

void Optimizer::refresh_hyper_samples(const Dataset& data, double center,
                                      double scale) {
  const HyperPrior prior = HyperPrior::defaults(space_.dim(), data.targets);
  if (config_.treatment == SurrogateTreatment::Mcmc) {
    // Warm-start states live in the previous refresh's target units;
    // re-express them exactly in the current standardization so the chains
    // resume at the posterior instead of chasing the unit change.
    if (hyper_samples_ && (center != target_center_ || scale != target_scale_)) {
      const double ratio = target_scale_ / scale;
      for (auto& sample : hyper_samples_->samples) {
        sample.amplitude *= ratio * ratio;
        sample.noise_variance *= ratio * ratio;
        sample.mean = (sample.mean * target_scale_ + target_center_ - center) /
                      scale;
      }
    }
    McmcOptions options;
    options.count = config_.mcmc_samples;
    options.burn_in = hyper_samples_ ? config_.mcmc_warm_burn_in
                                     : config_.mcmc_burn_in;
    options.seed = config_.seed;
    const HyperSampleSet* warm =
        hyper_samples_ ? &*hyper_samples_ : nullptr;
    hyper_samples_ =
        sample_hypers(data, prior, config_.kernel, options, rng_, warm);
  } else {
    HyperSampleSet set;
    set.samples.push_back(
        optimize_hypers(data, prior, config_.kernel, rng_));
    set.seed = config_.seed;
    hyper_samples_ = std::move(set);
  }
  target_center_ = center;
  target_scale_ = scale;
}

Eigen::VectorXd Optimizer::next_initial_point() {
  if (grid_unit_) {
    // Random unused grid point, matching the grid-restricted setting.
    std::vector<int> unused;
    const Eigen::MatrixXd done = completed_unit();
    for (int i = 0; i < grid_unit_->rows(); ++i) {
      const Eigen::VectorXd point = grid_unit_->row(i);
      bool taken = pending_.find(point, kMatchRadius) >= 0;
      for (int r = 0; !taken && r < done.rows(); ++r) {
        taken = (done.row(r).transpose() - point).lpNorm<Eigen::Infinity>() <=
                kMatchRadius;
      }
      if (!taken) unused.push_back(i);
    }
    if (unused.empty()) {
      throw GridExhaustedError("suggest: grid exhausted during initial design");
    }
    std::uniform_int_distribution<int> pick(0,
                                            static_cast<int>(unused.size()) - 1);
    return grid_unit_->row(unused[pick(rng_)]);
  }

  const Eigen::VectorXd shift = design_shift(config_.seed, space_.dim());
  const Eigen::MatrixXd done = completed_unit();
  for (int guard = 0; guard < 10000; ++guard) {
    ++initial_cursor_;
    Eigen::VectorXd point = shifted_halton_point(initial_cursor_, shift);
    bool taken = pending_.find(point, kMatchRadius) >= 0;
    for (int r = 0; !taken && r < done.rows(); ++r) {
      taken = (done.row(r).transpose() - point).lpNorm<Eigen::Infinity>() <=
              kMatchRadius;
    }
    if (!taken) return point;
  }
  throw NumericalError("suggest: could not place an initial design point");
}

Eigen::VectorXd Optimizer::suggest_by_model() {
  double center = 0.0;
  double scale = 1.0;
  const Dataset data = standardized_dataset(center, scale);
  refresh_hyper_samples(data, center, scale);

  // Duration model refresh; engaged only once two real durations exist.
  std::shared_ptr<MarginalizedGp> duration_model;
  if (config_.cost_aware) {
    const Dataset durations = duration_dataset();
    if (durations.n() >= 2) {
      const HyperPrior prior =
          HyperPrior::defaults(space_.dim(), durations.targets);
      if (config_.treatment == SurrogateTreatment::Mcmc) {
        McmcOptions options;
        options.count = config_.mcmc_samples;
        options.burn_in = duration_hyper_samples_ ? config_.mcmc_warm_burn_in
                                                  : config_.mcmc_burn_in;
        options.seed = config_.seed;
        const HyperSampleSet* warm =
            duration_hyper_samples_ ? &*duration_hyper_samples_ : nullptr;
        duration_hyper_samples_ = sample_hypers(durations, prior,
                                                config_.kernel, options, rng_,
                                                warm);
      } else {
        HyperSampleSet set;
        set.samples.push_back(
            optimize_hypers(durations, prior, config_.kernel, rng_));
        duration_hyper_samples_ = std::move(set);
      }
      duration_model = std::make_shared<MarginalizedGp>(
          durations, duration_hyper_samples_->samples, config_.kernel);
    }
  }

  const AcquisitionKind kind = config_.acquisition;
  ScoreFunction score;
  if (pending_.count() > 0) {
    auto ensemble = std::make_shared<FantasizedEnsemble>(
        data, pending_.locations, hyper_samples_->samples, config_.kernel,
        config_.fantasy_count, rng_);
    score = [ensemble, kind](const Eigen::VectorXd& x) {
      return ensemble->score(x, kind);
    };
  } else {
    auto model = std::make_shared<MarginalizedGp>(
        data, hyper_samples_->samples, config_.kernel);
    score = [model, kind](const Eigen::VectorXd& x) {
      return model->integrated_acquisition(x, kind);
    };
  }
  if (duration_model) {
    auto base = score;
    score = [base, duration_model](const Eigen::VectorXd& x) {
      return base(x) * duration_model->integrated_expected_inverse_duration(x);
    };
  }

  return maximize_acquisition(score, space_.dim(), completed_unit(),
                              pending_.locations, rng_, grid_unit_);
}

Eigen::VectorXd Optimizer::suggest() {
  if (pending_.count() >= pending_cap()) {
    throw std::invalid_argument(
        "suggest: pending evaluations already at the parallel-degree cap");
  }
  Eigen::VectorXd unit_point;
  if (static_cast<long>(completed_.size()) < config_.initial_design_count) {
    unit_point = next_initial_point();
  } else {
    unit_point = suggest_by_model();
  }
  pending_.add(unit_point, iteration_);
  ++iteration_;
  return space_.from_unit(unit_point);
}

void Optimizer::observe(const Eigen::VectorXd& native_point, double value,
                        std::optional<double> duration_seconds, bool force) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument(
        "observe: non-finite value rejected; report crashes via "
        "observe_failure");
  }
  if (duration_seconds && !(*duration_seconds > 0.0)) {
    throw std::invalid_argument("observe: duration must be positive");
  }
  const Eigen::VectorXd unit = space_.to_unit(native_point);
  const int index = pending_.find(unit, kMatchRadius);
  if (index < 0 && !force) {
    throw std::invalid_argument(
        "observe: point was never suggested (pass force to insert anyway)");
  }
  if (index >= 0) pending_.remove(index);
  completed_.push_back({native_point, value, duration_seconds, false});
}

void Optimizer::observe_failure(const Eigen::VectorXd& native_point,
                                bool force) {
  const Eigen::VectorXd unit = space_.to_unit(native_point);
  const int index = pending_.find(unit, kMatchRadius);
  if (index < 0 && !force) {
    throw std::invalid_argument(
        "observe_failure: point was never suggested (pass force to insert "
        "anyway)");
  }
  if (index >= 0) pending_.remove(index);

  double worst = 0.0;
  double spread = 1.0;
  if (!completed_.empty()) {
    double lo = completed_.front().value;
    double hi = lo;
    for (const auto& obs : completed_) {
      lo = std::min(lo, obs.value);
      hi = std::max(hi, obs.value);
    }
    worst = hi;
    spread = (hi - lo) > 0.0 ? (hi - lo) : 1.0;
  }
  completed_.push_back({native_point, worst + spread, std::nullopt, true});
}

std::pair<Eigen::VectorXd, double> Optimizer::best() const {
  if (completed_.empty()) {
    throw std::invalid_argument("best: no completed observations");
  }
  std::size_t best_index = 0;
  for (std::size_t i = 1; i < completed_.size(); ++i) {
    if (completed_[i].value < completed_[best_index].value) best_index = i;
  }
  return {completed_[best_index].location, completed_[best_index].value};
}

namespace {

nlohmann::json hyper_to_json(const GpHyperparams& hyper) {
  return nlohmann::json{
      {"amplitude", hyper.amplitude},
      {"length_scales",
       std::vector<double>(hyper.length_scales.data(),
                           hyper.length_scales.data() + hyper.length_scales.size())},
      {"noise_variance", hyper.noise_variance},
      {"mean", hyper.mean}};
}

GpHyperparams hyper_from_json(const nlohmann::json& doc) {
  GpHyperparams hyper;
  hyper.amplitude = doc.at("amplitude").get<double>();
  const auto scales = doc.at("length_scales").get<std::vector<double>>();
  hyper.length_scales =
      Eigen::Map<const Eigen::VectorXd>(scales.data(), scales.size());
  hyper.noise_variance = doc.at("noise_variance").get<double>();
  hyper.mean = doc.at("mean").get<double>();
  return hyper;
}

nlohmann::json sample_set_to_json(const HyperSampleSet& set) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& hyper : set.samples) samples.push_back(hyper_to_json(hyper));
  return nlohmann::json{{"samples", samples},
                        {"burn_in", set.burn_in},
                        {"thinning", set.thinning},
                        {"seed", set.seed}};
}

HyperSampleSet sample_set_from_json(const nlohmann::json& doc) {
  HyperSampleSet set;
  for (const auto& entry : doc.at("samples")) {
    set.samples.push_back(hyper_from_json(entry));
  }
  set.burn_in = doc.at("burn_in").get<int>();
  set.thinning = doc.at("thinning").get<int>();
  set.seed = doc.at("seed").get<std::uint64_t>();
  return set;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

}  // namespace

nlohmann::json Optimizer::save_state() const {
  nlohmann::json completed = nlohmann::json::array();
  for (const auto& obs : completed_) {
    nlohmann::json entry{{"x", to_std(obs.location)},
                         {"y", obs.value},
                         {"failure", obs.from_failure}};
    if (obs.duration_seconds) {
      entry["duration_s"] = *obs.duration_seconds;
    } else {
      entry["duration_s"] = nullptr;
    }
    completed.push_back(entry);
  }

  nlohmann::json pending = nlohmann::json::array();
  for (int i = 0; i < pending_.count(); ++i) {
    pending.push_back(nlohmann::json{
        {"x_unit", to_std(pending_.locations.row(i))},
        {"issued_iter", pending_.issued_iterations[i]}});
  }

  std::ostringstream rng_stream;
  rng_stream << rng_;

  nlohmann::json doc{{"version", kStateVersion},
                     {"space", space_.to_json()},
                     {"strategy", config_.to_json()},
                     {"completed", completed},
                     {"pending", pending},
                     {"rng", rng_stream.str()},
                     {"iteration", iteration_},
                     {"initial_cursor", initial_cursor_},
                     {"target_center", target_center_},
                     {"target_scale", target_scale_}};
  if (grid_native_) {
    nlohmann::json grid = nlohmann::json::array();
    for (int i = 0; i < grid_native_->rows(); ++i) {
      grid.push_back(to_std(grid_native_->row(i)));
    }
    doc["grid"] = grid;
  } else {
    doc["grid"] = nullptr;
  }
  doc["hyper_samples"] =
      hyper_samples_ ? sample_set_to_json(*hyper_samples_) : nlohmann::json();
  doc["duration_hyper_samples"] = duration_hyper_samples_
                                      ? sample_set_to_json(*duration_hyper_samples_)
                                      : nlohmann::json();
  return doc;
}

Optimizer Optimizer::load_state(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("version")) {
    throw StateFormatError("state: missing version field");
  }
  const int version = doc.at("version").get<int>();
  if (version != kStateVersion) {
    throw StateFormatError("state: unsupported version " +
                           std::to_string(version) + " (expected " +
                           std::to_string(kStateVersion) + ")");
  }
  try {
    ParameterSpace space = ParameterSpace::from_json(doc.at("space"));
    StrategyConfig config = StrategyConfig::from_json(doc.at("strategy"));

    std::optional<Eigen::MatrixXd> grid;
    if (doc.contains("grid") && !doc.at("grid").is_null()) {
      const auto& rows = doc.at("grid");
      Eigen::MatrixXd points(rows.size(), space.dim());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        points.row(static_cast<int>(i)) =
            to_eigen(rows[i].get<std::vector<double>>());
      }
      grid = std::move(points);
    }

    Optimizer optimizer(std::move(space), std::move(config), std::move(grid));

    for (const auto& entry : doc.at("completed")) {
      Observation obs;
      obs.location = to_eigen(entry.at("x").get<std::vector<double>>());
      obs.value = entry.at("y").get<double>();
      if (entry.contains("duration_s") && !entry.at("duration_s").is_null()) {
        obs.duration_seconds = entry.at("duration_s").get<double>();
      }
      obs.from_failure = entry.at("failure").get<bool>();
      optimizer.completed_.push_back(std::move(obs));
    }
    for (const auto& entry : doc.at("pending")) {
      optimizer.pending_.add(
          to_eigen(entry.at("x_unit").get<std::vector<double>>()),
          entry.at("issued_iter").get<long>());
    }

    std::istringstream rng_stream(doc.at("rng").get<std::string>());
    rng_stream >> optimizer.rng_;
    if (rng_stream.fail()) {
      throw StateFormatError("state: bad rng field");
    }
    optimizer.iteration_ = doc.at("iteration").get<long>();
    optimizer.initial_cursor_ = doc.at("initial_cursor").get<std::uint64_t>();
    optimizer.target_center_ = doc.at("target_center").get<double>();
    optimizer.target_scale_ = doc.at("target_scale").get<double>();
    if (doc.contains("hyper_samples") && !doc.at("hyper_samples").is_null()) {
      optimizer.hyper_samples_ = sample_set_from_json(doc.at("hyper_samples"));
    }
    if (doc.contains("duration_hyper_samples") &&
        !doc.at("duration_hyper_samples").is_null()) {
      optimizer.duration_hyper_samples_ =
          sample_set_from_json(doc.at("duration_hyper_samples"));
    }
    return optimizer;
  } catch (const nlohmann::json::exception& e) {
    throw StateFormatError(std::string("state: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw StateFormatError(std::string("state: ") + e.what());
  }
}

}  // namespace bopt
