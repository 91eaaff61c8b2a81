// Command-line front end: benchmark runs, external-objective tuning, and
// manual suggest/observe orchestration over a persisted state file.
//
// Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or config
// error.

#include <sys/file.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bopt/controller.hpp"
#include "bopt/errors.hpp"
#include "bopt/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Shared helpers

bopt::StrategyConfig strategy_from_name(const std::string& name) {
  bopt::StrategyConfig config;
  if (name == "ei-mcmc") {
    config.treatment = bopt::SurrogateTreatment::Mcmc;
  } else if (name == "ei-opt") {
    config.treatment = bopt::SurrogateTreatment::PointEstimate;
  } else if (name == "ei-per-second") {
    config.treatment = bopt::SurrogateTreatment::Mcmc;
    config.cost_aware = true;
  } else {
    throw UsageError("unknown strategy: " + name);
  }
  config.acquisition.type = bopt::AcquisitionType::ExpectedImprovement;
  return config;
}

std::string format_double(double value) {
  std::ostringstream out;
  out << std::setprecision(17) << value;
  return out.str();
}

json point_to_json(const bopt::ParameterSpace& space,
                   const Eigen::VectorXd& native) {
  json doc = json::object();
  for (int d = 0; d < space.dim(); ++d) {
    doc[space.dimension(d).name] = native[d];
  }
  return doc;
}

Eigen::VectorXd point_from_json(const bopt::ParameterSpace& space,
                                const json& doc) {
  Eigen::VectorXd native(space.dim());
  if (doc.is_array()) {
    if (static_cast<int>(doc.size()) != space.dim()) {
      throw UsageError("point: expected " + std::to_string(space.dim()) +
                       " coordinates");
    }
    for (int d = 0; d < space.dim(); ++d) native[d] = doc[d].get<double>();
    return native;
  }
  if (doc.is_object()) {
    for (int d = 0; d < space.dim(); ++d) {
      const auto& name = space.dimension(d).name;
      if (!doc.contains(name)) {
        throw UsageError("point: missing parameter '" + name + "'");
      }
      native[d] = doc.at(name).get<double>();
    }
    return native;
  }
  throw UsageError("point: expected a JSON array or object");
}

Eigen::MatrixXd grid_from_file(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw UsageError("grid: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw UsageError(std::string("grid: parse error: ") + e.what());
  }
  if (!doc.is_array() || doc.empty()) {
    throw UsageError("grid: expected a non-empty JSON array of points");
  }
  Eigen::MatrixXd points(static_cast<int>(doc.size()), dim);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto row = doc[i].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != dim) {
      throw UsageError("grid: point " + std::to_string(i) + " has " +
                       std::to_string(row.size()) + " coordinates, expected " +
                       std::to_string(dim));
    }
    for (int d = 0; d < dim; ++d) points(static_cast<int>(i), d) = row[d];
  }
  return points;
}

// Exclusive advisory lock on <path>.lock, held for the life of the object.
class FileLock {
 public:
  explicit FileLock(const std::string& path) : path_(path + ".lock") {
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
      throw std::runtime_error("could not lock " + path_);
    }
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    json doc;
    in >> doc;
    return doc;
  } catch (const json::exception& e) {
    throw bopt::StateFormatError(path + ": " + e.what());
  }
}

void save_json_file(const std::string& path, const json& doc) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << doc.dump(2) << "\n";
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string function;
  std::string strategy = "ei-mcmc";
  std::string kernel = "matern52";
  long evals = 50;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
  int parallel = 1;
  std::string grid_file;
  int init_design = 2;
  int mcmc_samples = 10;
  int fantasies = 10;
};

int cmd_bench(const BenchArgs& args) {
  const bopt::BenchmarkSpec* benchmark = bopt::find_benchmark(args.function);
  if (benchmark == nullptr) {
    std::string known;
    for (const auto& b : bopt::builtin_benchmarks()) known += " " + b.name;
    throw UsageError("unknown benchmark '" + args.function + "'; known:" +
                     known);
  }

  bopt::StrategyConfig config = strategy_from_name(args.strategy);
  config.kernel = bopt::kernel_kind_from_string(args.kernel);
  config.initial_design_count = args.init_design;
  config.mcmc_samples = args.mcmc_samples;
  config.fantasy_count = args.fantasies;

  std::optional<Eigen::MatrixXd> grid;
  if (!args.grid_file.empty()) {
    grid = grid_from_file(args.grid_file, benchmark->space.dim());
  }

  fs::create_directories(args.out_dir);
  bopt::Horizon horizon;
  horizon.max_evaluations = args.evals;

  std::vector<std::vector<bopt::TrialRecord>> traces;
  traces.reserve(args.repeats);
  for (int repeat = 0; repeat < args.repeats; ++repeat) {
    config.seed = args.seed + static_cast<std::uint64_t>(repeat);
    auto records = bopt::run_parallel_simulation(*benchmark, config,
                                                 args.parallel, horizon, grid);
    std::ostringstream name;
    name << "trace_" << std::setw(3) << std::setfill('0') << repeat << ".jsonl";
    std::ofstream out(fs::path(args.out_dir) / name.str());
    if (!out) throw std::runtime_error("cannot write trace file");
    bopt::write_trace(out, records);
    traces.push_back(std::move(records));
  }

  // Per-iteration summary across repeats.
  const fs::path summary_path = fs::path(args.out_dir) / "summary.csv";
  std::ofstream summary(summary_path);
  if (!summary) throw std::runtime_error("cannot write summary.csv");
  summary << "iter,mean_best,stderr_best,mean_wall_s\n";
  for (long iter = 1; iter <= args.evals; ++iter) {
    std::vector<double> bests;
    std::vector<double> walls;
    for (const auto& trace : traces) {
      if (static_cast<long>(trace.size()) >= iter) {
        bests.push_back(trace[iter - 1].best_y);
        walls.push_back(trace[iter - 1].wall_s);
      }
    }
    if (bests.empty()) break;
    double mean = 0.0;
    for (const double b : bests) mean += b;
    mean /= static_cast<double>(bests.size());
    double variance = 0.0;
    for (const double b : bests) variance += (b - mean) * (b - mean);
    const double stderr_best =
        bests.size() > 1
            ? std::sqrt(variance / (static_cast<double>(bests.size()) - 1.0) /
                        static_cast<double>(bests.size()))
            : 0.0;
    double mean_wall = 0.0;
    for (const double w : walls) mean_wall += w;
    mean_wall /= static_cast<double>(walls.size());
    summary << iter << "," << format_double(mean) << ","
            << format_double(stderr_best) << "," << format_double(mean_wall)
            << "\n";
  }

  double final_mean = 0.0;
  for (const auto& trace : traces) final_mean += trace.back().best_y;
  final_mean /= static_cast<double>(traces.size());
  std::cout << "wrote " << traces.size() << " trace(s) and summary.csv to "
            << args.out_dir << "; mean final best " << final_mean << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunConfig {
  bopt::StrategyConfig strategy;
  std::optional<std::string> command;
  double timeout_seconds = 0.0;
  std::optional<std::string> builtin;
  long budget = 0;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string output = "trace.jsonl";
  int parallel = 1;
  std::optional<Eigen::MatrixXd> grid;
};

RunConfig parse_run_config(const json& doc, bopt::ParameterSpace& space_out) {
  if (!doc.is_object()) throw UsageError("config: expected a JSON object");
  if (!doc.contains("space")) {
    throw UsageError("config: missing required field 'space'");
  }
  try {
    space_out = bopt::ParameterSpace::from_json(doc.at("space"));
  } catch (const bopt::StateFormatError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }

  RunConfig run;
  if (doc.contains("strategy")) {
    const auto& strategy = doc.at("strategy");
    if (!strategy.is_object()) {
      throw UsageError("config: 'strategy' must be an object");
    }
    run.strategy = strategy_from_name(
        strategy.value("name", std::string("ei-mcmc")));
    if (strategy.contains("kernel")) {
      run.strategy.kernel = bopt::kernel_kind_from_string(
          strategy.at("kernel").get<std::string>());
    }
    if (strategy.contains("acquisition")) {
      run.strategy.acquisition.type = bopt::acquisition_type_from_string(
          strategy.at("acquisition").get<std::string>());
    }
    if (strategy.contains("kappa")) {
      run.strategy.acquisition.kappa = strategy.at("kappa").get<double>();
    }
    run.strategy.mcmc_samples =
        strategy.value("mcmc_samples", run.strategy.mcmc_samples);
    run.strategy.mcmc_burn_in =
        strategy.value("mcmc_burn_in", run.strategy.mcmc_burn_in);
    run.strategy.fantasy_count =
        strategy.value("fantasy_count", run.strategy.fantasy_count);
    run.strategy.initial_design_count = strategy.value(
        "initial_design", run.strategy.initial_design_count);
    run.parallel = strategy.value("parallel", 1);
  }
  if (run.parallel < 1) throw UsageError("config: strategy.parallel must be >= 1");

  if (!doc.contains("objective") || !doc.at("objective").is_object()) {
    throw UsageError("config: missing required object field 'objective'");
  }
  const auto& objective = doc.at("objective");
  if (objective.contains("command")) {
    run.command = objective.at("command").get<std::string>();
    run.timeout_seconds = objective.value("timeout_s", 0.0);
  } else if (objective.contains("builtin")) {
    run.builtin = objective.at("builtin").get<std::string>();
  } else {
    throw UsageError("config: objective needs either 'command' or 'builtin'");
  }

  if (!doc.contains("budget")) {
    throw UsageError("config: missing required field 'budget'");
  }
  run.budget = doc.at("budget").get<long>();
  if (run.budget < 1) throw UsageError("config: budget must be >= 1");
  run.repeats = doc.value("repeats", 1);
  if (run.repeats < 1) throw UsageError("config: repeats must be >= 1");
  run.seed = doc.value("seed", 0);
  run.output = doc.value("output", std::string("trace.jsonl"));

  if (doc.contains("grid")) {
    const auto& rows = doc.at("grid");
    if (!rows.is_array() || rows.empty()) {
      throw UsageError("config: grid must be a non-empty array of points");
    }
    Eigen::MatrixXd points(rows.size(), space_out.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = rows[i].get<std::vector<double>>();
      if (static_cast<int>(row.size()) != space_out.dim()) {
        throw UsageError("config: grid point " + std::to_string(i) +
                         " has the wrong dimension");
      }
      for (int d = 0; d < space_out.dim(); ++d) {
        points(static_cast<int>(i), d) = row[d];
      }
    }
    run.grid = std::move(points);
  }
  return run;
}

constexpr int kMaxConsecutiveFailures = 5;

std::vector<bopt::TrialRecord> tune_external(const bopt::ParameterSpace& space,
                                             const RunConfig& run,
                                             std::uint64_t seed,
                                             std::ostream& trace_out) {
  bopt::StrategyConfig config = run.strategy;
  config.seed = seed;
  config.parallel_degree = run.parallel;
  bopt::Optimizer optimizer(space, config, run.grid);

  struct InFlight {
    Eigen::VectorXd x;
    std::future<bopt::ExternalResult> result;
  };
  std::vector<InFlight> window;
  std::vector<bopt::TrialRecord> records;
  long issued = 0;
  int consecutive_failures = 0;
  bool exhausted = false;
  double wall = 0.0;

  while (true) {
    while (!exhausted && static_cast<int>(window.size()) < run.parallel &&
           issued < run.budget) {
      Eigen::VectorXd x;
      try {
        x = optimizer.suggest();
      } catch (const bopt::GridExhaustedError&) {
        exhausted = true;
        break;
      }
      ++issued;
      std::vector<std::pair<std::string, double>> params;
      for (int d = 0; d < space.dim(); ++d) {
        params.emplace_back(space.dimension(d).name, x[d]);
      }
      const std::string command = *run.command;
      const double timeout = run.timeout_seconds;
      window.push_back(
          {x, std::async(std::launch::async, [command, params, timeout] {
             return bopt::run_external(command, params, timeout);
           })});
    }
    if (window.empty()) break;

    // Collect in issue order: evaluations still overlap, results fold in
    // deterministically.
    InFlight job = std::move(window.front());
    window.erase(window.begin());
    const bopt::ExternalResult result = job.result.get();
    const double duration =
        result.duration_seconds.value_or(result.wallclock_seconds);
    wall += result.wallclock_seconds;

    bopt::TrialRecord record;
    record.iter = static_cast<long>(records.size()) + 1;
    record.x = job.x;
    record.duration_s = duration;
    record.wall_s = wall;
    if (result.ok) {
      optimizer.observe(job.x, result.value, duration);
      consecutive_failures = 0;
      record.y = result.value;
    } else {
      std::cerr << "evaluation failed: " << result.error << "\n";
      optimizer.observe_failure(job.x);
      record.y = optimizer.completed().back().value;  // encoded failure value
      if (++consecutive_failures >= kMaxConsecutiveFailures) {
        throw std::runtime_error(
            "aborting after " + std::to_string(kMaxConsecutiveFailures) +
            " consecutive evaluation failures (last: " + result.error + ")");
      }
    }
    record.best_y = optimizer.best().second;
    records.push_back(record);
    bopt::write_trace(trace_out, {records.back()});
    trace_out.flush();
  }
  return records;
}

int cmd_run(const std::string& config_path) {
  const json doc = load_json_file(config_path);
  bopt::ParameterSpace space({{"placeholder", 0.0, 1.0, bopt::ScaleKind::Linear,
                               {}}});
  const RunConfig run = parse_run_config(doc, space);

  json best_report = json::array();
  for (int repeat = 0; repeat < run.repeats; ++repeat) {
    const std::uint64_t seed = run.seed + static_cast<std::uint64_t>(repeat);
    std::string output = run.output;
    if (run.repeats > 1) {
      std::ostringstream suffixed;
      suffixed << output << "." << std::setw(3) << std::setfill('0') << repeat;
      output = suffixed.str();
    }

    std::vector<bopt::TrialRecord> records;
    if (run.builtin) {
      const bopt::BenchmarkSpec* benchmark = bopt::find_benchmark(*run.builtin);
      if (benchmark == nullptr) {
        throw UsageError("config: unknown builtin objective '" + *run.builtin +
                         "'");
      }
      bopt::StrategyConfig config = run.strategy;
      config.seed = seed;
      bopt::Horizon horizon;
      horizon.max_evaluations = run.budget;
      records = bopt::run_parallel_simulation(*benchmark, config, run.parallel,
                                              horizon, run.grid);
      std::ofstream out(output);
      if (!out) throw std::runtime_error("cannot write " + output);
      bopt::write_trace(out, records);
    } else {
      std::ofstream out(output);
      if (!out) throw std::runtime_error("cannot write " + output);
      records = tune_external(space, run, seed, out);
    }
    if (records.empty()) {
      throw std::runtime_error("no evaluations completed");
    }

    double best = records.front().y;
    Eigen::VectorXd best_x = records.front().x;
    for (const auto& record : records) {
      if (record.y < best) {
        best = record.y;
        best_x = record.x;
      }
    }
    json entry{{"seed", seed},
               {"best_value", best},
               {"best_point", point_to_json(space, best_x)},
               {"trace", output}};
    best_report.push_back(entry);
    std::cout << entry.dump() << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// suggest / observe

struct InitArgs {
  std::string space_file;
  std::string strategy = "ei-mcmc";
  std::string kernel = "matern52";
  std::uint64_t seed = 0;
  int parallel = 1;
  int init_design = 2;
  int mcmc_samples = 10;
  int fantasies = 10;
  std::string grid_file;
};

int cmd_suggest(const std::string& state_path, const InitArgs& init,
                bool do_init) {
  FileLock lock(state_path);
  bopt::Optimizer optimizer = [&] {
    if (do_init) {
      if (fs::exists(state_path)) {
        throw UsageError("state file already exists: " + state_path +
                         " (refusing to overwrite with --init)");
      }
      const json space_doc = load_json_file(init.space_file);
      bopt::ParameterSpace space = bopt::ParameterSpace::from_json(
          space_doc.contains("space") ? space_doc.at("space") : space_doc);
      bopt::StrategyConfig config = strategy_from_name(init.strategy);
      config.kernel = bopt::kernel_kind_from_string(init.kernel);
      config.seed = init.seed;
      config.parallel_degree = init.parallel;
      config.initial_design_count = init.init_design;
      config.mcmc_samples = init.mcmc_samples;
      config.fantasy_count = init.fantasies;
      std::optional<Eigen::MatrixXd> grid;
      if (!init.grid_file.empty()) {
        grid = grid_from_file(init.grid_file, space.dim());
      }
      return bopt::Optimizer(space, config, grid);
    }
    if (!fs::exists(state_path)) {
      throw UsageError("state file not found: " + state_path +
                       " (use --init <space.json> to create one)");
    }
    return bopt::Optimizer::load_state(load_json_file(state_path));
  }();

  const Eigen::VectorXd point = optimizer.suggest();
  save_json_file(state_path, optimizer.save_state());
  std::cout << point_to_json(optimizer.space(), point).dump() << "\n";
  return 0;
}

int cmd_observe(const std::string& state_path, const std::string& point_text,
                double value, std::optional<double> duration, bool failed,
                bool force) {
  FileLock lock(state_path);
  if (!fs::exists(state_path)) {
    throw UsageError("state file not found: " + state_path);
  }
  bopt::Optimizer optimizer =
      bopt::Optimizer::load_state(load_json_file(state_path));

  json point_doc;
  try {
    point_doc = json::parse(point_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("point: parse error: ") + e.what());
  }
  const Eigen::VectorXd native = point_from_json(optimizer.space(), point_doc);
  if (failed) {
    optimizer.observe_failure(native, force);
  } else {
    optimizer.observe(native, value, duration, force);
  }
  save_json_file(state_path, optimizer.save_state());
  std::cout << "recorded; completed=" << optimizer.completed().size()
            << " pending=" << optimizer.pending().count() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization of expensive black-box functions"};
  app.require_subcommand(1);

  // bench ------------------------------------------------------------------
  BenchArgs bench;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Run a built-in benchmark objective");
  bench_cmd->add_option("--function", bench.function, "Benchmark name")
      ->required();
  bench_cmd
      ->add_option("--strategy", bench.strategy,
                   "ei-mcmc | ei-opt | ei-per-second")
      ->check(CLI::IsMember({"ei-mcmc", "ei-opt", "ei-per-second"}));
  bench_cmd->add_option("--kernel", bench.kernel, "matern52 | se")
      ->check(CLI::IsMember({"matern52", "se"}));
  bench_cmd->add_option("--evals", bench.evals, "Evaluation budget per repeat")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench.repeats, "Independent repeats")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Base seed (repeat r adds r)");
  bench_cmd->add_option("--out", bench.out_dir, "Output directory")->required();
  bench_cmd->add_option("--parallel", bench.parallel, "Simulated parallelism")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--grid", bench.grid_file,
                        "JSON array of native points restricting the search");
  bench_cmd->add_option("--init-design", bench.init_design,
                        "Initial design size")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--mcmc-samples", bench.mcmc_samples,
                        "Hyperparameter samples per refresh")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--fantasies", bench.fantasies,
                        "Fantasy draws per pending evaluation")
      ->check(CLI::PositiveNumber);

  // run ---------------------------------------------------------------------
  std::string config_path;
  CLI::App* run_cmd =
      app.add_subcommand("run", "Tune an external objective from a config");
  run_cmd->add_option("--config", config_path, "JSON run configuration")
      ->required();

  // suggest -----------------------------------------------------------------
  std::string state_path;
  InitArgs init;
  bool do_init = false;
  CLI::App* suggest_cmd =
      app.add_subcommand("suggest", "Print the next point to evaluate");
  suggest_cmd->add_option("--state", state_path, "State file")->required();
  CLI::Option* init_opt = suggest_cmd->add_option(
      "--init", init.space_file, "Create the state from this space JSON");
  suggest_cmd
      ->add_option("--strategy", init.strategy,
                   "ei-mcmc | ei-opt | ei-per-second (with --init)")
      ->check(CLI::IsMember({"ei-mcmc", "ei-opt", "ei-per-second"}))
      ->needs(init_opt);
  suggest_cmd->add_option("--kernel", init.kernel, "matern52 | se")
      ->check(CLI::IsMember({"matern52", "se"}))
      ->needs(init_opt);
  suggest_cmd->add_option("--seed", init.seed, "Seed (with --init)")
      ->needs(init_opt);
  suggest_cmd
      ->add_option("--parallel", init.parallel,
                   "Pending-evaluation cap (with --init)")
      ->check(CLI::PositiveNumber)
      ->needs(init_opt);
  suggest_cmd
      ->add_option("--init-design", init.init_design,
                   "Initial design size (with --init)")
      ->check(CLI::PositiveNumber)
      ->needs(init_opt);
  suggest_cmd
      ->add_option("--mcmc-samples", init.mcmc_samples,
                   "Hyperparameter samples per refresh (with --init)")
      ->check(CLI::PositiveNumber)
      ->needs(init_opt);
  suggest_cmd
      ->add_option("--fantasies", init.fantasies,
                   "Fantasy draws per pending evaluation (with --init)")
      ->check(CLI::PositiveNumber)
      ->needs(init_opt);
  suggest_cmd
      ->add_option("--grid", init.grid_file,
                   "JSON array of native points (with --init)")
      ->needs(init_opt);

  // observe -----------------------------------------------------------------
  std::string observe_state;
  std::string point_text;
  double value = 0.0;
  double duration = 0.0;
  bool force = false;
  bool failed = false;
  CLI::App* observe_cmd =
      app.add_subcommand("observe", "Fold an evaluation result into the state");
  observe_cmd->add_option("--state", observe_state, "State file")->required();
  observe_cmd
      ->add_option("--point", point_text,
                   "Evaluated point (JSON object or array)")
      ->required();
  CLI::Option* value_opt =
      observe_cmd->add_option("--value", value, "Objective value");
  CLI::Option* duration_opt = observe_cmd->add_option(
      "--duration", duration, "Evaluation duration in seconds");
  observe_cmd->add_flag("--force", force,
                        "Accept a point that was never suggested");
  observe_cmd->add_flag("--failed", failed,
                        "Record an evaluation failure for this point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (bench_cmd->parsed()) return cmd_bench(bench);
    if (run_cmd->parsed()) return cmd_run(config_path);
    if (suggest_cmd->parsed()) {
      do_init = init_opt->count() > 0;
      return cmd_suggest(state_path, init, do_init);
    }
    if (observe_cmd->parsed()) {
      if (!failed && value_opt->count() == 0) {
        throw UsageError("observe: --value is required unless --failed is set");
      }
      std::optional<double> maybe_duration;
      if (duration_opt->count() > 0) maybe_duration = duration;
      return cmd_observe(observe_state, point_text, value, maybe_duration,
                         failed, force);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bopt::StateFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
