#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bopt/controller.hpp"
#include "bopt/space.hpp"

namespace bopt {

// A built-in objective: value function plus a synthetic per-point duration
// used by the simulated clock.
struct BenchmarkSpec {
  std::string name;
  ParameterSpace space;
  std::optional<double> true_minimum;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<double(const Eigen::VectorXd&)> duration;  // seconds
};

// Standard two-dimensional test function over the box
// 0 <= x1 <= 15, -5 <= x2 <= 15; throws outside it.
double branin(double x1, double x2);

// Bimodal objective on [0,1]^2 with two equal-depth minima; the synthetic
// duration rises smoothly from 1 s at the cheap minimum to 10 s at the
// expensive one. Returns (value, duration_seconds).
std::pair<double, double> synthetic_cost_objective(const Eigen::VectorXd& x);

const std::vector<BenchmarkSpec>& builtin_benchmarks();
const BenchmarkSpec* find_benchmark(const std::string& name);

struct TrialRecord {
  long iter = 0;           // completion order, 1-based
  Eigen::VectorXd x;       // native units
  double y = 0.0;
  double duration_s = 0.0;
  double best_y = 0.0;     // cumulative minimum
  double wall_s = 0.0;     // simulated or measured wallclock
};

// JSON-lines trace format: one record per line with fields
// {iter, x, y, duration_s, best_y, wall_s}.
void write_trace(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_trace(std::istream& in);

struct ExternalResult {
  bool ok = false;
  double value = 0.0;
  std::optional<double> duration_seconds;  // reported by the command
  double wallclock_seconds = 0.0;          // measured by the harness
  std::string raw_log;                     // captured standard output
  std::string error;                       // failure diagnostic
};

// Runs `command` through the shell, writing one JSON line
//   {"params": {"<name>": <number>, ...}}
// to its stdin and expecting one JSON line
//   {"value": <number>, "duration_seconds": <number, optional>}
// on its stdout (last non-empty line wins). Nonzero exit, timeout, or
// malformed output produce ok=false. timeout_seconds <= 0 disables the
// deadline. The child is always reaped.
ExternalResult run_external(
    const std::string& command,
    const std::vector<std::pair<std::string, double>>& params,
    double timeout_seconds);

struct Horizon {
  std::optional<long> max_evaluations;
  std::optional<double> max_seconds;  // simulated clock limit for new issues
};

// Event-driven simulation: up to parallel_degree evaluations in flight; when
// one finishes it is observed and a replacement is suggested under the
// current pending set. Durations come from the benchmark, the clock is
// simulated, and runs are deterministic given the strategy seed.
std::vector<TrialRecord> run_parallel_simulation(
    const BenchmarkSpec& benchmark, const StrategyConfig& strategy,
    int parallel_degree, const Horizon& horizon,
    const std::optional<Eigen::MatrixXd>& grid_native = {});

}  // namespace bopt
