#include "bopt/harness.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "bopt/errors.hpp"

namespace bopt {

double branin(double x1, double x2) {
  if (!(x1 >= 0.0 && x1 <= 15.0 && x2 >= -5.0 && x2 <= 15.0)) {
    throw std::invalid_argument("branin: point outside the benchmark box");
  }
  constexpr double pi = std::numbers::pi;
  const double b = 5.1 / (4.0 * pi * pi);
  const double c = 5.0 / pi;
  const double s = 10.0;
  const double t = 1.0 / (8.0 * pi);
  const double inner = x2 - b * x1 * x1 + c * x1 - 6.0;
  return inner * inner + s * (1.0 - t) * std::cos(x1) + s;
}

std::pair<double, double> synthetic_cost_objective(const Eigen::VectorXd& x) {
  if (x.size() != 2) {
    throw std::invalid_argument("synthetic_cost_objective: expects 2 dims");
  }
  static const Eigen::Vector2d cheap(0.25, 0.25);
  static const Eigen::Vector2d costly(0.75, 0.75);
  const double value =
      std::min((x - cheap).squaredNorm(), (x - costly).squaredNorm());
  // ln(duration) is linear in x1 + x2: 1 s at the cheap minimum, 10 s at the
  // expensive one.
  const double duration = std::pow(10.0, x[0] + x[1] - 0.5);
  return {value, duration};
}

namespace {

// Piecewise-linear comb: kinked valleys of different depths, global minimum
// at 0.40. Deliberately not differentiable.
double zigzag(double x) {
  static const double centers[] = {0.15, 0.40, 0.65, 0.90};
  static const double depths[] = {0.25, 0.00, 0.12, 0.30};
  constexpr double slope = 3.0;
  double value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 4; ++k) {
    value = std::min(value, depths[k] + slope * std::abs(x - centers[k]));
  }
  return value;
}

std::vector<BenchmarkSpec> make_benchmarks() {
  std::vector<BenchmarkSpec> benchmarks;

  benchmarks.push_back(BenchmarkSpec{
      "branin",
      ParameterSpace({{"x1", 0.0, 15.0, ScaleKind::Linear, {}},
                      {"x2", -5.0, 15.0, ScaleKind::Linear, {}}}),
      0.397887,
      [](const Eigen::VectorXd& x) { return branin(x[0], x[1]); },
      [](const Eigen::VectorXd&) { return 1.0; }});

  benchmarks.push_back(BenchmarkSpec{
      "synthetic-cost",
      ParameterSpace({{"x1", 0.0, 1.0, ScaleKind::Linear, {}},
                      {"x2", 0.0, 1.0, ScaleKind::Linear, {}}}),
      0.0,
      [](const Eigen::VectorXd& x) { return synthetic_cost_objective(x).first; },
      [](const Eigen::VectorXd& x) {
        return synthetic_cost_objective(x).second;
      }});

  benchmarks.push_back(BenchmarkSpec{
      "zigzag",
      ParameterSpace({{"x", 0.0, 1.0, ScaleKind::Linear, {}}}),
      0.0,
      [](const Eigen::VectorXd& x) { return zigzag(x[0]); },
      [](const Eigen::VectorXd&) { return 1.0; }});

  return benchmarks;
}

}  // namespace

const std::vector<BenchmarkSpec>& builtin_benchmarks() {
  static const std::vector<BenchmarkSpec> benchmarks = make_benchmarks();
  return benchmarks;
}

const BenchmarkSpec* find_benchmark(const std::string& name) {
  for (const auto& benchmark : builtin_benchmarks()) {
    if (benchmark.name == name) return &benchmark;
  }
  return nullptr;
}

void write_trace(std::ostream& out, const std::vector<TrialRecord>& records) {
  for (const auto& record : records) {
    nlohmann::json line{
        {"iter", record.iter},
        {"x", std::vector<double>(record.x.data(),
                                  record.x.data() + record.x.size())},
        {"y", record.y},
        {"duration_s", record.duration_s},
        {"best_y", record.best_y},
        {"wall_s", record.wall_s}};
    out << line.dump() << "\n";
  }
}

std::vector<TrialRecord> read_trace(std::istream& in) {
  std::vector<TrialRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
      TrialRecord record;
      record.iter = doc.at("iter").get<long>();
      const auto x = doc.at("x").get<std::vector<double>>();
      record.x = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
      record.y = doc.at("y").get<double>();
      record.duration_s = doc.at("duration_s").get<double>();
      record.best_y = doc.at("best_y").get<double>();
      record.wall_s = doc.at("wall_s").get<double>();
      records.push_back(std::move(record));
    } catch (const nlohmann::json::exception& e) {
      throw StateFormatError(std::string("trace: bad record line: ") + e.what());
    }
  }
  return records;
}

namespace {

void close_quietly(int fd) {
  if (fd >= 0) ::close(fd);
}

}  // namespace

ExternalResult run_external(
    const std::string& command,
    const std::vector<std::pair<std::string, double>>& params,
    double timeout_seconds) {
  // A dead child must not kill the harness when we write to its stdin.
  static const bool sigpipe_ignored = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;

  ExternalResult result;
  nlohmann::json params_doc = nlohmann::json::object();
  for (const auto& [name, value] : params) params_doc[name] = value;
  const std::string request =
      nlohmann::json{{"params", params_doc}}.dump() + "\n";

  int to_child[2] = {-1, -1};
  int from_child[2] = {-1, -1};
  if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
    close_quietly(to_child[0]);
    close_quietly(to_child[1]);
    result.error = "pipe() failed";
    return result;
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };

  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
      close_quietly(fd);
    }
    result.error = "fork() failed";
    return result;
  }
  if (pid == 0) {
    ::setpgid(0, 0);  // own process group, so a timeout can kill grandchildren
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
      ::close(fd);
    }
    ::execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
    _exit(127);
  }
  ::setpgid(pid, pid);  // match the child's setpgid regardless of who ran first

  close_quietly(to_child[0]);
  close_quietly(from_child[1]);

  // Write the request; EPIPE just means the command never read its stdin.
  std::size_t written = 0;
  while (written < request.size()) {
    const ssize_t n = ::write(to_child[1], request.data() + written,
                              request.size() - written);
    if (n <= 0) break;
    written += static_cast<std::size_t>(n);
  }
  close_quietly(to_child[1]);

  std::string output;
  bool timed_out = false;
  char buffer[4096];
  for (;;) {
    int wait_ms = -1;
    if (timeout_seconds > 0.0) {
      const double remaining = timeout_seconds - elapsed();
      if (remaining <= 0.0) {
        timed_out = true;
        break;
      }
      wait_ms = static_cast<int>(remaining * 1000.0) + 1;
    }
    struct pollfd pfd {
      from_child[0], POLLIN, 0
    };
    const int rc = ::poll(&pfd, 1, wait_ms);
    if (rc == 0) {
      timed_out = true;
      break;
    }
    if (rc < 0) {
      if (errno == EINTR) continue;
      result.error = "poll() failed";
      break;
    }
    const ssize_t n = ::read(from_child[0], buffer, sizeof(buffer));
    if (n > 0) {
      output.append(buffer, static_cast<std::size_t>(n));
    } else {
      break;  // EOF
    }
  }
  close_quietly(from_child[0]);

  if (timed_out && ::kill(-pid, SIGKILL) != 0) ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);

  result.wallclock_seconds = elapsed();
  result.raw_log = output;
  if (timed_out) {
    result.error = "timeout after " + std::to_string(timeout_seconds) + " s";
    return result;
  }
  if (!result.error.empty()) return result;
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    result.error =
        WIFEXITED(status)
            ? "command exited with status " + std::to_string(WEXITSTATUS(status))
            : "command terminated by signal";
    return result;
  }

  // Last non-empty line of stdout carries the response.
  std::string last_line;
  {
    std::istringstream stream(output);
    std::string line;
    while (std::getline(stream, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        last_line = line;
      }
    }
  }
  if (last_line.empty()) {
    result.error = "command produced no output";
    return result;
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(last_line);
    result.value = doc.at("value").get<double>();
    if (doc.contains("duration_seconds") &&
        !doc.at("duration_seconds").is_null()) {
      result.duration_seconds = doc.at("duration_seconds").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    result.error = std::string("malformed output line: ") + e.what();
    return result;
  }
  if (!std::isfinite(result.value)) {
    result.error = "command reported a non-finite value";
    return result;
  }
  if (result.duration_seconds && !(*result.duration_seconds > 0.0)) {
    result.error = "command reported a non-positive duration";
    return result;
  }
  result.ok = true;
  return result;
}

std::vector<TrialRecord> run_parallel_simulation(
    const BenchmarkSpec& benchmark, const StrategyConfig& strategy,
    int parallel_degree, const Horizon& horizon,
    const std::optional<Eigen::MatrixXd>& grid_native) {
  if (parallel_degree < 1) {
    throw std::invalid_argument("run_parallel_simulation: degree must be >= 1");
  }
  if (!horizon.max_evaluations && !horizon.max_seconds) {
    throw std::invalid_argument("run_parallel_simulation: empty horizon");
  }

  StrategyConfig config = strategy;
  config.parallel_degree = parallel_degree;
  Optimizer optimizer(benchmark.space, config, grid_native);

  struct InFlight {
    double finish = 0.0;
    long issue_index = 0;
    Eigen::VectorXd x;
    double value = 0.0;
    double duration = 0.0;
  };
  std::vector<InFlight> in_flight;
  std::vector<TrialRecord> records;
  double clock = 0.0;
  long issued = 0;
  bool exhausted = false;

  auto can_issue = [&] {
    if (exhausted) return false;
    if (static_cast<int>(in_flight.size()) >= parallel_degree) return false;
    if (horizon.max_evaluations && issued >= *horizon.max_evaluations) {
      return false;
    }
    if (horizon.max_seconds && clock >= *horizon.max_seconds) return false;
    return true;
  };

  for (;;) {
    while (can_issue()) {
      Eigen::VectorXd x;
      try {
        x = optimizer.suggest();
      } catch (const GridExhaustedError&) {
        exhausted = true;
        break;
      }
      InFlight job;
      job.x = x;
      job.value = benchmark.value(x);
      job.duration = benchmark.duration ? benchmark.duration(x) : 1.0;
      job.finish = clock + job.duration;
      job.issue_index = issued++;
      in_flight.push_back(std::move(job));
    }
    if (in_flight.empty()) break;

    auto next = std::min_element(in_flight.begin(), in_flight.end(),
                                 [](const InFlight& a, const InFlight& b) {
                                   if (a.finish != b.finish) {
                                     return a.finish < b.finish;
                                   }
                                   return a.issue_index < b.issue_index;
                                 });
    clock = next->finish;
    optimizer.observe(next->x, next->value, next->duration);

    TrialRecord record;
    record.iter = static_cast<long>(records.size()) + 1;
    record.x = next->x;
    record.y = next->value;
    record.duration_s = next->duration;
    record.best_y =
        records.empty() ? next->value : std::min(records.back().best_y, next->value);
    record.wall_s = clock;
    records.push_back(std::move(record));
    in_flight.erase(next);
  }
  return records;
}

}  // namespace bopt
