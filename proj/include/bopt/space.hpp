#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bopt {

enum class ScaleKind { Linear, Log10 };

std::string to_string(ScaleKind scale);
ScaleKind scale_kind_from_string(const std::string& name);

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
  ScaleKind scale = ScaleKind::Linear;
  std::vector<double> grid;  // optional native-unit grid values
};

// The bounded search box. Native points map to the unit hypercube (affinely,
// or affinely in log10 for log-scaled dimensions) before any GP math.
class ParameterSpace {
 public:
  explicit ParameterSpace(std::vector<Dimension> dimensions);

  int dim() const { return static_cast<int>(dimensions_.size()); }
  const Dimension& dimension(int d) const { return dimensions_.at(d); }
  const std::vector<Dimension>& dimensions() const { return dimensions_; }

  Eigen::VectorXd to_unit(const Eigen::VectorXd& native) const;
  Eigen::VectorXd from_unit(const Eigen::VectorXd& unit) const;

  bool fully_gridded() const;
  // Cartesian product of the per-dimension grids, native units.
  Eigen::MatrixXd grid_points_native() const;

  nlohmann::json to_json() const;
  static ParameterSpace from_json(const nlohmann::json& doc);

 private:
  std::vector<Dimension> dimensions_;
};

}  // namespace bopt
