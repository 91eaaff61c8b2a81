#include "bopt/space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bopt/errors.hpp"

namespace bopt {

namespace {

// Slack for round-trip noise at the box edges, relative to the unit range.
constexpr double kEdgeTolerance = 1e-9;

double clamp_with_tolerance(double value, double lo, double hi, double range,
                            const std::string& name) {
  const double slack = kEdgeTolerance * std::max(1.0, std::abs(range));
  if (value < lo - slack || value > hi + slack) {
    throw std::invalid_argument("point outside bounds for dimension '" + name +
                                "'");
  }
  return std::clamp(value, lo, hi);
}

}  // namespace

std::string to_string(ScaleKind scale) {
  return scale == ScaleKind::Linear ? "linear" : "log10";
}

ScaleKind scale_kind_from_string(const std::string& name) {
  if (name == "linear") return ScaleKind::Linear;
  if (name == "log10") return ScaleKind::Log10;
  throw std::invalid_argument("unknown scale kind: " + name);
}

ParameterSpace::ParameterSpace(std::vector<Dimension> dimensions)
    : dimensions_(std::move(dimensions)) {
  if (dimensions_.empty()) {
    throw std::invalid_argument("ParameterSpace: need at least one dimension");
  }
  for (auto& dim : dimensions_) {
    if (dim.name.empty()) {
      throw std::invalid_argument("ParameterSpace: dimension without a name");
    }
    if (!(dim.lower < dim.upper) || !std::isfinite(dim.lower) ||
        !std::isfinite(dim.upper)) {
      throw std::invalid_argument("ParameterSpace: need lower < upper for '" +
                                  dim.name + "'");
    }
    if (dim.scale == ScaleKind::Log10 && !(dim.lower > 0.0)) {
      throw std::invalid_argument(
          "ParameterSpace: log10 scale requires lower > 0 for '" + dim.name +
          "'");
    }
    if (!dim.grid.empty()) {
      std::sort(dim.grid.begin(), dim.grid.end());
      for (const double g : dim.grid) {
        if (!(g >= dim.lower && g <= dim.upper)) {
          throw std::invalid_argument(
              "ParameterSpace: grid value outside bounds for '" + dim.name +
              "'");
        }
      }
    }
  }
}

Eigen::VectorXd ParameterSpace::to_unit(const Eigen::VectorXd& native) const {
  if (native.size() != dim()) {
    throw std::invalid_argument("to_unit: dimension mismatch");
  }
  Eigen::VectorXd unit(dim());
  for (int d = 0; d < dim(); ++d) {
    const auto& spec = dimensions_[d];
    double value = clamp_with_tolerance(native[d], spec.lower, spec.upper,
                                        spec.upper - spec.lower, spec.name);
    if (spec.scale == ScaleKind::Log10) {
      const double lo = std::log10(spec.lower);
      const double hi = std::log10(spec.upper);
      unit[d] = (std::log10(value) - lo) / (hi - lo);
    } else {
      unit[d] = (value - spec.lower) / (spec.upper - spec.lower);
    }
    unit[d] = std::clamp(unit[d], 0.0, 1.0);
  }
  return unit;
}

Eigen::VectorXd ParameterSpace::from_unit(const Eigen::VectorXd& unit) const {
  if (unit.size() != dim()) {
    throw std::invalid_argument("from_unit: dimension mismatch");
  }
  Eigen::VectorXd native(dim());
  for (int d = 0; d < dim(); ++d) {
    const auto& spec = dimensions_[d];
    const double u =
        clamp_with_tolerance(unit[d], 0.0, 1.0, 1.0, spec.name);
    if (spec.scale == ScaleKind::Log10) {
      const double lo = std::log10(spec.lower);
      const double hi = std::log10(spec.upper);
      native[d] = std::pow(10.0, lo + u * (hi - lo));
      native[d] = std::clamp(native[d], spec.lower, spec.upper);
    } else {
      native[d] = spec.lower + u * (spec.upper - spec.lower);
    }
  }
  return native;
}

bool ParameterSpace::fully_gridded() const {
  return std::all_of(dimensions_.begin(), dimensions_.end(),
                     [](const Dimension& d) { return !d.grid.empty(); });
}

Eigen::MatrixXd ParameterSpace::grid_points_native() const {
  if (!fully_gridded()) {
    throw std::invalid_argument(
        "grid_points_native: not every dimension has grid values");
  }
  std::size_t total = 1;
  for (const auto& dim : dimensions_) {
    total *= dim.grid.size();
    if (total > 1000000) {
      throw std::invalid_argument("grid_points_native: grid too large");
    }
  }
  Eigen::MatrixXd points(static_cast<int>(total), dim());
  for (std::size_t index = 0; index < total; ++index) {
    std::size_t rest = index;
    for (int d = 0; d < dim(); ++d) {
      const auto& values = dimensions_[d].grid;
      points(static_cast<int>(index), d) = values[rest % values.size()];
      rest /= values.size();
    }
  }
  return points;
}

nlohmann::json ParameterSpace::to_json() const {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& dim : dimensions_) {
    nlohmann::json entry{{"name", dim.name},
                         {"lower", dim.lower},
                         {"upper", dim.upper},
                         {"scale", to_string(dim.scale)}};
    if (!dim.grid.empty()) entry["grid"] = dim.grid;
    doc.push_back(entry);
  }
  return doc;
}

ParameterSpace ParameterSpace::from_json(const nlohmann::json& doc) {
  if (!doc.is_array() || doc.empty()) {
    throw StateFormatError("space: expected a non-empty array of dimensions");
  }
  std::vector<Dimension> dims;
  dims.reserve(doc.size());
  for (const auto& entry : doc) {
    Dimension dim;
    try {
      dim.name = entry.at("name").get<std::string>();
      dim.lower = entry.at("lower").get<double>();
      dim.upper = entry.at("upper").get<double>();
      if (entry.contains("scale")) {
        dim.scale = scale_kind_from_string(entry.at("scale").get<std::string>());
      }
      if (entry.contains("grid")) {
        dim.grid = entry.at("grid").get<std::vector<double>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw StateFormatError(std::string("space: bad dimension entry: ") +
                             e.what());
    }
    dims.push_back(std::move(dim));
  }
  try {
    return ParameterSpace(std::move(dims));
  } catch (const std::invalid_argument& e) {
    throw StateFormatError(std::string("space: ") + e.what());
  }
}

}  // namespace bopt
