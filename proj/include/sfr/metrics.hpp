#pragma once

// Field evaluation with a ground-truth propagator and the dB quality
// measures: reproduction error RE (bright zone, paper's |p_rep|^2
// denominator), acoustic contrast AC, boundary RE and relative
// sound-energy-density maps. Metrics always see the ground truth, never
// the learned model.

#include <Eigen/Dense>
#include <algorithm>
#include <memory>
#include <vector>

#include "sfr/analytic.hpp"
#include "sfr/geometry.hpp"

namespace sfr {

// Complex pressure samples on a point set with quadrature weights
// (area for zone interiors, arclength for boundaries).
struct FieldMap {
  std::vector<Vec3> points;
  std::vector<complexd> values;
  std::vector<double> weights;

  double weight_sum() const {
    double s = 0.0;
    for (const double w : weights) s += w;
    return s;
  }
};

// dB clamp for exact cancellations / silent zones.
inline constexpr double kLevelFloorDb = -300.0;
inline constexpr double kLevelCapDb = 300.0;
inline constexpr double kMagnitudeFloor = 1e-150;

// Ground-truth unit response of one speaker at a field point. The learned
// model never implements this interface.
class Propagator {
 public:
  virtual ~Propagator() = default;
  virtual complexd unit_response(int speaker, const Vec3& point, double f,
                                 double ma) const = 0;
};

// Point-source propagation through the analytic Green's functions; with
// wind the uniform-flow kernel, otherwise free field.
class AnalyticPropagator : public Propagator {
 public:
  AnalyticPropagator(std::vector<Vec3> speakers, double speed_of_sound,
                     bool with_flow)
      : speakers_(std::move(speakers)),
        c_(speed_of_sound),
        with_flow_(with_flow) {}

  complexd unit_response(int speaker, const Vec3& point, double f,
                         double ma) const override {
    const Vec3& s = speakers_.at(speaker);
    const double omega = 2.0 * kPi * f;
    if (!with_flow_ || ma == 0.0)
      return greens_free_field_3d(s, point, omega, c_);
    return greens_uniform_flow_3d(s, point, omega, ConvectedMedium(c_, ma));
  }

 private:
  std::vector<Vec3> speakers_;
  double c_;
  bool with_flow_;
};

// Superposition of ground-truth unit responses weighted by the optimized
// speaker signals.
inline FieldMap evaluate_field(const Propagator& propagator,
                               const Eigen::VectorXcd& w,
                               const std::vector<Vec3>& points,
                               const std::vector<double>& weights, double f,
                               double ma) {
  if (points.size() != weights.size())
    throw std::invalid_argument("point/weight counts differ");
  FieldMap map;
  map.points = points;
  map.weights = weights;
  map.values.reserve(points.size());
  for (const auto& p : points) {
    complexd acc = 0.0;
    for (Eigen::Index n = 0; n < w.size(); ++n)
      acc += w(n) * propagator.unit_response(int(n), p, f, ma);
    map.values.push_back(acc);
  }
  return map;
}

// Midpoint tensor-product quadrature over the zone interior.
inline void zone_quadrature(const Zone& zone, int n_per_side,
                            std::vector<Vec3>& points,
                            std::vector<double>& weights) {
  const double cell = zone.side / n_per_side;
  for (int i = 0; i < n_per_side; ++i)
    for (int j = 0; j < n_per_side; ++j) {
      points.push_back({zone.center.x - zone.side / 2.0 + (i + 0.5) * cell,
                        zone.center.y - zone.side / 2.0 + (j + 0.5) * cell,
                        zone.center.z});
      weights.push_back(cell * cell);
    }
}

// Midpoint quadrature along the zone boundary.
inline void boundary_quadrature(const Zone& zone, int count,
                                std::vector<Vec3>& points,
                                std::vector<double>& weights) {
  const double perimeter = 4.0 * zone.side;
  const double step = perimeter / count;
  const double half = zone.side / 2.0;
  for (int i = 0; i < count; ++i) {
    const double s = (i + 0.5) * step;
    double dx = 0.0, dy = 0.0;
    if (s < zone.side) {
      dx = s;
    } else if (s < 2.0 * zone.side) {
      dx = zone.side;
      dy = s - zone.side;
    } else if (s < 3.0 * zone.side) {
      dx = zone.side - (s - 2.0 * zone.side);
      dy = zone.side;
    } else {
      dy = zone.side - (s - 3.0 * zone.side);
    }
    points.push_back(
        {zone.center.x - half + dx, zone.center.y - half + dy, zone.center.z});
    weights.push_back(step);
  }
}

// RE = 10 log10 (1/|S|) * integral |p_rep - p_goal|^2 / |p_rep|^2 dS.
// The denominator follows the paper; pass goal_denominator = true for the
// conventional |p_goal|^2 variant (clearly non-paper, off by default).
inline double reproduction_error(const FieldMap& p_rep, const FieldMap& p_goal,
                                 bool goal_denominator = false) {
  if (p_rep.values.size() != p_goal.values.size())
    throw std::invalid_argument("field maps cover different point sets");
  double acc = 0.0;
  for (std::size_t i = 0; i < p_rep.values.size(); ++i) {
    const double denom_mag =
        std::abs(goal_denominator ? p_goal.values[i] : p_rep.values[i]);
    if (denom_mag < kMagnitudeFloor)
      throw NumericError("degenerate field: |p| below magnitude floor");
    const double num = std::norm(p_rep.values[i] - p_goal.values[i]);
    acc += p_rep.weights[i] * num / (denom_mag * denom_mag);
  }
  const double mean = acc / p_rep.weight_sum();
  if (mean <= 0.0) return kLevelFloorDb;
  return std::max(10.0 * std::log10(mean), kLevelFloorDb);
}

struct ContrastResult {
  double db = 0.0;
  bool capped = false;  // silent dark zone
};

// AC = 10 log10 (|S_d| int_Sb |p|^2) / (|S_b| int_Sd |p|^2).
inline ContrastResult acoustic_contrast(const FieldMap& bright,
                                        const FieldMap& dark) {
  double eb = 0.0, ed = 0.0;
  for (std::size_t i = 0; i < bright.values.size(); ++i)
    eb += bright.weights[i] * std::norm(bright.values[i]);
  for (std::size_t i = 0; i < dark.values.size(); ++i)
    ed += dark.weights[i] * std::norm(dark.values[i]);
  const double sb = bright.weight_sum();
  const double sd = dark.weight_sum();
  ContrastResult result;
  if (ed <= sd * kMagnitudeFloor * kMagnitudeFloor) {
    result.db = kLevelCapDb;
    result.capped = true;
    return result;
  }
  const double ratio = (sd * eb) / (sb * ed);
  if (ratio <= 0.0) {
    result.db = kLevelFloorDb;
    result.capped = true;
    return result;
  }
  result.db = std::clamp(10.0 * std::log10(ratio), kLevelFloorDb, kLevelCapDb);
  return result;
}

// RE on the zone boundary; same definition with line quadrature weights.
inline double boundary_re(const FieldMap& p_rep, const FieldMap& p_goal,
                          bool goal_denominator = false) {
  return reproduction_error(p_rep, p_goal, goal_denominator);
}

struct EnergyMapSample {
  double x = 0.0, y = 0.0;
  double level_db = 0.0;
  bool skipped = false;  // grid point fell on a speaker singularity
};

// Sound-energy-density level relative to the bright zone: 10 log10
// (|p(x)|^2 / ref^2) with ref the rms |p| over the bright-zone quadrature.
inline std::vector<EnergyMapSample> energy_density_map(
    const Propagator& propagator, const Eigen::VectorXcd& w,
    const std::vector<Vec3>& grid, const FieldMap& bright_field, double f,
    double ma, const std::vector<Vec3>& speaker_positions) {
  double ref2 = 0.0;
  for (std::size_t i = 0; i < bright_field.values.size(); ++i)
    ref2 += bright_field.weights[i] * std::norm(bright_field.values[i]);
  ref2 /= bright_field.weight_sum();
  if (ref2 <= 0.0) throw NumericError("bright zone carries no energy");

  std::vector<EnergyMapSample> map;
  map.reserve(grid.size());
  for (const auto& p : grid) {
    EnergyMapSample sample;
    sample.x = p.x;
    sample.y = p.y;
    bool singular = false;
    for (const auto& s : speaker_positions)
      if (distance(s, p) < 1e-6) {
        singular = true;
        break;
      }
    if (singular) {
      sample.skipped = true;
      map.push_back(sample);
      continue;
    }
    complexd acc = 0.0;
    for (Eigen::Index n = 0; n < w.size(); ++n)
      acc += w(n) * propagator.unit_response(int(n), p, f, ma);
    const double ratio = std::norm(acc) / ref2;
    sample.level_db = ratio > 0.0
                          ? std::clamp(10.0 * std::log10(ratio), kLevelFloorDb,
                                       kLevelCapDb)
                          : kLevelFloorDb;
    map.push_back(sample);
  }
  return map;
}

}  // namespace sfr
