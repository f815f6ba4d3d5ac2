#pragma once

// Speaker ring, reproduction zones and virtual source of the two-zone
// benchmark layouts. Everything lives in the z = 0 plane of a 3D frame so
// the same layout feeds both the 3D analytic propagator and the 2D
// finite-difference propagator.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sfr/common.hpp"

namespace sfr {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  bool operator==(const Vec3& o) const {
    return x == o.x && y == o.y && z == o.z;
  }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Euclidean speaker-to-microphone distance; the travel distance entering
// the k̃·k·s phase term.
inline double pair_distance(const Vec3& speaker, const Vec3& mic) {
  return distance(speaker, mic);
}

struct ArrayLayout {
  std::vector<Vec3> speakers;
  double array_radius = 0.0;
  Vec3 center;
};

enum class ZoneKind { bright, dark };

struct Zone {
  Vec3 center;
  double side = 0.0;
  ZoneKind kind = ZoneKind::bright;
  std::vector<Vec3> boundary_mics;
  std::optional<Vec3> center_mic;

  double area() const { return side * side; }

  // Boundary mics first in construction order, then the center mic.
  std::vector<Vec3> mics() const {
    std::vector<Vec3> all = boundary_mics;
    if (center_mic) all.push_back(*center_mic);
    return all;
  }
};

struct VirtualSource {
  Vec3 position;  // monopole
};

inline ArrayLayout build_circular_array(double radius, int count,
                                        const Vec3& center,
                                        double start_angle) {
  if (!(radius > 0.0)) throw std::invalid_argument("array radius must be > 0");
  if (count < 1) throw std::invalid_argument("speaker count must be >= 1");
  ArrayLayout layout;
  layout.array_radius = radius;
  layout.center = center;
  layout.speakers.reserve(count);
  for (int j = 0; j < count; ++j) {
    const double a = start_angle + 2.0 * kPi * j / count;
    layout.speakers.push_back(
        {center.x + radius * std::cos(a), center.y + radius * std::sin(a),
         center.z});
  }
  return layout;
}

// boundary_count mics uniformly spaced along the square perimeter starting
// at the lower-left corner, walked counter-clockwise. With boundary_count a
// multiple of 4 all four corners are hit.
inline Zone build_zone(const Vec3& center, double side, int boundary_count,
                       bool with_center_mic,
                       ZoneKind kind = ZoneKind::bright) {
  if (!(side > 0.0)) throw std::invalid_argument("zone side must be > 0");
  if (boundary_count < 4 || boundary_count % 4 != 0)
    throw std::invalid_argument("boundary mic count must be divisible by 4");
  Zone zone;
  zone.center = center;
  zone.side = side;
  zone.kind = kind;
  const double half = side / 2.0;
  const double perimeter = 4.0 * side;
  const double step = perimeter / boundary_count;
  for (int i = 0; i < boundary_count; ++i) {
    const double s = i * step;  // arclength from the lower-left corner
    double dx = 0.0, dy = 0.0;
    if (s < side) {
      dx = s;
      dy = 0.0;
    } else if (s < 2.0 * side) {
      dx = side;
      dy = s - side;
    } else if (s < 3.0 * side) {
      dx = side - (s - 2.0 * side);
      dy = side;
    } else {
      dx = 0.0;
      dy = side - (s - 3.0 * side);
    }
    zone.boundary_mics.push_back(
        {center.x - half + dx, center.y - half + dy, center.z});
  }
  if (with_center_mic) zone.center_mic = center;
  return zone;
}

inline bool point_in_zone(const Zone& zone, const Vec3& p) {
  const double half = zone.side / 2.0;
  return std::abs(p.x - zone.center.x) <= half &&
         std::abs(p.y - zone.center.y) <= half;
}

// Complete two-zone benchmark layout.
struct SceneLayout {
  ArrayLayout speakers;
  Zone bright;
  Zone dark;
  VirtualSource source;

  // Microphone order used everywhere: bright mics first, then dark mics.
  std::vector<Vec3> all_mics() const {
    std::vector<Vec3> mics = bright.mics();
    const auto dark_mics = dark.mics();
    mics.insert(mics.end(), dark_mics.begin(), dark_mics.end());
    return mics;
  }

  std::size_t bright_mic_count() const { return bright.mics().size(); }
  std::size_t dark_mic_count() const { return dark.mics().size(); }
};

// Fingerprint over all positions; stored in model containers so a model
// cannot be applied to a mismatched layout.
inline std::uint64_t layout_hash(const SceneLayout& layout) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto add = [&h](const Vec3& v) {
    h = fnv1a(&v.x, sizeof(double), h);
    h = fnv1a(&v.y, sizeof(double), h);
    h = fnv1a(&v.z, sizeof(double), h);
  };
  for (const auto& s : layout.speakers.speakers) add(s);
  for (const auto& m : layout.bright.mics()) add(m);
  for (const auto& m : layout.dark.mics()) add(m);
  add(layout.source.position);
  return h;
}

// Layout sanity checks mirroring the construction contracts; used on
// deserialized layouts.
inline void validate_layout(const ArrayLayout& layout, double tol = 1e-12) {
  if (layout.speakers.empty())
    throw std::invalid_argument("layout has no speakers");
  const std::size_t n = layout.speakers.size();
  std::vector<double> angles(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 rel = layout.speakers[i] - layout.center;
    if (std::abs(rel.norm() - layout.array_radius) > tol)
      throw std::invalid_argument("speaker off the array circle");
    angles[i] = std::atan2(rel.y, rel.x);
  }
  if (n == 1) return;
  const double gap = 2.0 * kPi / double(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = angles[(i + 1) % n] - angles[i];
    while (d < 0.0) d += 2.0 * kPi;
    while (d >= 2.0 * kPi) d -= 2.0 * kPi;
    if (std::abs(d - gap) > tol * 10.0 + 1e-12)
      throw std::invalid_argument("speakers not equally spaced");
  }
}

inline void validate_zone(const Zone& zone, double tol = 1e-12) {
  const double half = zone.side / 2.0;
  for (const auto& m : zone.boundary_mics) {
    const double dx = std::abs(m.x - zone.center.x);
    const double dy = std::abs(m.y - zone.center.y);
    const bool on_perimeter =
        (std::abs(dx - half) <= tol && dy <= half + tol) ||
        (std::abs(dy - half) <= tol && dx <= half + tol);
    if (!on_perimeter)
      throw std::invalid_argument("boundary mic off the zone perimeter");
  }
  if (zone.center_mic && !(*zone.center_mic == zone.center))
    throw std::invalid_argument("center mic must sit at the zone center");
}

}  // namespace sfr
