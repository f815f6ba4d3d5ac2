#pragma once

// Analytical propagation oracle: free-field and uniform-flow 3D Green's
// functions built from admissible retarded-time roots, the monopole goal
// field, and time-domain synthesis of mono-frequent "measurements".
//
// Convention used throughout the project: the time factor is exp(-i w t),
// the returned Green's values are the spatial factor exp(+i w tau) /
// (4 pi R); arg g is the phase lead added to a sin reference, i.e. a
// speaker signal w0*sin(2 pi f t + psi0) produces
// |g|*w0*sin(2 pi f t + psi0 + arg g) at the microphone.

#include <cmath>
#include <complex>
#include <vector>

#include "sfr/geometry.hpp"

namespace sfr {

// Uniform subsonic mean flow (Ma*c, 0, 0).
struct ConvectedMedium {
  double speed_of_sound = 343.0;
  double mach = 0.0;

  ConvectedMedium(double c, double ma) : speed_of_sound(c), mach(ma) {
    if (!(c > 0.0)) throw std::invalid_argument("speed of sound must be > 0");
    if (!(std::abs(ma) < 1.0))
      throw std::invalid_argument("flow must be subsonic (|Ma| < 1)");
  }
};

struct RetardedTimes {
  std::vector<double> roots;  // admissible (> 0) retarded times, at most 2
};

// Roots of tau - sqrt((x - Ma c tau)^2 + y^2 + z^2)/c = 0 for the relative
// position x_rel = x_receiver - x_source. Only positive roots are kept
// (Heaviside admissibility); subsonically exactly one survives.
inline RetardedTimes tau_roots(const Vec3& x_rel,
                               const ConvectedMedium& medium) {
  if (x_rel.norm() == 0.0)
    throw NumericError("retarded time undefined at zero separation");
  const double ma = medium.mach;
  const double c = medium.speed_of_sound;
  const double beta2 = 1.0 - ma * ma;
  const double cross = std::sqrt(x_rel.x * x_rel.x +
                                 beta2 * (x_rel.y * x_rel.y +
                                          x_rel.z * x_rel.z));
  RetardedTimes result;
  for (const double sign : {+1.0, -1.0}) {
    const double tau = -(x_rel.x * ma + sign * cross) / (beta2 * c);
    if (tau > 0.0) result.roots.push_back(tau);
  }
  return result;
}

// Spatial factor of the uniform-flow 3D Green's function: the sum over
// admissible tau of exp(i w tau) / (4 pi sqrt((x - Ma c tau)^2 + y^2 + z^2)).
// Reduces to exp(i w r / c) / (4 pi r) for Ma = 0.
inline complexd greens_uniform_flow_3d(const Vec3& x_src, const Vec3& x_rcv,
                                       double omega,
                                       const ConvectedMedium& medium) {
  const Vec3 rel = x_rcv - x_src;
  if (rel.norm() == 0.0)
    throw NumericError("Green's function singular at coincident points");
  const auto taus = tau_roots(rel, medium);
  const double uc = medium.mach * medium.speed_of_sound;
  complexd g = 0.0;
  for (const double tau : taus.roots) {
    const double dx = rel.x - uc * tau;
    const double radius =
        std::sqrt(dx * dx + rel.y * rel.y + rel.z * rel.z);
    g += std::polar(1.0 / (4.0 * kPi * radius), omega * tau);
  }
  return g;
}

inline complexd greens_free_field_3d(const Vec3& x_src, const Vec3& x_rcv,
                                     double omega, double c) {
  const double r = distance(x_src, x_rcv);
  if (r == 0.0)
    throw NumericError("Green's function singular at coincident points");
  return std::polar(1.0 / (4.0 * kPi * r), omega * r / c);
}

// Goal pressure at the given microphones: the free-field monopole response,
// normalized so |p_goal| = 1 at `reference` (the bright-zone center). The
// dark-zone goal is identically zero and is not produced here.
//
// The goal is always built without wind: the target listening experience
// does not depend on the medium the optimizer has to fight.
inline std::vector<complexd> monopole_goal_field(
    const std::vector<Vec3>& mics, const VirtualSource& source, double omega,
    double c, const Vec3& reference) {
  const double a0 =
      1.0 / std::abs(greens_free_field_3d(source.position, reference, omega, c));
  std::vector<complexd> goal;
  goal.reserve(mics.size());
  for (const auto& m : mics)
    goal.push_back(a0 * greens_free_field_3d(source.position, m, omega, c));
  return goal;
}

// Pressure time series a speaker signal w_amp*sin(2 pi f t + w_phase)
// produces through a transfer value g, sampled on the given time grid.
inline std::vector<double> synthesize_time_signal(
    complexd g, double w_amp, double w_phase, double f,
    const std::vector<double>& t) {
  if (!(f > 0.0)) throw std::invalid_argument("frequency must be > 0");
  const double amp = std::abs(g) * w_amp;
  const double phase = w_phase + std::arg(g);
  std::vector<double> p;
  p.reserve(t.size());
  for (const double ti : t)
    p.push_back(amp * std::sin(2.0 * kPi * f * ti + phase));
  return p;
}

inline std::vector<double> uniform_time_grid(std::size_t count, double dt) {
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = double(i) * dt;
  return t;
}

}  // namespace sfr
