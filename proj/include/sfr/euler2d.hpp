#pragma once

// Reduced 2D finite-difference oracle: linearized Euler equations about a
// sheared, temperature-stratified base state. 4th-order central
// differences, classic 4-stage Runge-Kutta, a 6th-order selective low-pass
// filter each step and a cubic-ramp sponge layer as non-reflecting
// boundary. Produces microphone time series for the harsh-conditions
// scenario.
//
// Base state: constant ambient pressure, horizontal log-profile wind
//   u_x(y) = Ma*c(0) * ln((y + 2.3)/0.3) / ln(2.3/0.3)
// clipped to zero below its root at y = -2 m, temperature
//   T(y) = 19.597 degC + |dT/dy| * y,
// speed of sound c = sqrt(gamma R_s T_K). The slope discontinuity where
// the profile meets zero is rounded by a circular fillet of radius 0.4 in
// the (y [m], u_x/u_ref [-]) plane, tangent to both branches; the fillet
// is solved at construction.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sfr/common.hpp"
#include "sfr/geometry.hpp"

namespace sfr {

struct WindProfile {
  double u_ref = 0.0;       // Ma * c(y = 0)
  double y_inner = -2.3;    // log singularity
  double y_len = 0.3;       // roughness length of the profile
  double fillet_radius = 0.4;
  double y_flat_end = -2.0;   // tangency on the zero branch
  double y_log_start = -2.0;  // tangency on the log branch
  double arc_center_y = -2.0;

  // Normalized profile: 1 at y = 0.
  double normalized(double y) const {
    const double b = 1.0 / std::log(-y_inner / y_len);
    if (u_ref == 0.0) return 0.0;
    if (y <= y_flat_end) return 0.0;
    if (y < y_log_start) {
      const double dy = y - arc_center_y;
      return fillet_radius -
             std::sqrt(std::max(fillet_radius * fillet_radius - dy * dy, 0.0));
    }
    return b * std::log((y - y_inner) / y_len);
  }

  double normalized_slope(double y) const {
    const double b = 1.0 / std::log(-y_inner / y_len);
    if (u_ref == 0.0) return 0.0;
    if (y <= y_flat_end) return 0.0;
    if (y < y_log_start) {
      const double dy = y - arc_center_y;
      const double root =
          std::sqrt(std::max(fillet_radius * fillet_radius - dy * dy, 1e-300));
      return dy / root;
    }
    return b / (y - y_inner);
  }

  double speed(double y) const { return u_ref * normalized(y); }
  double slope(double y) const { return u_ref * normalized_slope(y); }
};

// Solves the fillet tangency: circle of radius R tangent to u = 0 from
// above and tangent to the normalized log curve. F(y) = u(y) - R(1 -
// 1/sqrt(1 + u'(y)^2)) is strictly increasing, so bisection is safe.
inline WindProfile make_wind_profile(double u_ref) {
  WindProfile p;
  p.u_ref = u_ref;
  if (u_ref == 0.0) return p;
  const double b = 1.0 / std::log(-p.y_inner / p.y_len);
  const double r = p.fillet_radius;
  auto f = [&](double y) {
    const double u = b * std::log((y - p.y_inner) / p.y_len);
    const double du = b / (y - p.y_inner);
    return u - r * (1.0 - 1.0 / std::sqrt(1.0 + du * du));
  };
  double lo = p.y_inner + 1e-9, hi = -1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  const double y_star = 0.5 * (lo + hi);
  const double du = b / (y_star - p.y_inner);
  const double inv_norm = 1.0 / std::sqrt(1.0 + du * du);
  p.y_log_start = y_star;
  p.arc_center_y = y_star - r * du * inv_norm;
  p.y_flat_end = p.arc_center_y;
  return p;
}

struct BaseState2D {
  int n_points = 0;
  double domain_size = 0.0;  // square [-L/2, L/2]^2
  double h = 0.0;
  double p_inf = 101325.0;
  double r_gas = 287.058;          // J/(kg K)
  double gamma_adiabatic = 1.4;
  double temp_sea_level = 19.597;  // degC at y = 0
  double mach = 0.0;
  double temp_gradient = 0.0;      // degC/m
  WindProfile wind;

  double temperature(double y) const {  // degC
    return temp_sea_level + std::abs(temp_gradient) * y;
  }
  double temperature_kelvin(double y) const { return temperature(y) + 273.15; }
  double speed_of_sound(double y) const {
    return std::sqrt(gamma_adiabatic * r_gas * temperature_kelvin(y));
  }
  double density(double y) const {
    return p_inf / (r_gas * temperature_kelvin(y));
  }
  double wind_speed(double y) const { return wind.speed(y); }

  double coordinate(int i) const { return -domain_size / 2.0 + i * h; }
};

inline BaseState2D build_base_state(double mach, double temp_gradient,
                                    double domain_size, int n_points) {
  if (!(mach >= 0.0)) throw std::invalid_argument("Mach number must be >= 0");
  if (n_points < 50)
    throw std::invalid_argument("grid needs at least 50 points per direction");
  if (mach > 0.0 && domain_size / 2.0 < 2.3)
    throw std::invalid_argument(
        "domain must contain the wind profile support y in [-2.3, 2]");
  BaseState2D base;
  base.n_points = n_points;
  base.domain_size = domain_size;
  base.h = domain_size / double(n_points - 1);
  base.mach = mach;
  base.temp_gradient = temp_gradient;
  base.wind = make_wind_profile(mach * base.speed_of_sound(0.0));
  return base;
}

enum class SourceKind { sinusoid, pulse };

// Pressure source with Gaussian spatial footprint. The sinusoid drives
// w0*sin(2 pi f t + psi0); the pulse variant is a short time-Gaussian used
// by front-arrival diagnostics.
struct GaussianSource {
  Vec3 center;
  double half_width = 0.0;  // sigma_s [m]
  double amplitude = 1.0;   // w0
  double frequency = 0.0;   // Hz
  double phase = 0.0;       // psi0
  SourceKind kind = SourceKind::sinusoid;
  double pulse_center = 0.0;  // s, pulse mode only
  double pulse_width = 0.0;   // s, pulse mode only

  double envelope(double t) const {
    if (kind == SourceKind::sinusoid)
      return amplitude * std::sin(2.0 * kPi * frequency * t + phase);
    const double arg = (t - pulse_center) / pulse_width;
    return amplitude * std::exp(-0.5 * arg * arg);
  }
};

struct ProbeRecord {
  int mic_index = 0;
  double dt = 0.0;
  std::vector<double> samples;  // sample k holds p' at t = (k+1) dt
};

// Last `window` samples of a record; the steady-state slice.
inline std::vector<double> extract_window(const ProbeRecord& record,
                                          int window) {
  if (window < 1 || std::size_t(window) > record.samples.size())
    throw std::invalid_argument("window exceeds recorded sample count");
  return std::vector<double>(record.samples.end() - window,
                             record.samples.end());
}

// Global time of the first sample extract_window(record, window) returns.
inline double window_start_time(const ProbeRecord& record, int window) {
  return (double(record.samples.size()) - window + 1.0) * record.dt;
}

struct EulerOptions {
  double dt = 1.0 / 48000.0;
  double sponge_width = 1.2;      // m
  double sponge_strength = 0.0;   // 1/s; 0 = auto (8 c_ref / width)
  double filter_strength = 0.2;   // in (0, 1]
  int nan_check_interval = 25;
};

namespace detail {

using Field = Eigen::ArrayXXd;  // (x index, y index), x fastest

// 4th-order central first derivative along x (contiguous direction),
// downgraded near the edges (inside the sponge).
inline void ddx(const Field& f, double inv_h, Field& out) {
  const Eigen::Index n = f.rows(), m = f.cols();
  const double c1 = 8.0 / 12.0 * inv_h, c2 = 1.0 / 12.0 * inv_h;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double* col = &f(0, j);
    double* o = &out(0, j);
    o[0] = (col[1] - col[0]) * inv_h;
    o[1] = (col[2] - col[0]) * 0.5 * inv_h;
    for (Eigen::Index i = 2; i < n - 2; ++i)
      o[i] = c1 * (col[i + 1] - col[i - 1]) - c2 * (col[i + 2] - col[i - 2]);
    o[n - 2] = (col[n - 1] - col[n - 3]) * 0.5 * inv_h;
    o[n - 1] = (col[n - 1] - col[n - 2]) * inv_h;
  }
}

inline void ddy(const Field& f, double inv_h, Field& out) {
  const Eigen::Index n = f.rows(), m = f.cols();
  const double c1 = 8.0 / 12.0 * inv_h, c2 = 1.0 / 12.0 * inv_h;
  for (Eigen::Index j = 0; j < m; ++j) {
    double* o = &out(0, j);
    if (j == 0) {
      const double* a = &f(0, 0);
      const double* b = &f(0, 1);
      for (Eigen::Index i = 0; i < n; ++i) o[i] = (b[i] - a[i]) * inv_h;
    } else if (j == 1 || j == m - 2) {
      const double* a = &f(0, j - 1);
      const double* b = &f(0, j + 1);
      for (Eigen::Index i = 0; i < n; ++i) o[i] = (b[i] - a[i]) * 0.5 * inv_h;
    } else if (j == m - 1) {
      const double* a = &f(0, m - 2);
      const double* b = &f(0, m - 1);
      for (Eigen::Index i = 0; i < n; ++i) o[i] = (b[i] - a[i]) * inv_h;
    } else {
      const double* jm2 = &f(0, j - 2);
      const double* jm1 = &f(0, j - 1);
      const double* jp1 = &f(0, j + 1);
      const double* jp2 = &f(0, j + 2);
      for (Eigen::Index i = 0; i < n; ++i)
        o[i] = c1 * (jp1[i] - jm1[i]) - c2 * (jp2[i] - jm2[i]);
    }
  }
}

// 7-point 6th-order low-pass filter along both directions; interior only.
inline void filter_pass(Field& f, double strength, Field& tmp) {
  const Eigen::Index n = f.rows(), m = f.cols();
  const double s = strength / 64.0;
  tmp = f;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double* col = &tmp(0, j);
    double* o = &f(0, j);
    for (Eigen::Index i = 3; i < n - 3; ++i)
      o[i] -= s * (20.0 * col[i] - 15.0 * (col[i + 1] + col[i - 1]) +
                   6.0 * (col[i + 2] + col[i - 2]) -
                   (col[i + 3] + col[i - 3]));
  }
  tmp = f;
  for (Eigen::Index j = 3; j < m - 3; ++j) {
    const double* jm3 = &tmp(0, j - 3);
    const double* jm2 = &tmp(0, j - 2);
    const double* jm1 = &tmp(0, j - 1);
    const double* j0 = &tmp(0, j);
    const double* jp1 = &tmp(0, j + 1);
    const double* jp2 = &tmp(0, j + 2);
    const double* jp3 = &tmp(0, j + 3);
    double* o = &f(0, j);
    for (Eigen::Index i = 0; i < n; ++i)
      o[i] -= s * (20.0 * j0[i] - 15.0 * (jp1[i] + jm1[i]) +
                   6.0 * (jp2[i] + jm2[i]) - (jp3[i] + jm3[i]));
  }
}

struct Workspace {
  Field u, v, p;        // state
  Field du, dv, dp;     // RK accumulators
  Field u0s, v0s, p0s;  // stage state
  Field dx, dy;         // derivative scratch
  Field dudx, dpdx;     // reused between equations
  Field tmp;
  Field ru, rv, rp;     // stage rates
};

}  // namespace detail

// Integrates the linearized Euler system about `base` and returns the
// pressure-perturbation series at the probe positions (bilinear
// interpolation). Throws on CFL violation before stepping and on NaN
// detection while stepping.
inline std::vector<ProbeRecord> run_case_multi(
    const BaseState2D& base, const std::vector<GaussianSource>& sources,
    int n_steps, const std::vector<Vec3>& probes,
    const EulerOptions& opts = {}) {
  const int n = base.n_points;
  const double h = base.h;
  const double half = base.domain_size / 2.0;

  // Per-row base profiles.
  Eigen::ArrayXd u0(n), inv_rho0(n), du0dy(n);
  double max_speed = 0.0;
  for (int j = 0; j < n; ++j) {
    const double y = base.coordinate(j);
    u0(j) = base.wind_speed(y);
    inv_rho0(j) = 1.0 / base.density(y);
    du0dy(j) = base.wind.slope(y);
    max_speed =
        std::max(max_speed, base.speed_of_sound(y) + std::abs(u0(j)));
  }
  const double cfl = max_speed * opts.dt / h;
  if (cfl >= 1.0)
    throw NumericError("CFL violation: max signal speed * dt / h = " +
                       std::to_string(cfl) + " >= 1");

  for (const auto& src : sources)
    if (src.half_width < 2.0 * h)
      throw std::invalid_argument(
          "Gaussian source half-width under-resolved (< 2h)");

  // gamma * p_inf is spatially constant even under stratification.
  const double gamma_p = base.gamma_adiabatic * base.p_inf;

  // Sponge profile (separable contributions combined by max).
  const double c_ref = base.speed_of_sound(0.0);
  const double sigma_max = opts.sponge_strength > 0.0
                               ? opts.sponge_strength
                               : 8.0 * c_ref / opts.sponge_width;
  Eigen::ArrayXd sponge_1d(n);
  for (int i = 0; i < n; ++i) {
    const double x = base.coordinate(i);
    const double d = half - std::abs(x);  // distance to boundary
    const double xi =
        std::clamp((opts.sponge_width - d) / opts.sponge_width, 0.0, 1.0);
    sponge_1d(i) = sigma_max * xi * xi * xi;
  }
  detail::Field sponge(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      sponge(i, j) = std::max(sponge_1d(i), sponge_1d(j));

  // Precomputed spatial source footprints.
  std::vector<detail::Field> footprints;
  for (const auto& src : sources) {
    detail::Field fp(n, n);
    const double inv2s2 = 1.0 / (2.0 * src.half_width * src.half_width);
    for (int j = 0; j < n; ++j) {
      const double y = base.coordinate(j) - src.center.y;
      for (int i = 0; i < n; ++i) {
        const double x = base.coordinate(i) - src.center.x;
        fp(i, j) = std::exp(-(x * x + y * y) * inv2s2);
      }
    }
    footprints.push_back(std::move(fp));
  }

  detail::Workspace ws;
  for (detail::Field* f : {&ws.u, &ws.v, &ws.p, &ws.du, &ws.dv, &ws.dp,
                           &ws.u0s, &ws.v0s, &ws.p0s, &ws.dx, &ws.dy,
                           &ws.dudx, &ws.dpdx, &ws.tmp, &ws.ru, &ws.rv,
                           &ws.rp})
    f->setZero(n, n);

  // Probe interpolation stencils.
  struct ProbeStencil {
    int i = 0, j = 0;
    double fx = 0.0, fy = 0.0;
  };
  std::vector<ProbeStencil> stencils;
  for (const auto& probe : probes) {
    if (std::abs(probe.x) > half || std::abs(probe.y) > half)
      throw std::invalid_argument("probe outside simulation domain");
    ProbeStencil st;
    const double gx = (probe.x + half) / h;
    const double gy = (probe.y + half) / h;
    st.i = std::min(int(gx), n - 2);
    st.j = std::min(int(gy), n - 2);
    st.fx = gx - st.i;
    st.fy = gy - st.j;
    stencils.push_back(st);
  }

  std::vector<ProbeRecord> records(probes.size());
  for (std::size_t k = 0; k < probes.size(); ++k) {
    records[k].mic_index = int(k);
    records[k].dt = opts.dt;
    records[k].samples.reserve(n_steps);
  }

  const double inv_h = 1.0 / h;
  auto rate = [&](const detail::Field& u, const detail::Field& v,
                  const detail::Field& p, double t, detail::Field& ru,
                  detail::Field& rv, detail::Field& rp) {
    detail::ddx(u, inv_h, ws.dudx);
    detail::ddx(p, inv_h, ws.dpdx);
    detail::ddx(v, inv_h, ws.dx);
    detail::ddy(p, inv_h, ws.dy);

    // ru = -u0 du/dx - v du0/dy - (1/rho0) dp/dx
    // rv = -u0 dv/dx - (1/rho0) dp/dy
    for (int j = 0; j < n; ++j) {
      ru.col(j) = -u0(j) * ws.dudx.col(j) - du0dy(j) * v.col(j) -
                  inv_rho0(j) * ws.dpdx.col(j);
      rv.col(j) = -u0(j) * ws.dx.col(j) - inv_rho0(j) * ws.dy.col(j);
    }

    // rp = -u0 dp/dx - gamma p_inf (du/dx + dv/dy) + q(t)
    detail::ddy(v, inv_h, ws.dy);
    for (int j = 0; j < n; ++j)
      rp.col(j) = -u0(j) * ws.dpdx.col(j) -
                  gamma_p * (ws.dudx.col(j) + ws.dy.col(j));
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const double e = sources[s].envelope(t);
      if (e != 0.0) rp += e * footprints[s];
    }

    // Sponge damping toward the base state.
    ru -= sponge * u;
    rv -= sponge * v;
    rp -= sponge * p;
  };

  const double dt = opts.dt;
  for (int step = 0; step < n_steps; ++step) {
    const double t = step * dt;
    // Classic RK4.
    rate(ws.u, ws.v, ws.p, t, ws.ru, ws.rv, ws.rp);
    ws.du = ws.ru;
    ws.dv = ws.rv;
    ws.dp = ws.rp;
    ws.u0s = ws.u + 0.5 * dt * ws.ru;
    ws.v0s = ws.v + 0.5 * dt * ws.rv;
    ws.p0s = ws.p + 0.5 * dt * ws.rp;
    rate(ws.u0s, ws.v0s, ws.p0s, t + 0.5 * dt, ws.ru, ws.rv, ws.rp);
    ws.du += 2.0 * ws.ru;
    ws.dv += 2.0 * ws.rv;
    ws.dp += 2.0 * ws.rp;
    ws.u0s = ws.u + 0.5 * dt * ws.ru;
    ws.v0s = ws.v + 0.5 * dt * ws.rv;
    ws.p0s = ws.p + 0.5 * dt * ws.rp;
    rate(ws.u0s, ws.v0s, ws.p0s, t + 0.5 * dt, ws.ru, ws.rv, ws.rp);
    ws.du += 2.0 * ws.ru;
    ws.dv += 2.0 * ws.rv;
    ws.dp += 2.0 * ws.rp;
    ws.u0s = ws.u + dt * ws.ru;
    ws.v0s = ws.v + dt * ws.rv;
    ws.p0s = ws.p + dt * ws.rp;
    rate(ws.u0s, ws.v0s, ws.p0s, t + dt, ws.ru, ws.rv, ws.rp);
    ws.du += ws.ru;
    ws.dv += ws.rv;
    ws.dp += ws.rp;
    ws.u += dt / 6.0 * ws.du;
    ws.v += dt / 6.0 * ws.dv;
    ws.p += dt / 6.0 * ws.dp;

    if (opts.filter_strength > 0.0) {
      detail::filter_pass(ws.u, opts.filter_strength, ws.tmp);
      detail::filter_pass(ws.v, opts.filter_strength, ws.tmp);
      detail::filter_pass(ws.p, opts.filter_strength, ws.tmp);
    }

    for (std::size_t k = 0; k < stencils.size(); ++k) {
      const auto& st = stencils[k];
      const double v00 = ws.p(st.i, st.j);
      const double v10 = ws.p(st.i + 1, st.j);
      const double v01 = ws.p(st.i, st.j + 1);
      const double v11 = ws.p(st.i + 1, st.j + 1);
      records[k].samples.push_back((1.0 - st.fx) * (1.0 - st.fy) * v00 +
                                   st.fx * (1.0 - st.fy) * v10 +
                                   (1.0 - st.fx) * st.fy * v01 +
                                   st.fx * st.fy * v11);
    }

    if ((step + 1) % opts.nan_check_interval == 0 && !ws.p.allFinite())
      throw NumericError("simulation diverged (NaN) at step " +
                         std::to_string(step + 1));
  }
  if (!ws.p.allFinite() || !ws.u.allFinite() || !ws.v.allFinite())
    throw NumericError("simulation diverged (NaN) at final step");
  return records;
}

inline std::vector<ProbeRecord> run_case(const BaseState2D& base,
                                         const GaussianSource& source,
                                         int n_steps,
                                         const std::vector<Vec3>& probes,
                                         const EulerOptions& opts = {}) {
  return run_case_multi(base, {source}, n_steps, probes, opts);
}

}  // namespace sfr
