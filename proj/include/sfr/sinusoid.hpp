#pragma once

// Amplitude/phase recovery of a mono-frequent signal with known frequency:
// max-|p| and asin-branch initial guesses, refined by exact least-squares
// projection onto the {sin, cos} pair at f.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sfr/common.hpp"

namespace sfr {

// Wraps to [-pi, pi); +pi maps to -pi so the wrap is a function.
inline double wrap_phase(double x) {
  double w = std::remainder(x, 2.0 * kPi);
  if (w >= kPi) w -= 2.0 * kPi;  // remainder may return exactly +pi
  return w;
}

struct SinusoidFit {
  double amplitude = 0.0;     // >= 0
  double phase = 0.0;         // in [-pi, pi)
  double frequency = 0.0;     // known a priori, not fitted
  double residual_rms = 0.0;
};

inline double initial_amplitude(const std::vector<double>& samples) {
  if (samples.empty())
    throw std::invalid_argument("cannot estimate amplitude of empty signal");
  double peak = 0.0;
  for (const double s : samples) peak = std::max(peak, std::abs(s));
  return peak;
}

// Branch select on the sign of the first forward difference:
// rising: asin(p0/a0); falling: asin(-p0/a0) + pi. Result wrapped.
inline double initial_phase(const std::vector<double>& samples, double dt,
                            double amp0) {
  if (!(amp0 > 0.0)) throw NumericError("phase undefined for zero amplitude");
  if (samples.size() < 2)
    throw std::invalid_argument("need at least two samples for the slope");
  (void)dt;
  const double ratio = std::clamp(samples[0] / amp0, -1.0, 1.0);
  const bool rising = samples[1] - samples[0] >= 0.0;
  const double psi = rising ? std::asin(ratio) : std::asin(-ratio) + kPi;
  return wrap_phase(psi);
}

inline double fit_residual_rms(const std::vector<double>& samples, double f,
                               double dt, double amp, double phase) {
  double ss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double model = amp * std::sin(2.0 * kPi * f * double(i) * dt + phase);
    ss += (samples[i] - model) * (samples[i] - model);
  }
  return std::sqrt(ss / double(samples.size()));
}

// Least-squares minimizer of sum_t (p_t - a sin(2 pi f t + psi))^2 at known
// f: project onto sin/cos through the 2x2 normal equations (exact for any
// window, including non-integer period counts). The initial guess only
// serves as a consistency fallback: the refined fit never reports a larger
// residual.
inline SinusoidFit refine_fit(const std::vector<double>& samples, double f,
                              double dt, const SinusoidFit& initial) {
  if (samples.size() < 4)
    throw std::invalid_argument("need at least 4 samples to refine a fit");
  if (!(f * dt < 0.5))
    throw std::invalid_argument("frequency above Nyquist for this sampling");
  double ss = 0.0, cc = 0.0, sc = 0.0, ps = 0.0, pc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double arg = 2.0 * kPi * f * double(i) * dt;
    const double s = std::sin(arg);
    const double c = std::cos(arg);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    ps += samples[i] * s;
    pc += samples[i] * c;
  }
  // p ~ a*sin(arg) + b*cos(arg) = amp*sin(arg + psi), a = amp cos psi,
  // b = amp sin psi.
  const double det = ss * cc - sc * sc;
  SinusoidFit fit;
  fit.frequency = f;
  if (std::abs(det) < 1e-14 * (ss * cc + 1e-300)) {
    fit = initial;
    fit.frequency = f;
    fit.residual_rms =
        fit_residual_rms(samples, f, dt, fit.amplitude, fit.phase);
    return fit;
  }
  const double a = (cc * ps - sc * pc) / det;
  const double b = (ss * pc - sc * ps) / det;
  fit.amplitude = std::hypot(a, b);
  fit.phase = fit.amplitude > 0.0 ? wrap_phase(std::atan2(b, a)) : 0.0;
  fit.residual_rms = fit_residual_rms(samples, f, dt, fit.amplitude, fit.phase);

  const double initial_rms =
      fit_residual_rms(samples, f, dt, initial.amplitude, initial.phase);
  if (initial_rms < fit.residual_rms) {
    fit.amplitude = initial.amplitude;
    fit.phase = wrap_phase(initial.phase);
    fit.residual_rms = initial_rms;
  }
  return fit;
}

// Full extraction: initial guesses per the two-branch rule, then the
// projection refinement.
inline SinusoidFit extract_sinusoid(const std::vector<double>& samples,
                                    double f, double dt) {
  SinusoidFit initial;
  initial.frequency = f;
  initial.amplitude = initial_amplitude(samples);
  initial.phase =
      initial.amplitude > 0.0 ? initial_phase(samples, dt, initial.amplitude)
                              : 0.0;
  return refine_fit(samples, f, dt, initial);
}

}  // namespace sfr
