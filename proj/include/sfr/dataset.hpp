#pragma once

// Turns per-(f, Ma, speaker, mic) sinusoid fits into network training
// targets: amplitude modulation, wavenumber modulation factor via a
// wrap-aware gradient iteration, and the phase modulation encoded as a
// sin/cos pair so the [-pi, pi) discontinuity never reaches the networks.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "sfr/sinusoid.hpp"

namespace sfr {

// One measured record for a (frequency, Mach, speaker, mic) tuple.
struct TransferSample {
  double f = 0.0;          // Hz
  double ma = 0.0;
  int speaker = 0;
  int mic = 0;
  double amp = 0.0;        // extracted pressure amplitude [Pa]
  double phase = 0.0;      // extracted pressure phase in [-pi, pi)
  double src_amp = 1.0;    // speaker signal amplitude
  double src_phase = 0.0;  // speaker signal phase
};

inline double amplitude_modulation(const TransferSample& sample) {
  if (!(sample.src_amp > 0.0))
    throw std::invalid_argument("source amplitude must be > 0");
  return sample.amp / sample.src_amp;
}

// (v1, v2) = (cos x, sin x); decode with atan2(v2, v1).
inline std::pair<double, double> encode_phase(double phi) {
  return {std::cos(phi), std::sin(phi)};
}

inline double decode_phase(double v1, double v2) {
  return wrap_phase(std::atan2(v2, v1));
}

// Residual phase after removing the travel term: psi - psi0 - k~ k s.
inline double phase_modulation(const TransferSample& sample, double k_mod,
                               double s, double c) {
  if (!(s > 0.0) || !(c > 0.0))
    throw std::invalid_argument("distance and speed of sound must be > 0");
  const double k = 2.0 * kPi * sample.f / c;
  return wrap_phase(sample.phase - sample.src_phase - k_mod * k * s);
}

// Invertible affine map x -> a*x + b onto the given interval; a degenerate
// input range maps to the interval midpoint with unit slope so the inverse
// stays defined.
struct AffineScaler {
  double a = 1.0;
  double b = 0.0;

  static AffineScaler fit(double lo, double hi, double out_lo, double out_hi) {
    AffineScaler s;
    if (hi - lo > 0.0) {
      s.a = (out_hi - out_lo) / (hi - lo);
      s.b = out_lo - s.a * lo;
    } else {
      s.a = 1.0;
      s.b = 0.5 * (out_lo + out_hi) - lo;
    }
    return s;
  }

  double scale(double x) const { return a * x + b; }
  double unscale(double y) const { return (y - b) / a; }
};

struct WavenumberFitOptions {
  double gamma = 0.0;      // 0 = auto: 0.5*(c/(2 pi s))^2, the exact Newton step
  double tol = 1e-8;
  int max_iter = 500;
};

// Mean wrapped frequency-slope of the phase modulation at a given k~:
// D(k~) = mean_j wrap(phi~(f_{j+1}) - phi~(f_j)) / (f_{j+1} - f_j).
inline double phase_slope_objective(const std::vector<TransferSample>& samples,
                                    double k_mod, double s, double c) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < samples.size(); ++j) {
    const double phi0 = phase_modulation(samples[j], k_mod, s, c);
    const double phi1 = phase_modulation(samples[j + 1], k_mod, s, c);
    const double df = samples[j + 1].f - samples[j].f;
    acc += wrap_phase(phi1 - phi0) / df;
  }
  return acc / double(samples.size() - 1);
}

// Gradient iteration for the wavenumber modulation factor, started at
// k~ = 1. Minimizes D(k~)^2 with dD/dk~ = -2 pi s / c away from wrap
// boundaries; with the default step size each update is the exact Newton
// step of the quadratic objective, so convergence is immediate once no
// adjacent-pair difference sits on a wrap boundary.
inline double fit_wavenumber_modulation(std::vector<TransferSample> samples,
                                        double s, double c,
                                        WavenumberFitOptions opts = {}) {
  if (samples.size() < 3)
    throw std::invalid_argument(
        "need at least 3 frequency samples to fit the wavenumber modulation");
  std::sort(samples.begin(), samples.end(),
            [](const TransferSample& a, const TransferSample& b) {
              return a.f < b.f;
            });
  for (std::size_t j = 0; j + 1 < samples.size(); ++j)
    if (!(samples[j + 1].f > samples[j].f))
      throw std::invalid_argument("frequency grid must be strictly increasing");

  const double slope = -2.0 * kPi * s / c;  // dD/dk~
  const double gamma = opts.gamma > 0.0 ? opts.gamma : 0.5 / (slope * slope);
  double k_mod = 1.0;
  std::vector<double> history;
  for (int it = 0; it < opts.max_iter; ++it) {
    const double d = phase_slope_objective(samples, k_mod, s, c);
    history.push_back(d);
    const double next = k_mod - gamma * 2.0 * d * slope;
    const double delta = std::abs(next - k_mod);
    k_mod = next;
    if (delta < opts.tol) {
      // Cross-check against the one-shot closed form evaluated at the
      // converged point; both must agree once the wraps have settled.
      const double d_final = phase_slope_objective(samples, k_mod, s, c);
      const double direct = k_mod - d_final / slope;
      if (std::abs(direct - k_mod) > 1e-6 * std::max(1.0, std::abs(k_mod)))
        throw NumericError(
            "wavenumber fit stalled away from the closed-form optimum");
      return k_mod;
    }
  }
  std::ostringstream msg;
  msg << "wavenumber modulation iteration did not converge in "
      << opts.max_iter << " steps; last objectives:";
  for (std::size_t i = history.size() > 5 ? history.size() - 5 : 0;
       i < history.size(); ++i)
    msg << ' ' << history[i];
  throw NumericError(msg.str());
}

// Assembled training targets for one speaker-microphone pair.
struct PairDataset {
  int speaker = 0;
  int mic = 0;
  double distance = 0.0;  // s_nm
  double f_min = 0.0, f_max = 0.0;
  double ma_min = 0.0, ma_max = 0.0;
  std::vector<double> f;        // per sample, unscaled
  std::vector<double> ma;       // per sample, unscaled
  std::vector<double> a_tilde;  // per sample, unscaled
  std::vector<double> v1;       // cos(phi~)
  std::vector<double> v2;       // sin(phi~)
  std::vector<double> ma_grid;     // distinct Mach values
  std::vector<double> k_tilde;     // one per Mach value
  AffineScaler f_scaler;           // f -> [0, 1]
  AffineScaler ma_scaler;          // Ma -> [0, 1]
  AffineScaler amp_scaler;         // a~ -> [-1, 1]
  AffineScaler k_scaler;           // k~ -> [-1, 1]
};

// Builds the dataset for one pair from samples covering a full (f, Ma)
// grid: fits k~ per Mach value, derives phase modulations with that k~,
// and fits the feature/target scalers on the grid.
inline PairDataset build_pair_dataset(std::vector<TransferSample> samples,
                                      double pair_dist, double c,
                                      WavenumberFitOptions opts = {}) {
  if (samples.empty()) throw std::invalid_argument("no samples for pair");
  const int speaker = samples.front().speaker;
  const int mic = samples.front().mic;

  std::set<double> f_set, ma_set;
  for (const auto& s : samples) {
    if (s.speaker != speaker || s.mic != mic)
      throw std::invalid_argument("samples mix speaker/mic pairs");
    f_set.insert(s.f);
    ma_set.insert(s.ma);
  }
  std::map<std::pair<double, double>, const TransferSample*> by_key;
  for (const auto& s : samples) by_key[{s.ma, s.f}] = &s;
  std::vector<std::string> gaps;
  for (const double ma : ma_set)
    for (const double f : f_set)
      if (!by_key.count({ma, f})) {
        std::ostringstream g;
        g << "(f=" << f << ", Ma=" << ma << ")";
        gaps.push_back(g.str());
      }
  if (!gaps.empty()) {
    std::ostringstream msg;
    msg << "incomplete (f, Ma) grid for pair (" << speaker << ", " << mic
        << "); missing:";
    for (const auto& g : gaps) msg << ' ' << g;
    throw std::invalid_argument(msg.str());
  }

  PairDataset ds;
  ds.speaker = speaker;
  ds.mic = mic;
  ds.distance = pair_dist;
  ds.f_min = *f_set.begin();
  ds.f_max = *f_set.rbegin();
  ds.ma_min = *ma_set.begin();
  ds.ma_max = *ma_set.rbegin();
  ds.f_scaler = AffineScaler::fit(ds.f_min, ds.f_max, 0.0, 1.0);
  ds.ma_scaler = AffineScaler::fit(ds.ma_min, ds.ma_max, 0.0, 1.0);

  for (const double ma : ma_set) {
    std::vector<TransferSample> slice;
    for (const double f : f_set) slice.push_back(*by_key.at({ma, f}));
    ds.ma_grid.push_back(ma);
    ds.k_tilde.push_back(fit_wavenumber_modulation(slice, pair_dist, c, opts));
  }

  for (std::size_t mi = 0; mi < ds.ma_grid.size(); ++mi) {
    const double ma = ds.ma_grid[mi];
    for (const double f : f_set) {
      const TransferSample& s = *by_key.at({ma, f});
      const double phi = phase_modulation(s, ds.k_tilde[mi], pair_dist, c);
      const auto [v1, v2] = encode_phase(phi);
      ds.f.push_back(f);
      ds.ma.push_back(ma);
      ds.a_tilde.push_back(amplitude_modulation(s));
      ds.v1.push_back(v1);
      ds.v2.push_back(v2);
    }
  }

  const auto [a_lo, a_hi] =
      std::minmax_element(ds.a_tilde.begin(), ds.a_tilde.end());
  ds.amp_scaler = AffineScaler::fit(*a_lo, *a_hi, -1.0, 1.0);
  const auto [k_lo, k_hi] =
      std::minmax_element(ds.k_tilde.begin(), ds.k_tilde.end());
  ds.k_scaler = AffineScaler::fit(*k_lo, *k_hi, -1.0, 1.0);
  return ds;
}

}  // namespace sfr
