#pragma once

// Two-zone pressure matching: closed-form Tikhonov solve of the normal
// equations, L-curve selection of the regularization parameter, and the
// multiplicative SNR noise model for transfer matrices.

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "sfr/common.hpp"
#include "sfr/model.hpp"

namespace sfr {

struct SpeakerSolution {
  Eigen::VectorXcd w;
  double objective = 0.0;      // ||p_goal - G w||^2 + lambda ||w||^2
  double residual_norm = 0.0;  // ||p_goal - G w||
  double solution_norm = 0.0;  // ||w||
};

inline double objective(const ComplexSystem& sys, const Eigen::VectorXcd& w) {
  if (w.size() != sys.transfer.cols())
    throw std::invalid_argument("solution length does not match system");
  return (sys.goal - sys.transfer * w).squaredNorm() +
         sys.lambda * w.squaredNorm();
}

// w = [G^H G + lambda I]^{-1} G^H p_goal via LDLT of the normal equations.
// lambda = 0 is accepted only when the cross-product matrix is far from
// singular (condition estimate below 1e12).
inline SpeakerSolution solve_tikhonov(const ComplexSystem& sys) {
  if (sys.transfer.rows() != sys.goal.size())
    throw std::invalid_argument("goal length does not match transfer matrix");
  if (sys.lambda < 0.0)
    throw std::invalid_argument("regularization parameter must be >= 0");

  const Eigen::MatrixXcd& g = sys.transfer;
  Eigen::MatrixXcd normal = g.adjoint() * g;
  if (sys.lambda == 0.0) {
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(g);
    const double smin = svd.singularValues().tail(1)(0);
    const double smax = svd.singularValues()(0);
    const double cond2 =
        smin > 0.0 ? (smax / smin) * (smax / smin)
                   : std::numeric_limits<double>::infinity();
    if (!(cond2 < 1e12))
      throw NumericError(
          "unregularized system is numerically rank deficient "
          "(condition ~" +
          std::to_string(cond2) + "); use lambda > 0");
  }
  normal.diagonal().array() += sys.lambda;

  SpeakerSolution sol;
  sol.w = normal.ldlt().solve(g.adjoint() * sys.goal);
  sol.residual_norm = (sys.goal - g * sol.w).norm();
  sol.solution_norm = sol.w.norm();
  sol.objective = sol.residual_norm * sol.residual_norm +
                  sys.lambda * sol.solution_norm * sol.solution_norm;

  const Eigen::VectorXcd rhs = g.adjoint() * sys.goal;
  const Eigen::VectorXcd normal_residual = normal * sol.w - rhs;
  const double scale = normal.norm() * sol.solution_norm + rhs.norm();
  if (normal_residual.norm() > 1e-10 * std::max(scale, 1e-300))
    throw NumericError("normal equations solved with poor residual");
  return sol;
}

struct LcurveResult {
  double lambda = 0.0;
  bool degenerate = false;  // flat curve: no corner, smallest lambda used
  std::vector<double> residual_norms;
  std::vector<double> solution_norms;
  std::vector<double> curvature;
};

// Corner of the parametric curve (log ||p - G w||, log ||w||) over the
// lambda grid: maximum curvature with centered second differences in
// log(lambda); ties resolve toward larger lambda. Runs of grid points
// where the curve is nearly stationary are collapsed to their largest-
// lambda member first; the discrete curvature is meaningless at
// near-coincident points.
inline LcurveResult select_lambda_lcurve(const Eigen::MatrixXcd& transfer,
                                         const Eigen::VectorXcd& goal,
                                         const std::vector<double>& lambdas) {
  if (lambdas.size() < 5)
    throw std::invalid_argument("L-curve needs at least 5 lambda values");
  for (std::size_t i = 0; i + 1 < lambdas.size(); ++i)
    if (!(lambdas[i] < lambdas[i + 1]) || !(lambdas[i] > 0.0))
      throw std::invalid_argument(
          "lambda grid must be positive and strictly increasing");

  LcurveResult result;
  std::vector<double> xs, ys;
  for (const double lam : lambdas) {
    ComplexSystem sys{transfer, goal, lam, 0};
    const SpeakerSolution sol = solve_tikhonov(sys);
    result.residual_norms.push_back(sol.residual_norm);
    result.solution_norms.push_back(sol.solution_norm);
    xs.push_back(std::log(std::max(sol.residual_norm, 1e-300)));
    ys.push_back(std::log(std::max(sol.solution_norm, 1e-300)));
  }

  // Collapse near-stationary runs (scale set by the curve's bounding box),
  // keeping the largest-lambda member of each run.
  const auto [x_lo, x_hi] = std::minmax_element(xs.begin(), xs.end());
  const auto [y_lo, y_hi] = std::minmax_element(ys.begin(), ys.end());
  const double diag =
      std::hypot(*x_hi - *x_lo, *y_hi - *y_lo) + 1e-300;
  const double eps = 0.02 * diag;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!kept.empty() &&
        std::hypot(xs[i] - xs[kept.back()], ys[i] - ys[kept.back()]) < eps)
      kept.back() = i;  // still the same curve point; prefer larger lambda
    else
      kept.push_back(i);
  }

  result.curvature.assign(lambdas.size(), 0.0);
  double best = 0.0;
  std::size_t best_idx = 0;
  for (std::size_t k = 1; k + 1 < kept.size(); ++k) {
    const std::size_t i = kept[k];
    const double t0 = std::log(lambdas[kept[k - 1]]);
    const double t1 = std::log(lambdas[i]);
    const double t2 = std::log(lambdas[kept[k + 1]]);
    const double h0 = t1 - t0;
    const double h1 = t2 - t1;
    const double dx = (xs[kept[k + 1]] - xs[kept[k - 1]]) / (h0 + h1);
    const double dy = (ys[kept[k + 1]] - ys[kept[k - 1]]) / (h0 + h1);
    const double ddx = 2.0 *
                       (h0 * xs[kept[k + 1]] - (h0 + h1) * xs[i] +
                        h1 * xs[kept[k - 1]]) /
                       (h0 * h1 * (h0 + h1));
    const double ddy = 2.0 *
                       (h0 * ys[kept[k + 1]] - (h0 + h1) * ys[i] +
                        h1 * ys[kept[k - 1]]) /
                       (h0 * h1 * (h0 + h1));
    const double denom = std::pow(dx * dx + dy * dy, 1.5);
    // Signed so that the L-corner (turning from steep to flat while the
    // residual grows) comes out positive.
    const double kappa = denom > 0.0 ? (dx * ddy - dy * ddx) / denom : 0.0;
    result.curvature[i] = kappa;
    if (kappa >= best) {
      best = kappa;
      best_idx = i;
    }
  }
  if (best <= 1e-9) {
    result.degenerate = true;
    result.lambda = lambdas.front();
  } else {
    result.lambda = lambdas[best_idx];
  }
  return result;
}

enum class NoiseMode { gaussian, uniform };

// Per-entry perturbation g + 10^(-SNR/10) * |g| * exp(i phi), phi uniform
// in [-pi, pi], SNR drawn normal(snr_mean, snr_std^2). In uniform mode the
// deviation is zero and the perturbation is additionally scaled by an
// independent uniform [0, 1] draw. Deterministic for a fixed seed.
inline Eigen::MatrixXcd add_noise(const Eigen::MatrixXcd& transfer,
                                  double snr_mean_db, double snr_std_db,
                                  NoiseMode mode, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXcd noisy = transfer;
  for (Eigen::Index m = 0; m < transfer.rows(); ++m)
    for (Eigen::Index n = 0; n < transfer.cols(); ++n) {
      const double snr = mode == NoiseMode::gaussian
                             ? snr_mean_db + snr_std_db * rng.normal()
                             : snr_mean_db;
      const double phi = rng.uniform(-kPi, kPi);
      double magnitude =
          std::pow(10.0, -snr / 10.0) * std::abs(transfer(m, n));
      if (mode == NoiseMode::uniform) magnitude *= rng.uniform01();
      noisy(m, n) += std::polar(magnitude, phi);
    }
  return noisy;
}

}  // namespace sfr
