#pragma once

// Small fully connected networks (tanh hidden layers, linear output)
// trained with Levenberg-Marquardt to an MSE stopping threshold. The
// trainer can snapshot the network state the first time the loss crosses
// each of a list of thresholds; because training is deterministic, the
// snapshot for a threshold is identical to a fresh run stopped there.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "sfr/common.hpp"

namespace sfr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Network {
  std::vector<int> sizes;          // {inputs, hidden..., outputs}
  std::vector<MatrixXd> weights;   // weights[l]: sizes[l+1] x sizes[l]
  std::vector<VectorXd> biases;    // biases[l]: sizes[l+1]
  std::uint64_t seed = 0;

  int inputs() const { return sizes.front(); }
  int outputs() const { return sizes.back(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
      n += std::size_t(sizes[l + 1]) * sizes[l] + sizes[l + 1];
    return n;
  }
};

// Nguyen-Widrow initialization, seeded and deterministic: row directions
// drawn uniformly, rescaled to magnitude 0.7*m^(1/n), biases spreading the
// tanh transitions across the input domain. First-layer inputs are assumed
// in [0, 1] (the dataset feature scaling); deeper layers see tanh outputs
// in [-1, 1]. Starting in the saturating regime matters: with tiny initial
// weights the first quasi-linear LM step would overshoot loose stopping
// thresholds by orders of magnitude.
inline Network init_network(const std::vector<int>& sizes,
                            std::uint64_t seed) {
  if (sizes.size() < 3)
    throw std::invalid_argument("network needs at least one hidden layer");
  for (const int n : sizes)
    if (n < 1) throw std::invalid_argument("layer sizes must be >= 1");
  Network net;
  net.sizes = sizes;
  net.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int rows = sizes[l + 1];
    const int cols = sizes[l];
    const double beta = 0.7 * std::pow(double(rows), 1.0 / double(cols));
    MatrixXd w(rows, cols);
    VectorXd b(rows);
    for (int i = 0; i < rows; ++i) {
      double norm2 = 0.0;
      for (int j = 0; j < cols; ++j) {
        w(i, j) = rng.uniform(-0.5, 0.5);
        norm2 += w(i, j) * w(i, j);
      }
      const double scale = beta / std::max(std::sqrt(norm2), 1e-12);
      for (int j = 0; j < cols; ++j) w(i, j) *= scale;
      const double spread =
          rows > 1 ? -1.0 + 2.0 * double(i) / double(rows - 1) : 0.0;
      b(i) = beta * spread * (w(i, 0) >= 0.0 ? 1.0 : -1.0);
    }
    if (l == 0) {
      // Map the assumed [-1, 1] input range onto the actual [0, 1] one.
      b -= w.rowwise().sum();
      w *= 2.0;
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

// Batch forward pass; inputs and outputs are (dimension x samples).
inline MatrixXd forward(const Network& net, const MatrixXd& inputs) {
  if (inputs.rows() != net.inputs())
    throw std::invalid_argument("input dimension mismatch");
  MatrixXd a = inputs;
  const std::size_t layers = net.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    MatrixXd z = (net.weights[l] * a).colwise() + net.biases[l];
    if (l + 1 < layers)
      a = z.array().tanh().matrix();
    else
      a = std::move(z);
  }
  return a;
}

inline VectorXd forward(const Network& net, const VectorXd& input) {
  return forward(net, MatrixXd(input)).col(0);
}

namespace detail {

// Forward pass keeping hidden activations for backprop.
inline MatrixXd forward_cached(const Network& net, const MatrixXd& inputs,
                               std::vector<MatrixXd>& activations) {
  activations.clear();
  activations.push_back(inputs);
  MatrixXd a = inputs;
  const std::size_t layers = net.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    MatrixXd z = (net.weights[l] * a).colwise() + net.biases[l];
    if (l + 1 < layers) {
      a = z.array().tanh().matrix();
      activations.push_back(a);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

inline void pack_parameters(const Network& net, VectorXd& p) {
  p.resize(net.parameter_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) p(at++) = w(i, j);
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i)
      p(at++) = net.biases[l](i);
  }
}

inline void unpack_parameters(Network& net, const VectorXd& p) {
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& w = net.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = p(at++);
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i)
      net.biases[l](i) = p(at++);
  }
}

}  // namespace detail

// Exact Jacobian of the batch outputs with respect to all parameters via
// layer-wise backprop. Row order: sample-major, the outputs of one sample
// contiguous (row = sample*outputs + output). Column order matches
// pack_parameters: per layer W row-major, then b.
inline MatrixXd jacobian(const Network& net, const MatrixXd& inputs) {
  std::vector<MatrixXd> acts;
  detail::forward_cached(net, inputs, acts);
  const Eigen::Index samples = inputs.cols();
  const int n_out = net.outputs();
  const std::size_t layers = net.weights.size();
  MatrixXd jac(samples * n_out, net.parameter_count());

  for (int o = 0; o < n_out; ++o) {
    // delta[l]: d y_o / d z_{l+1} for the whole batch.
    std::vector<MatrixXd> delta(layers);
    delta[layers - 1] = MatrixXd::Zero(net.sizes.back(), samples);
    delta[layers - 1].row(o).setOnes();
    for (std::size_t l = layers - 1; l-- > 0;) {
      const MatrixXd back = net.weights[l + 1].transpose() * delta[l + 1];
      delta[l] =
          (back.array() * (1.0 - acts[l + 1].array().square())).matrix();
    }
    Eigen::Index col = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      const MatrixXd& d = delta[l];
      const MatrixXd& a_prev = acts[l];
      for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < a_prev.rows(); ++j) {
          for (Eigen::Index s = 0; s < samples; ++s)
            jac(s * n_out + o, col) = d(i, s) * a_prev(j, s);
          ++col;
        }
      for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index s = 0; s < samples; ++s)
          jac(s * n_out + o, col) = d(i, s);
        ++col;
      }
    }
  }
  return jac;
}

enum class StopReason { threshold, max_epochs, stagnation };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::threshold: return "threshold";
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::stagnation: return "stagnation";
  }
  return "?";
}

struct TrainOptions {
  double mse_target = 1e-7;
  int max_epochs = 2000;
  double mu0 = 1e-3;
  double mu_increase = 10.0;
  double mu_decrease = 10.0;
  double mu_max = 1e10;
  int max_consecutive_rejections = 50;
  // Additional thresholds to snapshot the first time the loss crosses them.
  std::vector<double> snapshot_thresholds;
};

struct TrainSnapshot {
  double threshold = 0.0;
  Network network;
  int epochs = 0;
  double mse = 0.0;
  StopReason stop_reason = StopReason::threshold;
};

struct TrainReport {
  int epochs = 0;               // accepted steps
  double final_mse = 0.0;
  std::vector<double> mse_history;      // after each accepted step
  std::vector<double> damping_history;  // mu after each accepted step
  StopReason stop_reason = StopReason::max_epochs;
  std::vector<TrainSnapshot> snapshots;
};

inline double mean_squared_error(const MatrixXd& outputs,
                                 const MatrixXd& targets) {
  return (targets - outputs).squaredNorm() / double(targets.size());
}

// Levenberg-Marquardt: solve (J^T J + mu I) step = J^T e, accept the step
// only when the loss decreases; mu shrinks on acceptance and grows on
// rejection. Stops at the MSE target, the epoch budget, or stagnation
// (mu ceiling / too many consecutive rejections).
inline TrainReport train_lm(Network& net, const MatrixXd& features,
                            const MatrixXd& targets,
                            const TrainOptions& opts = {}) {
  if (features.cols() != targets.cols())
    throw std::invalid_argument("feature/target sample counts differ");
  if (targets.rows() != net.outputs())
    throw std::invalid_argument("target dimension does not match network");

  const Eigen::Index samples = features.cols();
  const int n_out = net.outputs();
  TrainReport report;

  auto residual_vector = [&](const MatrixXd& outputs) {
    VectorXd e(samples * n_out);
    for (Eigen::Index s = 0; s < samples; ++s)
      for (int o = 0; o < n_out; ++o)
        e(s * n_out + o) = targets(o, s) - outputs(o, s);
    return e;
  };

  std::vector<double> pending = opts.snapshot_thresholds;
  std::sort(pending.begin(), pending.end(), std::greater<double>());
  auto take_snapshots = [&](double mse, int epochs, StopReason reason) {
    while (!pending.empty() && mse < pending.front()) {
      report.snapshots.push_back(
          {pending.front(), net, epochs, mse, reason});
      pending.erase(pending.begin());
    }
  };

  MatrixXd outputs = forward(net, features);
  double mse = mean_squared_error(outputs, targets);
  if (!std::isfinite(mse)) throw NumericError("non-finite loss at start");
  report.mse_history.push_back(mse);
  double mu = opts.mu0;
  report.damping_history.push_back(mu);
  take_snapshots(mse, 0, StopReason::threshold);

  VectorXd params;
  detail::pack_parameters(net, params);
  const Eigen::Index n_params = params.size();
  MatrixXd hessian(n_params, n_params);

  int rejections_in_a_row = 0;
  report.stop_reason = StopReason::max_epochs;

  if (mse < opts.mse_target) {
    report.stop_reason = StopReason::threshold;
  } else {
    while (report.epochs < opts.max_epochs) {
      const MatrixXd jac = jacobian(net, features);
      const VectorXd grad = jac.transpose() * residual_vector(outputs);
      hessian.setZero();
      hessian.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());

      bool accepted = false;
      while (!accepted) {
        MatrixXd damped = hessian.selfadjointView<Eigen::Lower>();
        damped.diagonal().array() += mu;
        const VectorXd step = damped.ldlt().solve(grad);
        const VectorXd trial = params + step;
        detail::unpack_parameters(net, trial);
        const MatrixXd trial_out = forward(net, features);
        const double trial_mse = mean_squared_error(trial_out, targets);
        if (!std::isfinite(trial_mse)) {
          detail::unpack_parameters(net, params);
          throw NumericError("non-finite loss during LM training (epoch " +
                             std::to_string(report.epochs) + ")");
        }
        if (trial_mse < mse) {
          accepted = true;
          rejections_in_a_row = 0;
          params = trial;
          outputs = trial_out;
          mse = trial_mse;
          mu = std::max(mu / opts.mu_decrease, 1e-20);
          ++report.epochs;
          report.mse_history.push_back(mse);
          report.damping_history.push_back(mu);
          take_snapshots(mse, report.epochs, StopReason::threshold);
        } else {
          detail::unpack_parameters(net, params);
          mu *= opts.mu_increase;
          ++rejections_in_a_row;
          if (mu > opts.mu_max ||
              rejections_in_a_row > opts.max_consecutive_rejections) {
            report.stop_reason = StopReason::stagnation;
            break;
          }
        }
      }
      if (!accepted) break;  // stagnation
      if (mse < opts.mse_target) {
        report.stop_reason = StopReason::threshold;
        break;
      }
    }
  }

  report.final_mse = mse;
  // Thresholds never reached resolve to the final state: a fresh run with
  // that target would have followed the identical trajectory.
  while (!pending.empty()) {
    report.snapshots.push_back(
        {pending.front(), net, report.epochs, mse, report.stop_reason});
    pending.erase(pending.begin());
  }
  return report;
}

}  // namespace sfr
