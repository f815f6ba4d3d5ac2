#include <catch2/catch_amalgamated.hpp>

#include "sfr/mlp.hpp"

using namespace sfr;

TEST_CASE("initialization is deterministic and rejects bad shapes") {
  const auto a = init_network({2, 15, 10, 1}, 1);
  const auto b = init_network({2, 15, 10, 1}, 1);
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l] == b.biases[l]);
  }
  const auto c = init_network({2, 15, 10, 1}, 2);
  CHECK(a.weights[0] != c.weights[0]);
  CHECK_THROWS_AS(init_network({2, 1}, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_network({2, 0, 1}, 1), std::invalid_argument);
}

TEST_CASE("parameter count formula") {
  CHECK(init_network({1, 10, 5, 1}, 7).parameter_count() == 81);
  CHECK(init_network({2, 15, 10, 1}, 7).parameter_count() ==
        2 * 15 + 15 + 15 * 10 + 10 + 10 * 1 + 1);
  CHECK(init_network({2, 15, 10, 2}, 7).parameter_count() ==
        2 * 15 + 15 + 15 * 10 + 10 + 10 * 2 + 2);
}

TEST_CASE("forward pass pieces") {
  // All-zero weights: output 0 everywhere.
  Network net = init_network({2, 4, 3, 1}, 5);
  for (auto& w : net.weights) w.setZero();
  for (auto& b : net.biases) b.setZero();
  MatrixXd x(2, 7);
  x.setRandom();
  CHECK(forward(net, x).cwiseAbs().maxCoeff() == 0.0);

  // Single hidden neuron with unit weights: output tanh(x).
  Network tiny = init_network({1, 1, 1}, 5);
  tiny.weights[0](0, 0) = 1.0;
  tiny.biases[0](0) = 0.0;
  tiny.weights[1](0, 0) = 1.0;
  tiny.biases[1](0) = 0.0;
  for (const double v : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    VectorXd in(1);
    in(0) = v;
    CHECK(forward(tiny, in)(0) == Catch::Approx(std::tanh(v)).epsilon(1e-14));
  }

  // Batch forward equals per-sample forwards.
  Network rnd = init_network({2, 6, 5, 2}, 9);
  MatrixXd batch(2, 11);
  batch.setRandom();
  const MatrixXd y = forward(rnd, batch);
  for (Eigen::Index i = 0; i < batch.cols(); ++i) {
    const VectorXd yi = forward(rnd, VectorXd(batch.col(i)));
    CHECK((y.col(i) - yi).cwiseAbs().maxCoeff() < 1e-14);
  }

  VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(forward(rnd, wrong), std::invalid_argument);
}

TEST_CASE("analytic Jacobian matches finite differences") {
  Rng rng(33);
  for (int trial = 0; trial < 12; ++trial) {
    const std::vector<std::vector<int>> shapes = {
        {2, 15, 10, 1}, {2, 15, 10, 2}, {1, 10, 5, 1}, {3, 4, 2}};
    const auto& sizes = shapes[trial % shapes.size()];
    Network net = init_network(sizes, 100 + trial);
    const Eigen::Index n_samples = 7;
    MatrixXd x(sizes.front(), n_samples);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x.data()[i] = rng.uniform(-1.5, 1.5);

    const MatrixXd jac = jacobian(net, x);
    REQUIRE(jac.rows() == n_samples * net.outputs());
    REQUIRE(jac.cols() == Eigen::Index(net.parameter_count()));

    VectorXd params;
    detail::pack_parameters(net, params);
    const double step = 1e-6;
    double max_rel = 0.0;
    for (Eigen::Index pidx = 0; pidx < params.size(); ++pidx) {
      VectorXd plus = params, minus = params;
      plus(pidx) += step;
      minus(pidx) -= step;
      detail::unpack_parameters(net, plus);
      const MatrixXd yp = forward(net, x);
      detail::unpack_parameters(net, minus);
      const MatrixXd ym = forward(net, x);
      detail::unpack_parameters(net, params);
      for (Eigen::Index s = 0; s < n_samples; ++s)
        for (int o = 0; o < net.outputs(); ++o) {
          const double fd = (yp(o, s) - ym(o, s)) / (2.0 * step);
          const double an = jac(s * net.outputs() + o, pidx);
          max_rel = std::max(max_rel,
                             std::abs(fd - an) / std::max(1.0, std::abs(an)));
        }
    }
    CHECK(max_rel < 1e-6);
  }
}

TEST_CASE("Jacobian bias columns at zero input") {
  // With zero input and zero weights the bias of the output layer has
  // derivative exactly one; hidden biases propagate through the layer
  // gains (tanh'(0) = 1 times the downstream weights).
  Network net = init_network({1, 2, 1}, 3);
  for (auto& w : net.weights) w.setZero();
  for (auto& b : net.biases) b.setZero();
  net.weights[1](0, 0) = 0.7;
  net.weights[1](0, 1) = -0.4;
  MatrixXd x(1, 1);
  x.setZero();
  const MatrixXd jac = jacobian(net, x);
  // Parameter order: W0 (2), b0 (2), W1 (2), b1 (1).
  CHECK(jac(0, 2) == Catch::Approx(0.7));    // d y / d b0[0]
  CHECK(jac(0, 3) == Catch::Approx(-0.4));   // d y / d b0[1]
  CHECK(jac(0, 6) == Catch::Approx(1.0));    // d y / d b1
  CHECK(jac(0, 0) == Catch::Approx(0.0).margin(1e-15));  // W0 at zero input
}

TEST_CASE("LM fits a realizable affine function fast") {
  // Inputs on [0, 1], the project's feature convention.
  Network net = init_network({1, 10, 5, 1}, 42);
  MatrixXd x(1, 20), y(1, 20);
  for (int i = 0; i < 20; ++i) {
    x(0, i) = i / 19.0;
    y(0, i) = 2.0 * x(0, i) + 1.0;
  }
  TrainOptions opts;
  opts.mse_target = 1e-10;
  opts.max_epochs = 50;
  const TrainReport report = train_lm(net, x, y, opts);
  CHECK(report.stop_reason == StopReason::threshold);
  CHECK(report.final_mse < 1e-10);
  CHECK(report.epochs < 50);
}

TEST_CASE("LM reaches 1e-7 on a sine benchmark across seeds") {
  MatrixXd x(1, 70), y(1, 70);
  for (int i = 0; i < 70; ++i) {
    x(0, i) = double(i) / 69.0;
    y(0, i) = std::sin(2.0 * kPi * x(0, i));
  }
  int successes = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Network net = init_network({1, 10, 5, 1}, seed);
    TrainOptions opts;
    opts.mse_target = 1e-7;
    opts.max_epochs = 400;
    const TrainReport report = train_lm(net, x, y, opts);
    if (report.stop_reason == StopReason::threshold) ++successes;
  }
  CHECK(successes >= 4);
}

TEST_CASE("training stops early at a loose threshold") {
  MatrixXd x(1, 40), y(1, 40);
  for (int i = 0; i < 40; ++i) {
    x(0, i) = double(i) / 39.0;
    y(0, i) = std::sin(2.0 * kPi * x(0, i));
  }
  Network net = init_network({1, 10, 5, 1}, 4);
  TrainOptions opts;
  opts.mse_target = 1e-1;
  const TrainReport report = train_lm(net, x, y, opts);
  CHECK(report.stop_reason == StopReason::threshold);
  CHECK(report.final_mse < 1e-1);
  CHECK(report.epochs <= 10);
}

TEST_CASE("accepted steps never increase the loss") {
  MatrixXd x(2, 60), y(1, 60);
  Rng rng(8);
  for (int i = 0; i < 60; ++i) {
    x(0, i) = rng.uniform(0, 1);
    x(1, i) = rng.uniform(0, 1);
    y(0, i) = std::sin(3.0 * x(0, i)) * std::cos(2.0 * x(1, i));
  }
  Network net = init_network({2, 15, 10, 1}, 77);
  TrainOptions opts;
  opts.mse_target = 1e-9;
  opts.max_epochs = 120;
  const TrainReport report = train_lm(net, x, y, opts);
  REQUIRE(report.mse_history.size() >= 2);
  for (std::size_t i = 1; i < report.mse_history.size(); ++i)
    CHECK(report.mse_history[i] <= report.mse_history[i - 1]);
  CHECK(report.damping_history.size() == report.mse_history.size());
}

TEST_CASE("training is deterministic and consistent with evaluation") {
  MatrixXd x(1, 30), y(1, 30);
  for (int i = 0; i < 30; ++i) {
    x(0, i) = double(i) / 29.0;
    y(0, i) = 0.3 * x(0, i) * x(0, i) - 0.5 * x(0, i);
  }
  TrainOptions opts;
  opts.mse_target = 1e-8;
  opts.max_epochs = 200;
  Network a = init_network({1, 10, 5, 1}, 11);
  Network b = init_network({1, 10, 5, 1}, 11);
  const TrainReport ra = train_lm(a, x, y, opts);
  const TrainReport rb = train_lm(b, x, y, opts);
  CHECK(ra.final_mse == rb.final_mse);
  CHECK(ra.epochs == rb.epochs);
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    CHECK(a.weights[l] == b.weights[l]);

  // Evaluating at the training points reproduces the reported loss.
  const double mse = mean_squared_error(forward(a, x), y);
  CHECK(mse == Catch::Approx(ra.final_mse).epsilon(1e-12));
}

TEST_CASE("snapshots freeze the trajectory at each threshold") {
  MatrixXd x(1, 50), y(1, 50);
  for (int i = 0; i < 50; ++i) {
    x(0, i) = double(i) / 49.0;
    y(0, i) = std::sin(2.0 * kPi * x(0, i));
  }
  TrainOptions opts;
  opts.mse_target = 1e-8;
  opts.max_epochs = 400;
  opts.snapshot_thresholds = {1e-2, 1e-4, 1e-6};
  Network net = init_network({1, 10, 5, 1}, 19);
  const TrainReport report = train_lm(net, x, y, opts);
  REQUIRE(report.snapshots.size() == 3);
  for (const auto& snap : report.snapshots) {
    CHECK(snap.mse < snap.threshold);
    // A fresh run with this target must reproduce the snapshot exactly.
    Network fresh = init_network({1, 10, 5, 1}, 19);
    TrainOptions fresh_opts = opts;
    fresh_opts.mse_target = snap.threshold;
    fresh_opts.snapshot_thresholds.clear();
    const TrainReport fresh_report = train_lm(fresh, x, y, fresh_opts);
    CHECK(fresh_report.epochs == snap.epochs);
    CHECK(fresh_report.final_mse == snap.mse);
    for (std::size_t l = 0; l < fresh.weights.size(); ++l)
      CHECK(fresh.weights[l] == snap.network.weights[l]);
  }
}

TEST_CASE("mismatched shapes are rejected") {
  Network net = init_network({2, 4, 1}, 1);
  MatrixXd x(2, 5), y(2, 5);
  x.setZero();
  y.setZero();
  CHECK_THROWS_AS(train_lm(net, x, y, {}), std::invalid_argument);
  MatrixXd y2(1, 4);
  y2.setZero();
  CHECK_THROWS_AS(train_lm(net, x, y2, {}), std::invalid_argument);
}
