#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "sfr/analytic.hpp"
#include "sfr/dataset.hpp"
#include "sfr/model.hpp"

using namespace sfr;

namespace {

// Pair model whose nets output constants (zero weights, chosen output
// biases) with identity scalers; handy for assembling synthetic models.
PairModel const_pair(int speaker, int mic, double dist, double amp,
                     double sin_out, double cos_out, double k_mod) {
  PairModel pm;
  pm.speaker = speaker;
  pm.mic = mic;
  pm.distance = dist;
  pm.amplitude_net = init_network({2, 3, 1}, 1);
  pm.phase_net = init_network({2, 3, 2}, 2);
  pm.wavenumber_net = init_network({1, 3, 1}, 3);
  for (Network* net : {&pm.amplitude_net, &pm.phase_net, &pm.wavenumber_net})
    for (auto& w : net->weights) w.setZero();
  for (Network* net : {&pm.amplitude_net, &pm.phase_net, &pm.wavenumber_net})
    for (auto& b : net->biases) b.setZero();
  pm.amplitude_net.biases.back()(0) = amp;
  pm.phase_net.biases.back()(0) = sin_out;
  pm.phase_net.biases.back()(1) = cos_out;
  pm.wavenumber_net.biases.back()(0) = k_mod;
  pm.f_scaler = {1.0, 0.0};
  pm.ma_scaler = {1.0, 0.0};
  pm.amp_scaler = {1.0, 0.0};
  pm.k_scaler = {1.0, 0.0};
  return pm;
}

TransferModel synthetic_model(int n_speakers, int n_mics) {
  TransferModel model;
  model.speed_of_sound = 343.0;
  model.f_min = 200.0;
  model.f_max = 1000.0;
  model.ma_min = 0.0;
  model.ma_max = 0.05;
  model.layout_hash = 0x1234;
  model.speaker_count = n_speakers;
  model.mic_count = n_mics;
  Rng rng(55);
  for (int m = 0; m < n_mics; ++m)
    for (int n = 0; n < n_speakers; ++n)
      model.pairs.push_back(const_pair(n, m, 0.5 + 0.01 * (m * 31 + n),
                                       rng.uniform(0.01, 1.0),
                                       rng.uniform(-0.7, 0.7),
                                       rng.uniform(-0.7, 0.7),
                                       rng.uniform(0.9, 1.1)));
  return model;
}

}  // namespace

TEST_CASE("transfer evaluation composes the three nets") {
  // sin-output 1, cos-output 0 decodes to phi = pi/2; k~ = 0 removes the
  // travel term entirely.
  TransferModel model;
  model.speed_of_sound = 343.0;
  model.f_min = 100.0;
  model.f_max = 1000.0;
  model.speaker_count = 1;
  model.mic_count = 1;
  model.pairs.push_back(const_pair(0, 0, 1.0, 0.25, 1.0, 0.0, 0.0));
  const complexd g = eval_transfer(model, 0, 0, 600.0, 0.0);
  CHECK(std::abs(g) == Catch::Approx(0.25));
  CHECK(std::arg(g) == Catch::Approx(kPi / 2.0));

  // k~ = 1 adds k*s on top.
  model.pairs[0] = const_pair(0, 0, 1.0, 0.25, 0.0, 1.0, 1.0);
  const double f = 123.0;
  const complexd g2 = eval_transfer(model, 0, 0, f, 0.0);
  const double k = 2.0 * kPi * f / 343.0;
  CHECK(std::abs(wrap_phase(std::arg(g2) - k * 1.0)) < 1e-12);

  // Zero amplitude output kills the value regardless of phase nets.
  model.pairs[0] = const_pair(0, 0, 1.0, 0.0, 0.3, -0.8, 1.0);
  CHECK(std::abs(eval_transfer(model, 0, 0, 600.0, 0.0)) == 0.0);
}

TEST_CASE("|g| is the amplitude-net value; the phase factor is unit modulus") {
  const TransferModel model = synthetic_model(3, 4);
  Rng rng(66);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = int(rng.uniform01() * 3);
    const int m = int(rng.uniform01() * 4);
    const double f = rng.uniform(200, 1000);
    const double ma = rng.uniform(0, 0.05);
    const PairModel& pm = model.pair(n, m);
    Eigen::Vector2d in(pm.f_scaler.scale(f), pm.ma_scaler.scale(ma));
    const double amp =
        pm.amp_scaler.unscale(forward(pm.amplitude_net, VectorXd(in))(0));
    // |polar(a, phi)| costs a couple of ulp; the magnitude is not a
    // separately learned quantity.
    CHECK(std::abs(eval_transfer(model, n, m, f, ma)) ==
          Catch::Approx(std::abs(amp)).epsilon(1e-14));
  }
}

TEST_CASE("extrapolation outside the trained ranges is flagged, not fatal") {
  const TransferModel model = synthetic_model(2, 2);
  bool flag = true;
  eval_transfer(model, 0, 0, 600.0, 0.01, &flag);
  CHECK_FALSE(flag);
  eval_transfer(model, 0, 0, 1200.0, 0.01, &flag);
  CHECK(flag);
  eval_transfer(model, 0, 0, 600.0, 0.2, &flag);
  CHECK(flag);
  CHECK_THROWS_AS(eval_transfer(model, 0, 0, -1.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_transfer(model, 5, 0, 600.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("matrix assembly stacks bright rows before dark rows") {
  const TransferModel model = synthetic_model(1, 2);
  const ComplexSystem sys = assemble_matrix(model, 1, 1, 600.0, 0.0);
  REQUIRE(sys.transfer.rows() == 2);
  REQUIRE(sys.transfer.cols() == 1);
  CHECK(sys.bright_rows == 1);
  CHECK(sys.transfer(0, 0) == eval_transfer(model, 0, 0, 600.0, 0.0));
  CHECK(sys.transfer(1, 0) == eval_transfer(model, 0, 1, 600.0, 0.0));
}

TEST_CASE("benchmark-sized assembly is 34 x 16 and matches eval_transfer") {
  const TransferModel model = synthetic_model(16, 34);
  std::size_t extrapolated = 0;
  const ComplexSystem sys =
      assemble_matrix(model, 17, 17, 600.0, 0.02, &extrapolated);
  REQUIRE(sys.transfer.rows() == 34);
  REQUIRE(sys.transfer.cols() == 16);
  CHECK(extrapolated == 0);
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = int(rng.uniform01() * 34);
    const int n = int(rng.uniform01() * 16);
    CHECK(sys.transfer(m, n) == eval_transfer(model, n, m, 600.0, 0.02));
  }
  CHECK_THROWS_AS(assemble_matrix(model, 16, 17, 600.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("model container round trip is bit exact") {
  const TransferModel model = synthetic_model(16, 34);
  const std::string path = "test_model_roundtrip.sfrm";
  save_model(model, path);
  const TransferModel loaded = load_model(path);
  REQUIRE(loaded.pairs.size() == 544);
  CHECK(loaded.layout_hash == model.layout_hash);

  Rng rng(88);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = int(rng.uniform01() * 16);
    const int m = int(rng.uniform01() * 34);
    const double f = rng.uniform(200, 1000);
    const double ma = rng.uniform(0, 0.05);
    const complexd a = eval_transfer(model, n, m, f, ma);
    const complexd b = eval_transfer(loaded, n, m, f, ma);
    CHECK(a.real() == b.real());
    CHECK(a.imag() == b.imag());
  }

  // Saving the loaded model reproduces the file byte for byte.
  const std::string path2 = "test_model_roundtrip2.sfrm";
  save_model(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string bytes1((std::istreambuf_iterator<char>(f1)),
                           std::istreambuf_iterator<char>());
  const std::string bytes2((std::istreambuf_iterator<char>(f2)),
                           std::istreambuf_iterator<char>());
  CHECK(bytes1 == bytes2);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("truncated and wrong-version containers are rejected cleanly") {
  const TransferModel model = synthetic_model(2, 3);
  const std::string path = "test_model_bad.sfrm";
  save_model(model, path);

  // Truncate to half size.
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  CHECK_THROWS_AS(load_model(path), ConfigError);

  // Corrupt the version field (bytes 4..7).
  save_model(model, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const std::uint32_t bad = 999;
    f.write(reinterpret_cast<const char*>(&bad), 4);
  }
  try {
    load_model(path);
    FAIL("expected version error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("trained free-field model matches the analytic kernel") {
  // Two speakers, two mics, free field at Ma = 0: train the three nets per
  // pair and compare g against the Green's function on the trained grid.
  const double c = 343.0;
  const std::vector<Vec3> speakers{{0.5, 0, 0}, {-0.5, 0, 0}};
  const std::vector<Vec3> mics{{0.0, 0.1, 0}, {-0.9, -1.1, 0}};

  TransferModel model;
  model.speed_of_sound = c;
  model.f_min = 200.0;
  model.f_max = 1000.0;
  model.ma_min = model.ma_max = 0.0;
  model.speaker_count = 2;
  model.mic_count = 2;

  const int n_f = 25;
  for (int m = 0; m < 2; ++m)
    for (int n = 0; n < 2; ++n) {
      std::vector<TransferSample> samples;
      for (int i = 0; i < n_f; ++i) {
        const double f = 200.0 + 800.0 * i / (n_f - 1);
        const complexd g =
            greens_free_field_3d(speakers[n], mics[m], 2.0 * kPi * f, c);
        TransferSample s;
        s.f = f;
        s.ma = 0.0;
        s.speaker = n;
        s.mic = m;
        s.amp = std::abs(g);
        s.phase = wrap_phase(std::arg(g));
        samples.push_back(s);
      }
      const double dist = pair_distance(speakers[n], mics[m]);
      const PairDataset ds = build_pair_dataset(samples, dist, c);

      MatrixXd features(2, n_f), amp_t(1, n_f), phase_t(2, n_f);
      for (int i = 0; i < n_f; ++i) {
        features(0, i) = ds.f_scaler.scale(ds.f[i]);
        features(1, i) = ds.ma_scaler.scale(ds.ma[i]);
        amp_t(0, i) = ds.amp_scaler.scale(ds.a_tilde[i]);
        phase_t(0, i) = ds.v2[i];
        phase_t(1, i) = ds.v1[i];
      }
      MatrixXd k_f(1, 1), k_t(1, 1);
      k_f(0, 0) = ds.ma_scaler.scale(0.0);
      k_t(0, 0) = ds.k_scaler.scale(ds.k_tilde[0]);

      TrainOptions opts;
      opts.mse_target = 1e-7;
      opts.max_epochs = 500;
      PairModel pm;
      pm.speaker = n;
      pm.mic = m;
      pm.distance = dist;
      pm.f_scaler = ds.f_scaler;
      pm.ma_scaler = ds.ma_scaler;
      pm.amp_scaler = ds.amp_scaler;
      pm.k_scaler = ds.k_scaler;
      pm.amplitude_net = init_network({2, 15, 10, 1}, 1000 + m * 2 + n);
      pm.phase_net = init_network({2, 15, 10, 2}, 2000 + m * 2 + n);
      pm.wavenumber_net = init_network({1, 10, 5, 1}, 3000 + m * 2 + n);
      REQUIRE(train_lm(pm.amplitude_net, features, amp_t, opts).stop_reason ==
              StopReason::threshold);
      REQUIRE(train_lm(pm.phase_net, features, phase_t, opts).stop_reason ==
              StopReason::threshold);
      REQUIRE(train_lm(pm.wavenumber_net, k_f, k_t, opts).stop_reason ==
              StopReason::threshold);
      model.pairs.push_back(pm);
    }

  for (int m = 0; m < 2; ++m)
    for (int n = 0; n < 2; ++n)
      for (int i = 0; i < n_f; ++i) {
        const double f = 200.0 + 800.0 * i / (n_f - 1);
        const complexd truth =
            greens_free_field_3d(speakers[n], mics[m], 2.0 * kPi * f, c);
        const complexd learned = eval_transfer(model, n, m, f, 0.0);
        CHECK(std::abs(learned) ==
              Catch::Approx(std::abs(truth)).epsilon(0.01));
        CHECK(std::abs(wrap_phase(std::arg(learned) - std::arg(truth))) <
              0.05);
      }
}
