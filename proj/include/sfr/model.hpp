#pragma once

// Generalized acoustic transfer function assembled from the three trained
// networks per speaker-microphone pair:
//   g(f, Ma) = a~(f, Ma) * exp(i*(phi~(f, Ma) + k~(Ma) * k * s)),
// with phi~ decoded as atan2(sin-output, cos-output), plus the stacked
// bright/dark matrix and a bit-exact binary container.

#include <Eigen/Dense>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "sfr/dataset.hpp"
#include "sfr/geometry.hpp"
#include "sfr/mlp.hpp"

namespace sfr {

struct PairModel {
  int speaker = 0;
  int mic = 0;
  double distance = 0.0;  // s_nm
  Network amplitude_net;  // 2 -> ... -> 1
  Network phase_net;      // 2 -> ... -> 2, outputs (sin, cos)
  Network wavenumber_net; // 1 -> ... -> 1
  AffineScaler f_scaler;
  AffineScaler ma_scaler;
  AffineScaler amp_scaler;
  AffineScaler k_scaler;
};

struct TransferModel {
  double speed_of_sound = 343.0;
  double f_min = 0.0, f_max = 0.0;
  double ma_min = 0.0, ma_max = 0.0;  // trained ranges
  std::uint64_t layout_hash = 0;
  int speaker_count = 0;
  int mic_count = 0;
  std::vector<PairModel> pairs;  // mic-major: index = mic*speaker_count + n

  const PairModel& pair(int speaker, int mic) const {
    const std::size_t idx = std::size_t(mic) * speaker_count + speaker;
    if (speaker < 0 || speaker >= speaker_count || mic < 0 ||
        mic >= mic_count || idx >= pairs.size())
      throw std::invalid_argument("unknown speaker/mic pair requested");
    return pairs[idx];
  }

  bool in_trained_range(double f, double ma) const {
    return f >= f_min && f <= f_max && ma >= ma_min && ma <= ma_max;
  }
};

// Evaluates g for one pair. Queries outside the trained (f, Ma) ranges are
// answered anyway and flagged through `extrapolated` when provided.
inline complexd eval_transfer(const TransferModel& model, int speaker,
                              int mic, double f, double ma,
                              bool* extrapolated = nullptr) {
  if (!(f > 0.0)) throw std::invalid_argument("frequency must be > 0");
  if (extrapolated) *extrapolated = !model.in_trained_range(f, ma);
  const PairModel& pm = model.pair(speaker, mic);

  Eigen::Vector2d fm(pm.f_scaler.scale(f), pm.ma_scaler.scale(ma));
  const double amp =
      pm.amp_scaler.unscale(forward(pm.amplitude_net, VectorXd(fm))(0));
  const VectorXd phase_out = forward(pm.phase_net, VectorXd(fm));
  const double phi = std::atan2(phase_out(0), phase_out(1));
  VectorXd ma_in(1);
  ma_in(0) = pm.ma_scaler.scale(ma);
  const double k_mod =
      pm.k_scaler.unscale(forward(pm.wavenumber_net, ma_in)(0));
  const double k = 2.0 * kPi * f / model.speed_of_sound;
  return std::polar(amp, phi + k_mod * k * pm.distance);
}

struct ComplexSystem {
  Eigen::MatrixXcd transfer;    // (M_b + M_d) x N, bright rows first
  Eigen::VectorXcd goal;
  double lambda = 0.0;
  Eigen::Index bright_rows = 0;
};

// Stacked matrix over bright then dark microphones; mic indices ascend
// within each block, columns follow speaker order.
inline ComplexSystem assemble_matrix(const TransferModel& model,
                                     std::size_t bright_mics,
                                     std::size_t dark_mics, double f,
                                     double ma,
                                     std::size_t* extrapolated_count = nullptr) {
  const std::size_t rows = bright_mics + dark_mics;
  if (rows != std::size_t(model.mic_count))
    throw std::invalid_argument("mic counts do not match the trained model");
  ComplexSystem sys;
  sys.bright_rows = Eigen::Index(bright_mics);
  sys.transfer.resize(rows, model.speaker_count);
  std::size_t flagged = 0;
  for (std::size_t m = 0; m < rows; ++m)
    for (int n = 0; n < model.speaker_count; ++n) {
      bool extra = false;
      sys.transfer(m, n) = eval_transfer(model, n, int(m), f, ma, &extra);
      flagged += extra ? 1 : 0;
    }
  if (extrapolated_count) *extrapolated_count = flagged;
  return sys;
}

// ---- container (binary, versioned, bit-exact round trip) ----

namespace detail {

constexpr char kModelMagic[4] = {'S', 'F', 'R', 'M'};
constexpr std::uint32_t kModelVersion = 1;

inline void write_bytes(std::FILE* f, const void* p, std::size_t n) {
  if (std::fwrite(p, 1, n, f) != n)
    throw NumericError("short write while saving model");
}

inline void read_bytes(std::FILE* f, void* p, std::size_t n) {
  if (std::fread(p, 1, n, f) != n)
    throw ConfigError("model file truncated or unreadable");
}

template <typename T>
void write_pod(std::FILE* f, const T& v) {
  write_bytes(f, &v, sizeof(T));
}

template <typename T>
T read_pod(std::FILE* f) {
  T v;
  read_bytes(f, &v, sizeof(T));
  return v;
}

inline void write_network(std::FILE* f, const Network& net) {
  write_pod<std::uint32_t>(f, std::uint32_t(net.sizes.size()));
  for (const int s : net.sizes) write_pod<std::int32_t>(f, s);
  write_pod<std::uint64_t>(f, net.seed);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) write_pod<double>(f, w(i, j));
    for (Eigen::Index i = 0; i < net.biases[l].size(); ++i)
      write_pod<double>(f, net.biases[l](i));
  }
}

inline Network read_network(std::FILE* f) {
  const auto n_layers = read_pod<std::uint32_t>(f);
  if (n_layers < 3 || n_layers > 64)
    throw ConfigError("model file corrupt: implausible layer count");
  std::vector<int> sizes(n_layers);
  for (auto& s : sizes) {
    s = read_pod<std::int32_t>(f);
    if (s < 1 || s > 1 << 20)
      throw ConfigError("model file corrupt: implausible layer size");
  }
  Network net;
  net.sizes = sizes;
  net.seed = read_pod<std::uint64_t>(f);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    MatrixXd w(sizes[l + 1], sizes[l]);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = read_pod<double>(f);
    VectorXd b(sizes[l + 1]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = read_pod<double>(f);
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

inline void write_scaler(std::FILE* f, const AffineScaler& s) {
  write_pod<double>(f, s.a);
  write_pod<double>(f, s.b);
}

inline AffineScaler read_scaler(std::FILE* f) {
  AffineScaler s;
  s.a = read_pod<double>(f);
  s.b = read_pod<double>(f);
  return s;
}

}  // namespace detail

inline void save_model(const TransferModel& model, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ConfigError("cannot open model file for writing: " + path);
  try {
    detail::write_bytes(f, detail::kModelMagic, 4);
    detail::write_pod<std::uint32_t>(f, detail::kModelVersion);
    detail::write_pod<double>(f, model.speed_of_sound);
    detail::write_pod<double>(f, model.f_min);
    detail::write_pod<double>(f, model.f_max);
    detail::write_pod<double>(f, model.ma_min);
    detail::write_pod<double>(f, model.ma_max);
    detail::write_pod<std::uint64_t>(f, model.layout_hash);
    detail::write_pod<std::int32_t>(f, model.speaker_count);
    detail::write_pod<std::int32_t>(f, model.mic_count);
    detail::write_pod<std::uint64_t>(f, model.pairs.size());
    for (const auto& pm : model.pairs) {
      detail::write_pod<std::int32_t>(f, pm.speaker);
      detail::write_pod<std::int32_t>(f, pm.mic);
      detail::write_pod<double>(f, pm.distance);
      detail::write_scaler(f, pm.f_scaler);
      detail::write_scaler(f, pm.ma_scaler);
      detail::write_scaler(f, pm.amp_scaler);
      detail::write_scaler(f, pm.k_scaler);
      detail::write_network(f, pm.amplitude_net);
      detail::write_network(f, pm.phase_net);
      detail::write_network(f, pm.wavenumber_net);
    }
  } catch (...) {
    std::fclose(f);
    throw;
  }
  if (std::fclose(f) != 0)
    throw NumericError("failed to finish writing model file: " + path);
}

inline TransferModel load_model(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw ConfigError("cannot open model file: " + path);
  TransferModel model;
  try {
    char magic[4];
    detail::read_bytes(f, magic, 4);
    if (std::memcmp(magic, detail::kModelMagic, 4) != 0)
      throw ConfigError("not a transfer model file: " + path);
    const auto version = detail::read_pod<std::uint32_t>(f);
    if (version != detail::kModelVersion)
      throw ConfigError("unsupported model container version " +
                        std::to_string(version) + " (expected " +
                        std::to_string(detail::kModelVersion) + ")");
    model.speed_of_sound = detail::read_pod<double>(f);
    model.f_min = detail::read_pod<double>(f);
    model.f_max = detail::read_pod<double>(f);
    model.ma_min = detail::read_pod<double>(f);
    model.ma_max = detail::read_pod<double>(f);
    model.layout_hash = detail::read_pod<std::uint64_t>(f);
    model.speaker_count = detail::read_pod<std::int32_t>(f);
    model.mic_count = detail::read_pod<std::int32_t>(f);
    const auto n_pairs = detail::read_pod<std::uint64_t>(f);
    if (n_pairs != std::uint64_t(model.speaker_count) * model.mic_count)
      throw ConfigError("model file corrupt: pair count mismatch");
    model.pairs.reserve(n_pairs);
    for (std::uint64_t i = 0; i < n_pairs; ++i) {
      PairModel pm;
      pm.speaker = detail::read_pod<std::int32_t>(f);
      pm.mic = detail::read_pod<std::int32_t>(f);
      pm.distance = detail::read_pod<double>(f);
      pm.f_scaler = detail::read_scaler(f);
      pm.ma_scaler = detail::read_scaler(f);
      pm.amp_scaler = detail::read_scaler(f);
      pm.k_scaler = detail::read_scaler(f);
      pm.amplitude_net = detail::read_network(f);
      pm.phase_net = detail::read_network(f);
      pm.wavenumber_net = detail::read_network(f);
      model.pairs.push_back(std::move(pm));
    }
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return model;
}

}  // namespace sfr
