#pragma once

// Experiment configuration: JSON file with nested blocks, scenario presets
// for the benchmark setups, and a canonical re-serialization that carries
// the explicit layout positions (bit-exact via shortest round-trip
// formatting) and feeds the config hash stamped into every output file.

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfr/geometry.hpp"

namespace sfr {

using nlohmann::json;

enum class Scenario { no_wind, uniform_wind, harsh, bigger_square, noise_study };
enum class PropagatorKind { analytic_free_field, analytic_uniform_flow, euler };

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "no_wind") return Scenario::no_wind;
  if (s == "uniform_wind") return Scenario::uniform_wind;
  if (s == "harsh") return Scenario::harsh;
  if (s == "bigger_square") return Scenario::bigger_square;
  if (s == "noise_study") return Scenario::noise_study;
  throw ConfigError("unknown scenario '" + s + "'");
}

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::no_wind: return "no_wind";
    case Scenario::uniform_wind: return "uniform_wind";
    case Scenario::harsh: return "harsh";
    case Scenario::bigger_square: return "bigger_square";
    case Scenario::noise_study: return "noise_study";
  }
  return "?";
}

inline PropagatorKind propagator_from_string(const std::string& s) {
  if (s == "analytic_free_field") return PropagatorKind::analytic_free_field;
  if (s == "analytic_uniform_flow")
    return PropagatorKind::analytic_uniform_flow;
  if (s == "euler") return PropagatorKind::euler;
  throw ConfigError("unknown propagator '" + s + "'");
}

inline const char* to_string(PropagatorKind k) {
  switch (k) {
    case PropagatorKind::analytic_free_field: return "analytic_free_field";
    case PropagatorKind::analytic_uniform_flow:
      return "analytic_uniform_flow";
    case PropagatorKind::euler: return "euler";
  }
  return "?";
}

struct GeometryConfig {
  double speaker_radius = 0.5;
  int speaker_count = 16;
  Vec3 array_center{0.0, 0.0, 0.0};
  double start_angle = 0.0;
  Vec3 bright_center{0.0, 0.0, 0.0};
  Vec3 dark_center{-1.0, -1.0, 0.0};
  double zone_side = 0.3;
  int boundary_mics = 16;
  bool center_mic = true;
  Vec3 source_position{5.0, 0.0, 0.0};

  SceneLayout build() const {
    SceneLayout layout;
    layout.speakers = build_circular_array(speaker_radius, speaker_count,
                                           array_center, start_angle);
    layout.bright = build_zone(bright_center, zone_side, boundary_mics,
                               center_mic, ZoneKind::bright);
    layout.dark = build_zone(dark_center, zone_side, boundary_mics, center_mic,
                             ZoneKind::dark);
    layout.source.position = source_position;
    if (point_in_zone(layout.bright, source_position) ||
        point_in_zone(layout.dark, source_position))
      throw ConfigError("virtual source must lie outside both zones");
    return layout;
  }
};

struct EulerConfig {
  int n_points = 250;          // 500 reproduces the full-scale grid
  double domain_size = 8.0;    // m
  int n_steps = 800;
  int window = 100;            // steady-state slice
  double temp_gradient = 0.0;  // degC/m
  double source_sigma_cells = 3.0;  // sigma_s in grid spacings
  double sponge_width = 1.2;        // m
  double sponge_strength = 0.0;     // 0 = auto
  double filter_strength = 0.2;
};

struct TrainingGrid {
  double f_min = 200.0, f_max = 1000.0;
  int f_count = 70;
  double ma_min = 0.0, ma_max = 0.0;
  int ma_count = 1;
  double source_amplitude = 1.0;
  double source_phase = 0.0;
  double sample_rate = 48000.0;  // synthesized measurement window (analytic)
  int window_samples = 100;

  std::vector<double> frequencies() const {
    std::vector<double> f(std::max(f_count, 0));
    for (int i = 0; i < f_count; ++i)
      f[i] = f_count == 1
                 ? f_min
                 : f_min + (f_max - f_min) * double(i) / double(f_count - 1);
    return f;
  }
  std::vector<double> machs() const {
    std::vector<double> ma(ma_count);
    for (int i = 0; i < ma_count; ++i)
      ma[i] = ma_count == 1 ? ma_min
                            : ma_min + (ma_max - ma_min) * double(i) /
                                           double(ma_count - 1);
    return ma;
  }
};

struct NetworkConfig {
  std::vector<int> amplitude_hidden{15, 10};
  std::vector<int> phase_hidden{15, 10};
  std::vector<int> wavenumber_hidden{10, 5};
  double mse_target = 1e-7;
  int max_epochs = 2000;
  std::vector<double> snapshot_thresholds;  // extra stopping points to keep
};

struct NoiseConfig {
  bool enabled = false;
  std::vector<double> snr_means_db{30.0};
  std::vector<double> snr_stds_db{0.0};
  std::string mode = "gaussian";  // or "uniform"
};

// One trained model: name plus the temperature gradient its training data
// is simulated with (euler scenarios; analytic scenarios ignore it).
struct ModelSpec {
  std::string name = "model";
  double temp_gradient = 0.0;
};

// One solve/evaluate variant: which model and at which Mach the model is
// queried. The ground truth always sees the physical Mach number.
struct SolveVariant {
  std::string name = "considered";
  std::string model = "model";
  bool evaluate_at_zero_ma = false;  // "neglected wind"
};

struct SolveConfig {
  std::vector<double> frequencies{600.0};
  std::vector<double> machs{0.0};
  std::vector<double> lambdas{0.0};
  bool use_lcurve = false;
  double lcurve_min = 1e-8, lcurve_max = 10.0;
  int lcurve_count = 40;
  NoiseConfig noise;
};

struct EvaluateConfig {
  int zone_grid = 21;       // interior quadrature per side
  int boundary_points = 64; // boundary quadrature
  bool re_goal_denominator = false;  // non-paper RE variant, off by default
  // (f, ma, lambda) triples to emit energy-density maps for
  std::vector<std::array<double, 3>> maps;
  int map_grid = 81;
  double map_extent = 1.6;  // half-size of the plotting window [m]
};

struct ExperimentConfig {
  Scenario scenario = Scenario::no_wind;
  std::uint64_t seed = 1;
  unsigned workers = 2;
  std::string out_dir = "out";
  std::string cache_dir;  // euler sim cache; defaults to <out_dir>/sim_cache
  double speed_of_sound = 343.0;
  PropagatorKind propagator = PropagatorKind::analytic_free_field;
  GeometryConfig geometry;
  EulerConfig euler;
  TrainingGrid training;
  NetworkConfig networks;
  SolveConfig solve;
  EvaluateConfig evaluate;
  std::vector<ModelSpec> models{{"model", 0.0}};
  std::vector<SolveVariant> variants{{"considered", "model", false}};

  const ModelSpec& model_spec(const std::string& name) const {
    for (const auto& m : models)
      if (m.name == name) return m;
    throw ConfigError("variant references unknown model '" + name + "'");
  }
};

namespace detail {

inline json vec3_to_json(const Vec3& v) {
  return json::array(
      {format_exact(v.x), format_exact(v.y), format_exact(v.z)});
}

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError("position must be a 3-element array");
  auto get = [](const json& e) {
    if (e.is_string()) return parse_double(e.get<std::string>());
    return e.get<double>();
  };
  return Vec3{get(j[0]), get(j[1]), get(j[2])};
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void maybe_vec3(const json& j, const char* key, Vec3& out) {
  if (j.contains(key)) out = vec3_from_json(j.at(key));
}

}  // namespace detail

// Scenario presets; explicit config keys override them afterwards.
inline void apply_scenario_defaults(ExperimentConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::no_wind:
      cfg.propagator = PropagatorKind::analytic_free_field;
      cfg.training.ma_min = cfg.training.ma_max = 0.0;
      cfg.training.ma_count = 1;
      cfg.training.f_count = 81;
      cfg.solve.frequencies.clear();
      for (double f = 200.0; f <= 1000.0 + 1e-9; f += 5.0)
        cfg.solve.frequencies.push_back(f);
      cfg.solve.machs = {0.0};
      cfg.solve.lambdas = {0.0, 0.01};
      break;
    case Scenario::bigger_square:
      cfg.propagator = PropagatorKind::analytic_free_field;
      cfg.geometry.zone_side = 0.4;
      cfg.training.ma_min = cfg.training.ma_max = 0.0;
      cfg.training.ma_count = 1;
      cfg.training.f_count = 81;
      cfg.solve.frequencies.clear();
      for (double f = 200.0; f <= 1000.0 + 1e-9; f += 5.0)
        cfg.solve.frequencies.push_back(f);
      cfg.solve.machs = {0.0};
      cfg.solve.lambdas = {0.0, 0.01};
      break;
    case Scenario::uniform_wind:
      cfg.propagator = PropagatorKind::analytic_uniform_flow;
      cfg.training.f_count = 70;
      cfg.training.ma_min = 0.0;
      cfg.training.ma_max = 0.05;
      cfg.training.ma_count = 30;
      cfg.solve.frequencies = {600.0};
      cfg.solve.machs.clear();
      for (double ma = 0.0; ma <= 0.05 + 1e-12; ma += 0.002)
        cfg.solve.machs.push_back(ma);
      cfg.solve.lambdas = {0.0, 0.01, 0.1};
      cfg.variants = {{"considered", "model", false},
                      {"neglected", "model", true}};
      break;
    case Scenario::harsh:
      cfg.propagator = PropagatorKind::euler;
      cfg.euler.temp_gradient = 3.0;
      cfg.training.f_min = 400.0;
      cfg.training.f_max = 800.0;
      cfg.training.f_count = 9;
      cfg.training.ma_min = 0.0;
      cfg.training.ma_max = 0.0275;
      cfg.training.ma_count = 5;
      cfg.solve.frequencies = {600.0};
      cfg.solve.machs = {0.0275};
      cfg.solve.lambdas = {0.0};
      cfg.models = {{"temp_considered", -1.0},  // resolved after overrides
                    {"temp_neglected", 0.0}};
      cfg.variants = {
          {"wind_considered_temp_considered", "temp_considered", false},
          {"wind_considered_temp_neglected", "temp_neglected", false},
          {"wind_neglected_temp_considered", "temp_considered", true},
          {"wind_neglected_temp_neglected", "temp_neglected", true}};
      break;
    case Scenario::noise_study:
      cfg.propagator = PropagatorKind::analytic_free_field;
      cfg.training.ma_min = cfg.training.ma_max = 0.0;
      cfg.training.ma_count = 1;
      cfg.training.f_count = 81;
      cfg.solve.frequencies.clear();
      for (double f = 200.0; f <= 1000.0 + 1e-9; f += 20.0)
        cfg.solve.frequencies.push_back(f);
      cfg.solve.machs = {0.0};
      cfg.solve.use_lcurve = true;
      cfg.solve.noise.enabled = true;
      cfg.solve.noise.snr_means_db = {10.0, 20.0, 30.0};
      cfg.solve.noise.snr_stds_db = {0.0, 2.0, 5.0};
      break;
  }
}

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  if (!j.contains("scenario"))
    throw ConfigError("config must name a scenario");
  cfg.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  apply_scenario_defaults(cfg);

  detail::maybe(j, "seed", cfg.seed);
  detail::maybe(j, "workers", cfg.workers);
  detail::maybe(j, "out_dir", cfg.out_dir);
  detail::maybe(j, "cache_dir", cfg.cache_dir);
  detail::maybe(j, "speed_of_sound", cfg.speed_of_sound);
  if (j.contains("propagator"))
    cfg.propagator =
        propagator_from_string(j.at("propagator").get<std::string>());

  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    detail::maybe(g, "speaker_radius", cfg.geometry.speaker_radius);
    detail::maybe(g, "speaker_count", cfg.geometry.speaker_count);
    detail::maybe_vec3(g, "array_center", cfg.geometry.array_center);
    detail::maybe(g, "start_angle", cfg.geometry.start_angle);
    detail::maybe_vec3(g, "bright_center", cfg.geometry.bright_center);
    detail::maybe_vec3(g, "dark_center", cfg.geometry.dark_center);
    detail::maybe(g, "zone_side", cfg.geometry.zone_side);
    detail::maybe(g, "boundary_mics", cfg.geometry.boundary_mics);
    detail::maybe(g, "center_mic", cfg.geometry.center_mic);
    detail::maybe_vec3(g, "source_position", cfg.geometry.source_position);
  }

  if (j.contains("euler")) {
    const json& e = j.at("euler");
    detail::maybe(e, "n_points", cfg.euler.n_points);
    detail::maybe(e, "domain_size", cfg.euler.domain_size);
    detail::maybe(e, "n_steps", cfg.euler.n_steps);
    detail::maybe(e, "window", cfg.euler.window);
    detail::maybe(e, "temp_gradient", cfg.euler.temp_gradient);
    detail::maybe(e, "source_sigma_cells", cfg.euler.source_sigma_cells);
    detail::maybe(e, "sponge_width", cfg.euler.sponge_width);
    detail::maybe(e, "sponge_strength", cfg.euler.sponge_strength);
    detail::maybe(e, "filter_strength", cfg.euler.filter_strength);
  }

  if (j.contains("training")) {
    const json& t = j.at("training");
    detail::maybe(t, "f_min", cfg.training.f_min);
    detail::maybe(t, "f_max", cfg.training.f_max);
    detail::maybe(t, "f_count", cfg.training.f_count);
    detail::maybe(t, "ma_min", cfg.training.ma_min);
    detail::maybe(t, "ma_max", cfg.training.ma_max);
    detail::maybe(t, "ma_count", cfg.training.ma_count);
    detail::maybe(t, "source_amplitude", cfg.training.source_amplitude);
    detail::maybe(t, "source_phase", cfg.training.source_phase);
    detail::maybe(t, "sample_rate", cfg.training.sample_rate);
    detail::maybe(t, "window_samples", cfg.training.window_samples);
  }

  if (j.contains("networks")) {
    const json& n = j.at("networks");
    detail::maybe(n, "amplitude_hidden", cfg.networks.amplitude_hidden);
    detail::maybe(n, "phase_hidden", cfg.networks.phase_hidden);
    detail::maybe(n, "wavenumber_hidden", cfg.networks.wavenumber_hidden);
    detail::maybe(n, "mse_target", cfg.networks.mse_target);
    detail::maybe(n, "max_epochs", cfg.networks.max_epochs);
    detail::maybe(n, "snapshot_thresholds", cfg.networks.snapshot_thresholds);
  }

  if (j.contains("solve")) {
    const json& s = j.at("solve");
    detail::maybe(s, "frequencies", cfg.solve.frequencies);
    detail::maybe(s, "machs", cfg.solve.machs);
    if (s.contains("lambdas")) {
      if (s.at("lambdas").is_string()) {
        if (s.at("lambdas").get<std::string>() != "lcurve")
          throw ConfigError("solve.lambdas must be a list or \"lcurve\"");
        cfg.solve.use_lcurve = true;
        cfg.solve.lambdas.clear();
      } else {
        cfg.solve.lambdas = s.at("lambdas").get<std::vector<double>>();
        cfg.solve.use_lcurve = false;
      }
    }
    detail::maybe(s, "lcurve_min", cfg.solve.lcurve_min);
    detail::maybe(s, "lcurve_max", cfg.solve.lcurve_max);
    detail::maybe(s, "lcurve_count", cfg.solve.lcurve_count);
    if (s.contains("noise")) {
      const json& nz = s.at("noise");
      detail::maybe(nz, "enabled", cfg.solve.noise.enabled);
      detail::maybe(nz, "snr_means_db", cfg.solve.noise.snr_means_db);
      detail::maybe(nz, "snr_stds_db", cfg.solve.noise.snr_stds_db);
      detail::maybe(nz, "mode", cfg.solve.noise.mode);
    }
  }

  if (j.contains("evaluate")) {
    const json& e = j.at("evaluate");
    detail::maybe(e, "zone_grid", cfg.evaluate.zone_grid);
    detail::maybe(e, "boundary_points", cfg.evaluate.boundary_points);
    detail::maybe(e, "re_goal_denominator",
                  cfg.evaluate.re_goal_denominator);
    detail::maybe(e, "map_grid", cfg.evaluate.map_grid);
    detail::maybe(e, "map_extent", cfg.evaluate.map_extent);
    if (e.contains("maps")) {
      cfg.evaluate.maps.clear();
      for (const auto& m : e.at("maps")) {
        if (!m.is_array() || m.size() != 3)
          throw ConfigError("evaluate.maps entries are [f, ma, lambda]");
        cfg.evaluate.maps.push_back(
            {m[0].get<double>(), m[1].get<double>(), m[2].get<double>()});
      }
    }
  }

  if (j.contains("models")) {
    cfg.models.clear();
    for (const auto& m : j.at("models")) {
      ModelSpec spec;
      detail::maybe(m, "name", spec.name);
      detail::maybe(m, "temp_gradient", spec.temp_gradient);
      cfg.models.push_back(spec);
    }
  }
  // Harsh preset marks the considered-temperature model with -1 so a
  // euler.temp_gradient override lands in the right place.
  for (auto& m : cfg.models)
    if (m.temp_gradient < 0.0) m.temp_gradient = cfg.euler.temp_gradient;

  if (j.contains("variants")) {
    cfg.variants.clear();
    for (const auto& v : j.at("variants")) {
      SolveVariant var;
      detail::maybe(v, "name", var.name);
      detail::maybe(v, "model", var.model);
      detail::maybe(v, "evaluate_at_zero_ma", var.evaluate_at_zero_ma);
      cfg.variants.push_back(var);
    }
  }

  for (const auto& v : cfg.variants) cfg.model_spec(v.model);
  if (cfg.training.f_count < 0 || cfg.training.ma_count < 1)
    throw ConfigError("training grid must have at least one Mach sample");
  if (cfg.workers < 1) cfg.workers = 1;
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return parse_config(j);
}

// Canonical serialization of the effective config, including the explicit
// layout positions. Feeds the config hash and the reproducibility record.
inline json config_to_json(const ExperimentConfig& cfg) {
  // out_dir and workers are deliberately absent: artifacts must be
  // byte-identical regardless of where they are written and how many
  // workers computed them.
  json j;
  j["scenario"] = to_string(cfg.scenario);
  j["seed"] = cfg.seed;
  j["speed_of_sound"] = format_exact(cfg.speed_of_sound);
  j["propagator"] = to_string(cfg.propagator);

  json g;
  g["speaker_radius"] = format_exact(cfg.geometry.speaker_radius);
  g["speaker_count"] = cfg.geometry.speaker_count;
  g["array_center"] = detail::vec3_to_json(cfg.geometry.array_center);
  g["start_angle"] = format_exact(cfg.geometry.start_angle);
  g["bright_center"] = detail::vec3_to_json(cfg.geometry.bright_center);
  g["dark_center"] = detail::vec3_to_json(cfg.geometry.dark_center);
  g["zone_side"] = format_exact(cfg.geometry.zone_side);
  g["boundary_mics"] = cfg.geometry.boundary_mics;
  g["center_mic"] = cfg.geometry.center_mic;
  g["source_position"] = detail::vec3_to_json(cfg.geometry.source_position);
  j["geometry"] = g;

  // Layout blocks with explicit positions (shortest round-trip formatting,
  // always >= 15 significant digits of fidelity).
  const SceneLayout layout = cfg.geometry.build();
  json lay;
  lay["speakers"] = json::array();
  for (const auto& s : layout.speakers.speakers)
    lay["speakers"].push_back(detail::vec3_to_json(s));
  lay["bright_mics"] = json::array();
  for (const auto& m : layout.bright.mics())
    lay["bright_mics"].push_back(detail::vec3_to_json(m));
  lay["dark_mics"] = json::array();
  for (const auto& m : layout.dark.mics())
    lay["dark_mics"].push_back(detail::vec3_to_json(m));
  lay["source"] = detail::vec3_to_json(layout.source.position);
  j["layout"] = lay;

  json e;
  e["n_points"] = cfg.euler.n_points;
  e["domain_size"] = format_exact(cfg.euler.domain_size);
  e["n_steps"] = cfg.euler.n_steps;
  e["window"] = cfg.euler.window;
  e["temp_gradient"] = format_exact(cfg.euler.temp_gradient);
  e["source_sigma_cells"] = format_exact(cfg.euler.source_sigma_cells);
  e["sponge_width"] = format_exact(cfg.euler.sponge_width);
  e["sponge_strength"] = format_exact(cfg.euler.sponge_strength);
  e["filter_strength"] = format_exact(cfg.euler.filter_strength);
  j["euler"] = e;

  json t;
  t["f_min"] = format_exact(cfg.training.f_min);
  t["f_max"] = format_exact(cfg.training.f_max);
  t["f_count"] = cfg.training.f_count;
  t["ma_min"] = format_exact(cfg.training.ma_min);
  t["ma_max"] = format_exact(cfg.training.ma_max);
  t["ma_count"] = cfg.training.ma_count;
  t["source_amplitude"] = format_exact(cfg.training.source_amplitude);
  t["source_phase"] = format_exact(cfg.training.source_phase);
  t["sample_rate"] = format_exact(cfg.training.sample_rate);
  t["window_samples"] = cfg.training.window_samples;
  j["training"] = t;

  json n;
  n["amplitude_hidden"] = cfg.networks.amplitude_hidden;
  n["phase_hidden"] = cfg.networks.phase_hidden;
  n["wavenumber_hidden"] = cfg.networks.wavenumber_hidden;
  n["mse_target"] = format_exact(cfg.networks.mse_target);
  n["max_epochs"] = cfg.networks.max_epochs;
  json snaps = json::array();
  for (const double s : cfg.networks.snapshot_thresholds)
    snaps.push_back(format_exact(s));
  n["snapshot_thresholds"] = snaps;
  j["networks"] = n;

  json s;
  auto dlist = [](const std::vector<double>& v) {
    json a = json::array();
    for (const double x : v) a.push_back(format_exact(x));
    return a;
  };
  s["frequencies"] = dlist(cfg.solve.frequencies);
  s["machs"] = dlist(cfg.solve.machs);
  if (cfg.solve.use_lcurve)
    s["lambdas"] = "lcurve";
  else
    s["lambdas"] = dlist(cfg.solve.lambdas);
  s["lcurve_min"] = format_exact(cfg.solve.lcurve_min);
  s["lcurve_max"] = format_exact(cfg.solve.lcurve_max);
  s["lcurve_count"] = cfg.solve.lcurve_count;
  json nz;
  nz["enabled"] = cfg.solve.noise.enabled;
  nz["snr_means_db"] = dlist(cfg.solve.noise.snr_means_db);
  nz["snr_stds_db"] = dlist(cfg.solve.noise.snr_stds_db);
  nz["mode"] = cfg.solve.noise.mode;
  s["noise"] = nz;
  j["solve"] = s;

  json ev;
  ev["zone_grid"] = cfg.evaluate.zone_grid;
  ev["boundary_points"] = cfg.evaluate.boundary_points;
  ev["re_goal_denominator"] = cfg.evaluate.re_goal_denominator;
  ev["map_grid"] = cfg.evaluate.map_grid;
  ev["map_extent"] = format_exact(cfg.evaluate.map_extent);
  json maps = json::array();
  for (const auto& m : cfg.evaluate.maps)
    maps.push_back(json::array({m[0], m[1], m[2]}));
  ev["maps"] = maps;
  j["evaluate"] = ev;

  json models = json::array();
  for (const auto& m : cfg.models) {
    json mj;
    mj["name"] = m.name;
    mj["temp_gradient"] = format_exact(m.temp_gradient);
    models.push_back(mj);
  }
  j["models"] = models;

  json variants = json::array();
  for (const auto& v : cfg.variants) {
    json vj;
    vj["name"] = v.name;
    vj["model"] = v.model;
    vj["evaluate_at_zero_ma"] = v.evaluate_at_zero_ma;
    variants.push_back(vj);
  }
  j["variants"] = variants;
  return j;
}

inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a(config_to_json(cfg).dump());
}

// Rebuilds a layout from the explicit blocks of a serialized config.
inline SceneLayout layout_from_json(const json& lay, const GeometryConfig& g) {
  SceneLayout layout;
  layout.speakers.array_radius = g.speaker_radius;
  layout.speakers.center = g.array_center;
  for (const auto& s : lay.at("speakers"))
    layout.speakers.speakers.push_back(detail::vec3_from_json(s));
  auto fill_zone = [&](Zone& zone, const json& mics, const Vec3& center,
                       ZoneKind kind) {
    zone.center = center;
    zone.side = g.zone_side;
    zone.kind = kind;
    std::vector<Vec3> pts;
    for (const auto& m : mics) pts.push_back(detail::vec3_from_json(m));
    if (g.center_mic) {
      zone.center_mic = pts.back();
      pts.pop_back();
    }
    zone.boundary_mics = pts;
  };
  fill_zone(layout.bright, lay.at("bright_mics"), g.bright_center,
            ZoneKind::bright);
  fill_zone(layout.dark, lay.at("dark_mics"), g.dark_center, ZoneKind::dark);
  layout.source.position = detail::vec3_from_json(lay.at("source"));
  validate_layout(layout.speakers);
  validate_zone(layout.bright);
  validate_zone(layout.dark);
  return layout;
}

}  // namespace sfr
