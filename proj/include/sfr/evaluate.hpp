#pragma once

// Evaluation half of the pipeline: euler unit-response cache, metric
// computation against the ground-truth propagator, energy-density maps and
// the summary report tables.

#include <iomanip>
#include <map>
#include <memory>

#include "sfr/pipeline.hpp"

namespace sfr {

// Evaluation point sets: zone quadratures, bright-zone boundary quadrature
// and (optionally) the plotting grid. Stored concatenated so one euler run
// can probe everything.
struct EvalPoints {
  std::vector<Vec3> bright, dark, boundary, map;
  std::vector<double> bright_w, dark_w, boundary_w;

  std::vector<Vec3> all() const {
    std::vector<Vec3> pts = bright;
    pts.insert(pts.end(), dark.begin(), dark.end());
    pts.insert(pts.end(), boundary.begin(), boundary.end());
    pts.insert(pts.end(), map.begin(), map.end());
    return pts;
  }
};

inline EvalPoints build_eval_points(const ExperimentConfig& cfg,
                                    const SceneLayout& layout,
                                    bool with_map) {
  EvalPoints pts;
  zone_quadrature(layout.bright, cfg.evaluate.zone_grid, pts.bright,
                  pts.bright_w);
  zone_quadrature(layout.dark, cfg.evaluate.zone_grid, pts.dark, pts.dark_w);
  boundary_quadrature(layout.bright, cfg.evaluate.boundary_points,
                      pts.boundary, pts.boundary_w);
  if (with_map) {
    const int n = cfg.evaluate.map_grid;
    const double e = cfg.evaluate.map_extent;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        pts.map.push_back({-e + 2.0 * e * i / (n - 1),
                           -e + 2.0 * e * j / (n - 1), 0.0});
  }
  return pts;
}

inline bool maps_requested_at(const ExperimentConfig& cfg, double f,
                              double ma) {
  for (const auto& m : cfg.evaluate.maps)
    if (std::abs(m[0] - f) < 1e-9 && std::abs(m[1] - ma) < 1e-9) return true;
  return false;
}

// Ground-truth responses from cached euler runs: per speaker, the complex
// unit response extracted from the steady-state window at every probe.
class EulerCachePropagator : public Propagator {
 public:
  EulerCachePropagator(const ExperimentConfig& cfg, double f, double ma,
                       const std::vector<Vec3>& points, bool allow_run)
      : f_(f), ma_(ma) {
    const std::uint64_t hash = config_hash(cfg);
    const std::string ps = probeset_tag(cfg, points);
    for (std::size_t i = 0; i < points.size(); ++i)
      index_[key(points[i])] = i;
    responses_.resize(cfg.geometry.speaker_count);
    const double w0 = cfg.training.source_amplitude;
    const double psi0 = cfg.training.source_phase;
    std::vector<std::size_t> speakers(cfg.geometry.speaker_count);
    for (std::size_t n = 0; n < speakers.size(); ++n) speakers[n] = n;
    parallel_for(speakers.size(), cfg.workers, [&](std::size_t n) {
      SimCase sim{f, ma, cfg.euler.temp_gradient, int(n), ps};
      const auto records = run_or_load_sim(cfg, sim, points, allow_run, hash);
      auto& resp = responses_[n];
      resp.resize(points.size());
      for (std::size_t p = 0; p < points.size(); ++p) {
        const SinusoidFit fit =
            extract_steady_state(records[p], f, cfg.euler.window);
        resp[p] = std::polar(fit.amplitude / w0,
                             wrap_phase(fit.phase - psi0));
      }
    });
  }

  complexd unit_response(int speaker, const Vec3& point, double f,
                         double ma) const override {
    if (std::abs(f - f_) > 1e-9 || std::abs(ma - ma_) > 1e-9)
      throw NumericError("euler cache built for different (f, Ma)");
    const auto it = index_.find(key(point));
    if (it == index_.end())
      throw NumericError("no cached unit response at the requested point");
    return responses_.at(speaker)[it->second];
  }

 private:
  static std::pair<long long, long long> key(const Vec3& p) {
    return {llround(p.x * 1e9), llround(p.y * 1e9)};
  }
  double f_, ma_;
  std::map<std::pair<long long, long long>, std::size_t> index_;
  std::vector<std::vector<complexd>> responses_;
};

// Pre-runs every euler case the pipeline will need: the training grid per
// model and the evaluation unit responses on the solve grid.
inline void run_simulate(const ExperimentConfig& cfg) {
  if (cfg.propagator != PropagatorKind::euler) return;
  const SceneLayout layout = cfg.geometry.build();
  const std::vector<Vec3> mics = layout.all_mics();
  const std::uint64_t hash = config_hash(cfg);
  const std::string mic_ps = probeset_tag(cfg, mics);

  struct Job {
    SimCase sim;
    const std::vector<Vec3>* probes;
  };
  std::vector<Job> jobs;
  std::vector<std::unique_ptr<std::vector<Vec3>>> probe_storage;

  for (const auto& model : cfg.models)
    for (const double ma : cfg.training.machs())
      for (const double f : cfg.training.frequencies())
        for (int n = 0; n < cfg.geometry.speaker_count; ++n)
          jobs.push_back(
              {SimCase{f, ma, model.temp_gradient, n, mic_ps}, &mics});

  for (const double f : cfg.solve.frequencies)
    for (const double ma : cfg.solve.machs) {
      auto pts = std::make_unique<std::vector<Vec3>>(
          build_eval_points(cfg, layout, maps_requested_at(cfg, f, ma))
              .all());
      const std::string ps = probeset_tag(cfg, *pts);
      for (int n = 0; n < cfg.geometry.speaker_count; ++n)
        jobs.push_back({SimCase{f, ma, cfg.euler.temp_gradient, n, ps},
                        pts.get()});
      probe_storage.push_back(std::move(pts));
    }

  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) {
    if (std::filesystem::exists(sim_case_path(cfg, jobs[i].sim))) return;
    run_or_load_sim(cfg, jobs[i].sim, *jobs[i].probes, true, hash);
  });
}

struct MetricsRow {
  std::string variant;
  std::string snr_mean, snr_std;  // empty when noise is off
  double f = 0.0, ma = 0.0, lambda = 0.0;
  double ac_db = 0.0, re_db = 0.0, re_boundary_db = 0.0;
  bool ac_capped = false;
};

namespace detail {

struct SolutionKey {
  double f, ma, lambda;
  bool operator<(const SolutionKey& o) const {
    if (f != o.f) return f < o.f;
    if (ma != o.ma) return ma < o.ma;
    return lambda < o.lambda;
  }
};

inline std::map<SolutionKey, Eigen::VectorXcd> read_solutions(
    const std::string& path, int n_speakers) {
  const CsvTable table = read_csv(path);
  const auto f_col = table.column_index("f_hz");
  const auto ma_col = table.column_index("ma");
  const auto l_col = table.column_index("lambda");
  const auto spk_col = table.column_index("speaker");
  const auto re_col = table.column_index("re(w)");
  const auto im_col = table.column_index("im(w)");
  std::map<SolutionKey, Eigen::VectorXcd> solutions;
  for (const auto& row : table.rows) {
    const SolutionKey key{parse_double(row[f_col]), parse_double(row[ma_col]),
                          parse_double(row[l_col])};
    auto [it, inserted] = solutions.try_emplace(key);
    if (inserted) it->second = Eigen::VectorXcd::Zero(n_speakers);
    const int n = int(parse_double(row[spk_col]));
    it->second(n) =
        complexd(parse_double(row[re_col]), parse_double(row[im_col]));
  }
  return solutions;
}

}  // namespace detail

// Computes AC / RE / boundary RE for every solution row group against the
// scenario's ground-truth propagator and writes metrics.csv plus any
// requested field maps.
inline std::vector<MetricsRow> run_evaluate(const ExperimentConfig& cfg) {
  const SceneLayout layout = cfg.geometry.build();
  const std::uint64_t hash = config_hash(cfg);
  const bool euler = cfg.propagator == PropagatorKind::euler;

  struct NoiseCellTag {
    std::string tag, mean, std;
  };
  std::vector<NoiseCellTag> cells;
  if (cfg.solve.noise.enabled) {
    for (const double mean : cfg.solve.noise.snr_means_db)
      for (const double dev : cfg.solve.noise.snr_stds_db)
        cells.push_back({noise_tag(mean, dev), format_g15(mean),
                         format_g15(dev)});
  } else {
    cells.push_back({});
  }

  // Ground-truth propagators, one per (f, ma); euler caches are heavy so
  // they are built lazily and shared across variants.
  std::map<std::pair<double, double>, std::shared_ptr<Propagator>> props;
  std::map<std::pair<double, double>, std::shared_ptr<EvalPoints>> pts_by_key;
  auto propagator_for = [&](double f, double ma)
      -> std::pair<std::shared_ptr<Propagator>, std::shared_ptr<EvalPoints>> {
    const auto key = std::make_pair(f, ma);
    auto it = props.find(key);
    if (it == props.end()) {
      auto pts = std::make_shared<EvalPoints>(
          build_eval_points(cfg, layout, maps_requested_at(cfg, f, ma)));
      std::shared_ptr<Propagator> prop;
      if (euler) {
        prop = std::make_shared<EulerCachePropagator>(cfg, f, ma, pts->all(),
                                                      false);
      } else {
        prop = std::make_shared<AnalyticPropagator>(
            layout.speakers.speakers, cfg.speed_of_sound,
            cfg.propagator == PropagatorKind::analytic_uniform_flow);
      }
      props[key] = prop;
      pts_by_key[key] = pts;
      return {prop, pts};
    }
    return {it->second, pts_by_key.at(key)};
  };

  std::vector<MetricsRow> rows;
  CsvWriter out(paths::metrics_csv(cfg),
                "variant,snr_mean_db,snr_std_db,f_hz,ma,lambda,ac_db,re_db,"
                "re_boundary_db,ac_capped",
                hash);

  for (const auto& variant : cfg.variants) {
    for (const auto& cell : cells) {
      const auto solutions = detail::read_solutions(
          paths::solutions_csv(cfg, variant.name, cell.tag),
          cfg.geometry.speaker_count);
      for (const auto& [key, w] : solutions) {
        const auto [prop, pts] = propagator_for(key.f, key.ma);
        const double omega = 2.0 * kPi * key.f;

        const FieldMap bright = evaluate_field(*prop, w, pts->bright,
                                               pts->bright_w, key.f, key.ma);
        const FieldMap dark =
            evaluate_field(*prop, w, pts->dark, pts->dark_w, key.f, key.ma);
        const FieldMap on_boundary = evaluate_field(
            *prop, w, pts->boundary, pts->boundary_w, key.f, key.ma);

        FieldMap goal_bright, goal_boundary;
        goal_bright.points = pts->bright;
        goal_bright.weights = pts->bright_w;
        goal_bright.values =
            monopole_goal_field(pts->bright, layout.source, omega,
                                cfg.speed_of_sound, layout.bright.center);
        goal_boundary.points = pts->boundary;
        goal_boundary.weights = pts->boundary_w;
        goal_boundary.values =
            monopole_goal_field(pts->boundary, layout.source, omega,
                                cfg.speed_of_sound, layout.bright.center);

        MetricsRow row;
        row.variant = variant.name;
        row.snr_mean = cell.mean;
        row.snr_std = cell.std;
        row.f = key.f;
        row.ma = key.ma;
        row.lambda = key.lambda;
        const ContrastResult ac = acoustic_contrast(bright, dark);
        row.ac_db = ac.db;
        row.ac_capped = ac.capped;
        row.re_db = reproduction_error(bright, goal_bright,
                                       cfg.evaluate.re_goal_denominator);
        row.re_boundary_db = boundary_re(on_boundary, goal_boundary,
                                         cfg.evaluate.re_goal_denominator);
        rows.push_back(row);
        out.row({row.variant, row.snr_mean, row.snr_std, format_g15(row.f),
                 format_g15(row.ma), format_g15(row.lambda),
                 format_g15(row.ac_db), format_g15(row.re_db),
                 format_g15(row.re_boundary_db),
                 row.ac_capped ? "1" : "0"});

        // Energy-density maps for the requested cells.
        bool want_map = false;
        for (const auto& m : cfg.evaluate.maps)
          if (std::abs(m[0] - key.f) < 1e-9 &&
              std::abs(m[1] - key.ma) < 1e-9 &&
              std::abs(m[2] - key.lambda) < 1e-12)
            want_map = true;
        if (want_map && !pts->map.empty()) {
          const auto map = energy_density_map(*prop, w, pts->map, bright,
                                              key.f, key.ma,
                                              layout.speakers.speakers);
          char suffix[96];
          std::snprintf(suffix, sizeof(suffix), "_f%g_ma%g_l%g", key.f,
                        key.ma, key.lambda);
          const std::string base =
              cfg.out_dir + "/map_" + variant.name +
              (cell.tag.empty() ? "" : "_" + cell.tag) + suffix;
          CsvWriter field_csv(base + ".csv", "x_m,y_m,re(p),im(p)", hash);
          CsvWriter level_csv(base + "_db.csv", "x_m,y_m,level_db", hash);
          const FieldMap full = evaluate_field(
              *prop, w, pts->map, std::vector<double>(pts->map.size(), 1.0),
              key.f, key.ma);
          for (std::size_t i = 0; i < pts->map.size(); ++i) {
            field_csv.row({format_g15(pts->map[i].x),
                           format_g15(pts->map[i].y),
                           format_g15(full.values[i].real()),
                           format_g15(full.values[i].imag())});
            if (!map[i].skipped)
              level_csv.row({format_g15(map[i].x), format_g15(map[i].y),
                             format_g15(map[i].level_db)});
          }
        }
      }
    }
  }
  return rows;
}

// Re-reads a previously written metrics.csv (standalone report runs).
inline std::vector<MetricsRow> load_metrics_rows(const ExperimentConfig& cfg) {
  const CsvTable table = read_csv(paths::metrics_csv(cfg));
  const auto var_col = table.column_index("variant");
  const auto mean_col = table.column_index("snr_mean_db");
  const auto std_col = table.column_index("snr_std_db");
  const auto f_col = table.column_index("f_hz");
  const auto ma_col = table.column_index("ma");
  const auto l_col = table.column_index("lambda");
  const auto ac_col = table.column_index("ac_db");
  const auto re_col = table.column_index("re_db");
  const auto reb_col = table.column_index("re_boundary_db");
  const auto cap_col = table.column_index("ac_capped");
  std::vector<MetricsRow> rows;
  for (const auto& r : table.rows) {
    MetricsRow row;
    row.variant = r[var_col];
    row.snr_mean = r[mean_col];
    row.snr_std = r[std_col];
    row.f = parse_double(r[f_col]);
    row.ma = parse_double(r[ma_col]);
    row.lambda = parse_double(r[l_col]);
    row.ac_db = parse_double(r[ac_col]);
    row.re_db = parse_double(r[re_col]);
    row.re_boundary_db = parse_double(r[reb_col]);
    row.ac_capped = r[cap_col] == "1";
    rows.push_back(row);
  }
  return rows;
}

// Summary tables. For the harsh scenario this is the 2x2 considered/
// neglected wind x temperature table of AC/RE; other scenarios get a flat
// per-variant listing. Returns false when cells are missing.
inline bool run_report(const ExperimentConfig& cfg,
                       const std::vector<MetricsRow>& rows) {
  const std::uint64_t hash = config_hash(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream txt(paths::report_txt(cfg), std::ios::binary);
  txt << "# scenario " << to_string(cfg.scenario) << "\n";
  bool complete = true;

  if (cfg.scenario == Scenario::harsh) {
    auto cell = [&](const std::string& wind, const std::string& temp)
        -> const MetricsRow* {
      const std::string name = "wind_" + wind + "_temp_" + temp;
      for (const auto& r : rows)
        if (r.variant == name) return &r;
      return nullptr;
    };
    CsvWriter out(paths::report_csv(cfg),
                  "wind_status,temp_considered_ac_db,temp_considered_re_db,"
                  "temp_neglected_ac_db,temp_neglected_re_db",
                  hash);
    txt << "wind status      | temp considered          | temp neglected\n";
    for (const std::string wind : {"considered", "neglected"}) {
      std::vector<std::string> csv_row{wind};
      txt << std::left << std::setw(16) << wind << " |";
      for (const std::string temp : {"considered", "neglected"}) {
        const MetricsRow* r = cell(wind, temp);
        if (r) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), " AC=%6.1f dB RE=%6.1f dB |",
                        r->ac_db, r->re_db);
          txt << buf;
          csv_row.push_back(format_g15(r->ac_db));
          csv_row.push_back(format_g15(r->re_db));
        } else {
          txt << "        (missing)         |";
          csv_row.push_back("");
          csv_row.push_back("");
          complete = false;
        }
      }
      txt << "\n";
      out.row(csv_row);
    }
    return complete;
  }

  CsvWriter out(paths::report_csv(cfg),
                "variant,snr_mean_db,snr_std_db,f_hz,ma,lambda,ac_db,re_db,"
                "re_boundary_db",
                hash);
  txt << "variant, snr, f [Hz], Ma, lambda -> AC [dB], RE [dB], RE_b [dB]\n";
  for (const auto& r : rows) {
    out.row({r.variant, r.snr_mean, r.snr_std, format_g15(r.f),
             format_g15(r.ma), format_g15(r.lambda), format_g15(r.ac_db),
             format_g15(r.re_db), format_g15(r.re_boundary_db)});
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "%s snr=%s/%s f=%g Ma=%g lambda=%g -> AC=%.2f RE=%.2f "
                  "REb=%.2f\n",
                  r.variant.c_str(), r.snr_mean.empty() ? "-" : r.snr_mean.c_str(),
                  r.snr_std.empty() ? "-" : r.snr_std.c_str(), r.f, r.ma,
                  r.lambda, r.ac_db, r.re_db, r.re_boundary_db);
    txt << buf;
  }
  return complete;
}

}  // namespace sfr
