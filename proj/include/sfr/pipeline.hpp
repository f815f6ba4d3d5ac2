#pragma once

// Experiment runner: generate -> train -> (simulate) -> solve -> evaluate
// -> report, the flow-chart pipeline behind the CLI. Every stage is a
// plain function over the config so tests and the acceptance suite drive
// the same code paths as the command-line tool.

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "sfr/analytic.hpp"
#include "sfr/config.hpp"
#include "sfr/csv.hpp"
#include "sfr/dataset.hpp"
#include "sfr/euler2d.hpp"
#include "sfr/metrics.hpp"
#include "sfr/mlp.hpp"
#include "sfr/model.hpp"
#include "sfr/sinusoid.hpp"
#include "sfr/tikhonov.hpp"

namespace sfr {

namespace paths {

inline std::string training_csv(const ExperimentConfig& cfg,
                                const std::string& model) {
  return cfg.out_dir + "/training_data_" + model + ".csv";
}
inline std::string model_file(const ExperimentConfig& cfg,
                              const std::string& model) {
  return cfg.out_dir + "/model_" + model + ".sfrm";
}
inline std::string threshold_tag(double threshold) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", threshold);
  return buf;
}
inline std::string snapshot_model_name(const std::string& model,
                                       double threshold) {
  return model + "_t" + threshold_tag(threshold);
}
inline std::string train_report_csv(const ExperimentConfig& cfg,
                                    const std::string& model) {
  return cfg.out_dir + "/train_report_" + model + ".csv";
}
inline std::string derived_targets_csv(const ExperimentConfig& cfg,
                                       const std::string& model) {
  return cfg.out_dir + "/derived_targets_" + model + ".csv";
}
inline std::string k_tilde_csv(const ExperimentConfig& cfg,
                               const std::string& model) {
  return cfg.out_dir + "/k_tilde_" + model + ".csv";
}
inline std::string solutions_csv(const ExperimentConfig& cfg,
                                 const std::string& variant,
                                 const std::string& noise_tag = "") {
  return cfg.out_dir + "/solutions_" + variant +
         (noise_tag.empty() ? "" : "_" + noise_tag) + ".csv";
}
inline std::string metrics_csv(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/metrics.csv";
}
inline std::string report_csv(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/report.csv";
}
inline std::string report_txt(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/report.txt";
}
inline std::string sim_cache_dir(const ExperimentConfig& cfg) {
  return cfg.cache_dir.empty() ? cfg.out_dir + "/sim_cache" : cfg.cache_dir;
}
inline std::string effective_config_json(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/effective_config.json";
}

}  // namespace paths

inline void write_effective_config(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(paths::effective_config_json(cfg), std::ios::binary);
  out << config_to_json(cfg).dump(2) << "\n";
}

// ---------------------------------------------------------------- euler sims

// Identity of one simulation case; the file name doubles as the case name
// in cache-miss errors.
struct SimCase {
  double f = 0.0;
  double ma = 0.0;
  double temp_gradient = 0.0;
  int speaker = -1;  // -1: combined multi-source run (diagnostics only)
  std::string probeset;
};

inline std::string sim_case_name(const SimCase& c) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "case_f%.10g_ma%.10g_tg%.10g_spk%02d_%s",
                c.f, c.ma, c.temp_gradient, c.speaker, c.probeset.c_str());
  return buf;
}

inline std::string sim_case_path(const ExperimentConfig& cfg,
                                 const SimCase& c);

// Probeset fingerprint: positions plus everything that changes the records.
inline std::string probeset_tag(const ExperimentConfig& cfg,
                                const std::vector<Vec3>& probes) {
  std::uint64_t h = fnv1a(&cfg.euler.n_points, sizeof(int));
  h = fnv1a(&cfg.euler.domain_size, sizeof(double), h);
  h = fnv1a(&cfg.euler.n_steps, sizeof(int), h);
  h = fnv1a(&cfg.euler.source_sigma_cells, sizeof(double), h);
  h = fnv1a(&cfg.euler.sponge_width, sizeof(double), h);
  h = fnv1a(&cfg.euler.sponge_strength, sizeof(double), h);
  h = fnv1a(&cfg.euler.filter_strength, sizeof(double), h);
  h = fnv1a(&cfg.training.source_amplitude, sizeof(double), h);
  h = fnv1a(&cfg.training.source_phase, sizeof(double), h);
  for (const auto& p : probes) {
    h = fnv1a(&p.x, sizeof(double), h);
    h = fnv1a(&p.y, sizeof(double), h);
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "ps%08llx",
                static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

inline GaussianSource speaker_source(const ExperimentConfig& cfg,
                                     const BaseState2D& base,
                                     const Vec3& position, double f,
                                     double amplitude, double phase) {
  GaussianSource src;
  src.center = position;
  src.half_width = cfg.euler.source_sigma_cells * base.h;
  src.amplitude = amplitude;
  src.frequency = f;
  src.phase = phase;
  return src;
}

// Runs one case (or loads it from the cache) and returns the probe
// records. Cache files use the probe-record CSV layout.
inline std::string sim_case_path(const ExperimentConfig& cfg,
                                 const SimCase& c) {
  return paths::sim_cache_dir(cfg) + "/" + sim_case_name(c) + ".csv";
}

inline std::vector<ProbeRecord> run_or_load_sim(
    const ExperimentConfig& cfg, const SimCase& sim,
    const std::vector<Vec3>& probes, bool allow_run,
    std::uint64_t cfg_hash) {
  const std::string name = sim_case_name(sim);
  const std::string file = sim_case_path(cfg, sim);

  if (std::filesystem::exists(file)) {
    const CsvTable table = read_csv(file);
    const auto mic_col = table.column_index("mic");
    const auto dt_col = table.column_index("dt_s");
    const auto sample_col = table.column_index("sample");
    std::vector<ProbeRecord> records(probes.size());
    for (auto& r : records) r.mic_index = -1;
    for (const auto& row : table.rows) {
      const int mic = int(parse_double(row[mic_col]));
      if (mic < 0 || std::size_t(mic) >= records.size())
        throw ConfigError("sim cache " + name + " has out-of-range probe");
      auto& rec = records[mic];
      rec.mic_index = mic;
      rec.dt = parse_double(row[dt_col]);
      rec.samples.push_back(parse_double(row[sample_col]));
    }
    for (const auto& r : records)
      if (r.mic_index < 0 || int(r.samples.size()) != cfg.euler.n_steps)
        throw ConfigError("sim cache " + name + " is incomplete");
    return records;
  }

  if (!allow_run)
    throw NumericError("missing cached unit response for " + name +
                       "; run the simulate step first");

  BaseState2D base =
      build_base_state(sim.ma, sim.temp_gradient, cfg.euler.domain_size,
                       cfg.euler.n_points);
  EulerOptions opts;
  opts.sponge_width = cfg.euler.sponge_width;
  opts.sponge_strength = cfg.euler.sponge_strength;
  opts.filter_strength = cfg.euler.filter_strength;

  const SceneLayout layout = cfg.geometry.build();
  std::vector<GaussianSource> sources;
  if (sim.speaker >= 0) {
    sources.push_back(speaker_source(
        cfg, base, layout.speakers.speakers.at(sim.speaker), sim.f,
        cfg.training.source_amplitude, cfg.training.source_phase));
  } else {
    throw std::invalid_argument("combined runs are not cached");
  }
  const auto records =
      run_case_multi(base, sources, cfg.euler.n_steps, probes, opts);

  CsvWriter out(file, "case_id,f_hz,ma,speaker,mic,dt_s,sample", cfg_hash);
  for (const auto& rec : records)
    for (const double s : rec.samples)
      out.row({name, format_g15(sim.f), format_g15(sim.ma),
               std::to_string(sim.speaker), std::to_string(rec.mic_index),
               format_g15(rec.dt), format_g15(s)});
  return records;
}

// Extraction with the window's global start time folded out, so phases are
// referenced to t = 0 like the source signal.
inline SinusoidFit extract_steady_state(const ProbeRecord& record, double f,
                                        int window) {
  const auto slice = extract_window(record, window);
  SinusoidFit fit = extract_sinusoid(slice, f, record.dt);
  const double t0 = window_start_time(record, window);
  fit.phase = wrap_phase(fit.phase - 2.0 * kPi * f * t0);
  return fit;
}

// ------------------------------------------------------------------ generate

// One training-data row per (f, Ma, speaker, mic): fabricate the
// measurement with the configured propagator and invert it with the
// sinusoid extraction.
inline void run_generate(const ExperimentConfig& cfg) {
  const SceneLayout layout = cfg.geometry.build();
  const std::vector<Vec3> mics = layout.all_mics();
  const auto freqs = cfg.training.frequencies();
  const auto machs = cfg.training.machs();
  const std::uint64_t hash = config_hash(cfg);
  write_effective_config(cfg);
  if (freqs.empty())
    std::fprintf(stderr,
                 "warning: empty training frequency grid; writing "
                 "header-only training data\n");

  for (const auto& model : cfg.models) {
    struct Row {
      double f, ma, amp, phase;
      int speaker, mic;
    };
    std::vector<Row> rows;

    if (cfg.propagator == PropagatorKind::euler) {
      const std::string ps = probeset_tag(cfg, mics);
      struct Job {
        double f, ma;
        int speaker;
      };
      std::vector<Job> jobs;
      for (const double ma : machs)
        for (const double f : freqs)
          for (int n = 0; n < cfg.geometry.speaker_count; ++n)
            jobs.push_back({f, ma, n});
      std::vector<std::vector<Row>> job_rows(jobs.size());
      parallel_for(jobs.size(), cfg.workers, [&](std::size_t ji) {
        const Job& job = jobs[ji];
        SimCase sim{job.f, job.ma, model.temp_gradient, job.speaker, ps};
        const auto records = run_or_load_sim(cfg, sim, mics, true, hash);
        for (std::size_t m = 0; m < mics.size(); ++m) {
          const SinusoidFit fit =
              extract_steady_state(records[m], job.f, cfg.euler.window);
          job_rows[ji].push_back(
              {job.f, job.ma, fit.amplitude, fit.phase, job.speaker, int(m)});
        }
      });
      for (auto& jr : job_rows)
        rows.insert(rows.end(), jr.begin(), jr.end());
    } else {
      const bool with_flow =
          cfg.propagator == PropagatorKind::analytic_uniform_flow;
      const auto t_grid = uniform_time_grid(cfg.training.window_samples,
                                            1.0 / cfg.training.sample_rate);
      const double dt = 1.0 / cfg.training.sample_rate;
      for (const double ma : machs)
        for (const double f : freqs) {
          const double omega = 2.0 * kPi * f;
          for (int n = 0; n < cfg.geometry.speaker_count; ++n) {
            const Vec3& spk = layout.speakers.speakers[n];
            for (std::size_t m = 0; m < mics.size(); ++m) {
              const complexd g =
                  (with_flow && ma != 0.0)
                      ? greens_uniform_flow_3d(
                            spk, mics[m], omega,
                            ConvectedMedium(cfg.speed_of_sound, ma))
                      : greens_free_field_3d(spk, mics[m], omega,
                                             cfg.speed_of_sound);
              const auto signal = synthesize_time_signal(
                  g, cfg.training.source_amplitude, cfg.training.source_phase,
                  f, t_grid);
              const SinusoidFit fit = extract_sinusoid(signal, f, dt);
              rows.push_back(
                  {f, ma, fit.amplitude, fit.phase, n, int(m)});
            }
          }
        }
    }

    CsvWriter out(paths::training_csv(cfg, model.name),
                  "f_hz,ma,speaker,mic,amp,phase,src_amp,src_phase", hash);
    for (const auto& r : rows)
      out.row({format_g15(r.f), format_g15(r.ma), std::to_string(r.speaker),
               std::to_string(r.mic), format_g15(r.amp),
               format_g15(r.phase), format_g15(cfg.training.source_amplitude),
               format_g15(cfg.training.source_phase)});
  }
}

// --------------------------------------------------------------------- train

enum class NetKind { amplitude, phase, wavenumber };

struct TrainedPairReports {
  TrainReport amplitude, phase, wavenumber;
};

struct TrainResult {
  int stagnated_networks = 0;  // networks that missed the MSE target
};

// Trains the three networks of every pair (to the configured target, with
// snapshot thresholds) and writes the model container(s), the derived
// target CSVs and the per-network training reports.
inline TrainResult run_train(const ExperimentConfig& cfg,
                             const std::string& model_name,
                             const std::string& training_csv_path) {
  const SceneLayout layout = cfg.geometry.build();
  const std::vector<Vec3> mics = layout.all_mics();
  const std::uint64_t hash = config_hash(cfg);
  const std::uint64_t lay_hash = layout_hash(layout);

  const CsvTable table = read_csv(training_csv_path);
  const auto f_col = table.column_index("f_hz");
  const auto ma_col = table.column_index("ma");
  const auto spk_col = table.column_index("speaker");
  const auto mic_col = table.column_index("mic");
  const auto amp_col = table.column_index("amp");
  const auto phase_col = table.column_index("phase");
  const auto samp_col = table.column_index("src_amp");
  const auto sphase_col = table.column_index("src_phase");

  const int n_speakers = cfg.geometry.speaker_count;
  const int n_mics = int(mics.size());
  std::vector<std::vector<TransferSample>> per_pair(
      std::size_t(n_speakers) * n_mics);
  for (const auto& row : table.rows) {
    TransferSample s;
    s.f = parse_double(row[f_col]);
    s.ma = parse_double(row[ma_col]);
    s.speaker = int(parse_double(row[spk_col]));
    s.mic = int(parse_double(row[mic_col]));
    s.amp = parse_double(row[amp_col]);
    s.phase = parse_double(row[phase_col]);
    s.src_amp = parse_double(row[samp_col]);
    s.src_phase = parse_double(row[sphase_col]);
    if (s.speaker < 0 || s.speaker >= n_speakers || s.mic < 0 ||
        s.mic >= n_mics)
      throw ConfigError("training data references unknown speaker/mic");
    per_pair[std::size_t(s.mic) * n_speakers + s.speaker].push_back(s);
  }

  std::vector<PairDataset> datasets(per_pair.size());
  parallel_for(per_pair.size(), cfg.workers, [&](std::size_t idx) {
    if (per_pair[idx].empty())
      throw ConfigError("training data has no rows for pair " +
                        std::to_string(idx));
    const int mic = int(idx) / n_speakers;
    const int spk = int(idx) % n_speakers;
    const double dist =
        pair_distance(layout.speakers.speakers[spk], mics[mic]);
    datasets[idx] = build_pair_dataset(per_pair[idx], dist,
                                       cfg.speed_of_sound, {});
  });

  // Derived-target CSVs.
  {
    CsvWriter out(paths::derived_targets_csv(cfg, model_name),
                  "f_hz,ma,speaker,mic,a_tilde,v1,v2", hash);
    for (const auto& ds : datasets)
      for (std::size_t i = 0; i < ds.f.size(); ++i)
        out.row({format_g15(ds.f[i]), format_g15(ds.ma[i]),
                 std::to_string(ds.speaker), std::to_string(ds.mic),
                 format_g15(ds.a_tilde[i]), format_g15(ds.v1[i]),
                 format_g15(ds.v2[i])});
    CsvWriter kout(paths::k_tilde_csv(cfg, model_name),
                   "speaker,mic,ma,k_tilde", hash);
    for (const auto& ds : datasets)
      for (std::size_t i = 0; i < ds.ma_grid.size(); ++i)
        kout.row({std::to_string(ds.speaker), std::to_string(ds.mic),
                  format_g15(ds.ma_grid[i]), format_g15(ds.k_tilde[i])});
  }

  // Snapshot thresholds: configured ones plus the final target.
  std::vector<double> thresholds = cfg.networks.snapshot_thresholds;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<double>());

  struct PairOutcome {
    PairModel final_model;
    std::map<double, PairModel> snapshots;
    TrainedPairReports reports;
  };
  std::vector<PairOutcome> outcomes(datasets.size());

  auto hidden_to_sizes = [](int inputs, const std::vector<int>& hidden,
                            int outputs) {
    std::vector<int> sizes{inputs};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(outputs);
    return sizes;
  };

  parallel_for(datasets.size(), cfg.workers, [&](std::size_t idx) {
    const PairDataset& ds = datasets[idx];
    PairOutcome& out = outcomes[idx];
    const Eigen::Index n_samples = Eigen::Index(ds.f.size());

    MatrixXd features(2, n_samples);
    for (Eigen::Index i = 0; i < n_samples; ++i) {
      features(0, i) = ds.f_scaler.scale(ds.f[i]);
      features(1, i) = ds.ma_scaler.scale(ds.ma[i]);
    }
    MatrixXd amp_targets(1, n_samples);
    for (Eigen::Index i = 0; i < n_samples; ++i)
      amp_targets(0, i) = ds.amp_scaler.scale(ds.a_tilde[i]);
    // Phase net outputs: (sin, cos) in that order; decoded with
    // atan2(out0, out1).
    MatrixXd phase_targets(2, n_samples);
    for (Eigen::Index i = 0; i < n_samples; ++i) {
      phase_targets(0, i) = ds.v2[i];
      phase_targets(1, i) = ds.v1[i];
    }
    const Eigen::Index n_ma = Eigen::Index(ds.ma_grid.size());
    MatrixXd k_features(1, n_ma), k_targets(1, n_ma);
    for (Eigen::Index i = 0; i < n_ma; ++i) {
      k_features(0, i) = ds.ma_scaler.scale(ds.ma_grid[i]);
      k_targets(0, i) = ds.k_scaler.scale(ds.k_tilde[i]);
    }

    TrainOptions opts;
    opts.mse_target = cfg.networks.mse_target;
    opts.max_epochs = cfg.networks.max_epochs;
    opts.snapshot_thresholds = thresholds;

    Network amp_net = init_network(
        hidden_to_sizes(2, cfg.networks.amplitude_hidden, 1),
        derive_seed(cfg.seed, idx, 0));
    Network phase_net =
        init_network(hidden_to_sizes(2, cfg.networks.phase_hidden, 2),
                     derive_seed(cfg.seed, idx, 1));
    Network k_net = init_network(
        hidden_to_sizes(1, cfg.networks.wavenumber_hidden, 1),
        derive_seed(cfg.seed, idx, 2));

    out.reports.amplitude = train_lm(amp_net, features, amp_targets, opts);
    out.reports.phase = train_lm(phase_net, features, phase_targets, opts);
    out.reports.wavenumber = train_lm(k_net, k_features, k_targets, opts);

    auto make_pair_model = [&](const Network& a, const Network& p,
                               const Network& k) {
      PairModel pm;
      pm.speaker = ds.speaker;
      pm.mic = ds.mic;
      pm.distance = ds.distance;
      pm.amplitude_net = a;
      pm.phase_net = p;
      pm.wavenumber_net = k;
      pm.f_scaler = ds.f_scaler;
      pm.ma_scaler = ds.ma_scaler;
      pm.amp_scaler = ds.amp_scaler;
      pm.k_scaler = ds.k_scaler;
      return pm;
    };
    out.final_model = make_pair_model(amp_net, phase_net, k_net);
    for (const double th : thresholds) {
      auto find_snap = [th](const TrainReport& r) -> const Network& {
        for (const auto& s : r.snapshots)
          if (s.threshold == th) return s.network;
        throw NumericError("missing snapshot");
      };
      out.snapshots.emplace(
          th, make_pair_model(find_snap(out.reports.amplitude),
                              find_snap(out.reports.phase),
                              find_snap(out.reports.wavenumber)));
    }
  });

  auto assemble_model = [&](auto pick_pair) {
    TransferModel model;
    model.speed_of_sound = cfg.speed_of_sound;
    model.f_min = datasets.front().f_min;
    model.f_max = datasets.front().f_max;
    model.ma_min = datasets.front().ma_min;
    model.ma_max = datasets.front().ma_max;
    model.layout_hash = lay_hash;
    model.speaker_count = n_speakers;
    model.mic_count = n_mics;
    model.pairs.resize(datasets.size());
    for (std::size_t i = 0; i < datasets.size(); ++i)
      model.pairs[i] = pick_pair(outcomes[i]);
    return model;
  };

  save_model(assemble_model([](const PairOutcome& o) { return o.final_model; }),
             paths::model_file(cfg, model_name));
  for (const double th : thresholds)
    save_model(assemble_model([th](const PairOutcome& o) {
                 return o.snapshots.at(th);
               }),
               paths::model_file(
                   cfg, paths::snapshot_model_name(model_name, th)));

  TrainResult result;
  CsvWriter rep(paths::train_report_csv(cfg, model_name),
                "speaker,mic,network,epochs,final_mse,stop_reason", hash);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& ds = datasets[i];
    auto one = [&](const char* kind, const TrainReport& r) {
      rep.row({std::to_string(ds.speaker), std::to_string(ds.mic), kind,
               std::to_string(r.epochs), format_g15(r.final_mse),
               to_string(r.stop_reason)});
      if (r.stop_reason != StopReason::threshold) ++result.stagnated_networks;
    };
    one("amplitude", outcomes[i].reports.amplitude);
    one("phase", outcomes[i].reports.phase);
    one("wavenumber", outcomes[i].reports.wavenumber);
  }
  return result;
}

// --------------------------------------------------------------------- solve

inline Eigen::VectorXcd build_goal_vector(const ExperimentConfig& cfg,
                                          const SceneLayout& layout,
                                          double f) {
  const auto bright = layout.bright.mics();
  const auto goal_b =
      monopole_goal_field(bright, layout.source, 2.0 * kPi * f,
                          cfg.speed_of_sound, layout.bright.center);
  const std::size_t n_dark = layout.dark.mics().size();
  Eigen::VectorXcd goal(bright.size() + n_dark);
  for (std::size_t i = 0; i < bright.size(); ++i) goal(i) = goal_b[i];
  for (std::size_t i = 0; i < n_dark; ++i) goal(bright.size() + i) = 0.0;
  return goal;
}

inline std::string noise_tag(double snr_mean, double snr_std) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "snr%g_std%g", snr_mean, snr_std);
  return buf;
}

// Solves the pressure-matching problem for every (variant, f, Ma, lambda)
// cell (and noise cell when enabled) and writes one solutions CSV per
// variant/noise combination.
inline void run_solve(const ExperimentConfig& cfg) {
  const SceneLayout layout = cfg.geometry.build();
  const std::uint64_t lay_hash = layout_hash(layout);
  const std::uint64_t hash = config_hash(cfg);
  const std::size_t n_bright = layout.bright.mics().size();
  const std::size_t n_dark = layout.dark.mics().size();

  struct NoiseCell {
    bool enabled = false;
    double mean = 0.0, std = 0.0;
    NoiseMode mode = NoiseMode::gaussian;
    std::string tag;
    std::size_t index = 0;
  };
  std::vector<NoiseCell> noise_cells;
  if (cfg.solve.noise.enabled) {
    const NoiseMode mode = cfg.solve.noise.mode == "uniform"
                               ? NoiseMode::uniform
                               : NoiseMode::gaussian;
    for (const double mean : cfg.solve.noise.snr_means_db)
      for (const double dev : cfg.solve.noise.snr_stds_db)
        noise_cells.push_back({true, mean, dev, mode, noise_tag(mean, dev),
                               noise_cells.size()});
  } else {
    noise_cells.push_back({});
  }

  for (std::size_t vi = 0; vi < cfg.variants.size(); ++vi) {
    const SolveVariant& variant = cfg.variants[vi];
    const TransferModel model =
        load_model(paths::model_file(cfg, variant.model));
    if (model.layout_hash != lay_hash) {
      char msg[160];
      std::snprintf(msg, sizeof(msg),
                    "model %s was trained for layout %016llx but the config "
                    "describes layout %016llx",
                    variant.model.c_str(),
                    static_cast<unsigned long long>(model.layout_hash),
                    static_cast<unsigned long long>(lay_hash));
      throw ConfigError(msg);
    }

    for (const auto& cell : noise_cells) {
      CsvWriter out(
          paths::solutions_csv(cfg, variant.name, cell.tag),
          "f_hz,ma,lambda,speaker,re(w),im(w),J,residual_norm,solution_norm",
          hash);
      for (std::size_t fi = 0; fi < cfg.solve.frequencies.size(); ++fi) {
        const double f = cfg.solve.frequencies[fi];
        const Eigen::VectorXcd goal = build_goal_vector(cfg, layout, f);
        for (std::size_t mi = 0; mi < cfg.solve.machs.size(); ++mi) {
          const double ma = cfg.solve.machs[mi];
          const double eval_ma = variant.evaluate_at_zero_ma ? 0.0 : ma;
          std::size_t extrapolated = 0;
          ComplexSystem sys = assemble_matrix(model, n_bright, n_dark, f,
                                              eval_ma, &extrapolated);
          if (extrapolated > 0)
            std::fprintf(stderr,
                         "warning: %zu transfer entries extrapolated outside "
                         "the trained range at f=%g, Ma=%g (%s)\n",
                         extrapolated, f, eval_ma, variant.name.c_str());
          sys.goal = goal;
          if (cell.enabled)
            sys.transfer = add_noise(
                sys.transfer, cell.mean, cell.std, cell.mode,
                derive_seed(cfg.seed, 0xA11CE, vi * 1024 + cell.index,
                            fi * 4096 + mi));
          std::vector<double> lambdas = cfg.solve.lambdas;
          if (cfg.solve.use_lcurve) {
            std::vector<double> grid(cfg.solve.lcurve_count);
            const double lmin = std::log(cfg.solve.lcurve_min);
            const double lmax = std::log(cfg.solve.lcurve_max);
            for (int i = 0; i < cfg.solve.lcurve_count; ++i)
              grid[i] = std::exp(lmin + (lmax - lmin) * double(i) /
                                            double(cfg.solve.lcurve_count - 1));
            lambdas = {select_lambda_lcurve(sys.transfer, goal, grid).lambda};
          }
          for (const double lambda : lambdas) {
            sys.lambda = lambda;
            const SpeakerSolution sol = solve_tikhonov(sys);
            for (Eigen::Index n = 0; n < sol.w.size(); ++n)
              out.row({format_g15(f), format_g15(ma), format_g15(lambda),
                       std::to_string(n), format_g15(sol.w(n).real()),
                       format_g15(sol.w(n).imag()),
                       format_g15(sol.objective),
                       format_g15(sol.residual_norm),
                       format_g15(sol.solution_norm)});
          }
        }
      }
    }
  }
}

}  // namespace sfr
