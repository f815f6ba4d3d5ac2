// Acceptance suite: one pass/fail line per criterion. Heavy artifacts
// (training data, trained models, simulation caches) are kept under the
// work directory in config-hash-named folders, so reruns reuse them.
//
//   sfr_acceptance --criteria 1,2,3 --work <dir> [--workers N]
//
// Criterion 6 (harsh conditions, hours of 2D simulations) only runs when
// requested explicitly.

#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sfr/evaluate.hpp"
#include "sfr/pipeline.hpp"

using namespace sfr;
namespace fs = std::filesystem;

namespace {

unsigned g_workers = 2;
std::string g_work = "acceptance_work";

std::string hash8(const ExperimentConfig& cfg) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08llx",
                static_cast<unsigned long long>(config_hash(cfg) >> 32));
  return buf;
}

void finalize_dirs(ExperimentConfig& cfg, const std::string& tag) {
  cfg.workers = g_workers;
  cfg.out_dir = g_work + "/" + tag + "_" + hash8(cfg);
}

bool models_present(const ExperimentConfig& cfg) {
  for (const auto& model : cfg.models) {
    if (!fs::exists(paths::model_file(cfg, model.name))) return false;
    for (const double th : cfg.networks.snapshot_thresholds)
      if (!fs::exists(paths::model_file(
              cfg, paths::snapshot_model_name(model.name, th))))
        return false;
  }
  return true;
}

// generate + train with reuse; solve/evaluate are cheap and always rerun.
std::vector<MetricsRow> run_analytic_experiment(ExperimentConfig& cfg) {
  bool have_data = true;
  for (const auto& model : cfg.models)
    have_data = have_data && fs::exists(paths::training_csv(cfg, model.name));
  if (!have_data) {
    std::printf("  [gen]   %s\n", cfg.out_dir.c_str());
    std::fflush(stdout);
    run_generate(cfg);
  }
  if (!models_present(cfg)) {
    std::printf("  [train] %s\n", cfg.out_dir.c_str());
    std::fflush(stdout);
    for (const auto& model : cfg.models) {
      const auto result =
          run_train(cfg, model.name, paths::training_csv(cfg, model.name));
      if (result.stagnated_networks > 0)
        std::printf("  [train] warning: %d stagnated network(s)\n",
                    result.stagnated_networks);
    }
  }
  run_solve(cfg);
  return run_evaluate(cfg);
}

struct MetricKey {
  std::string variant;
  double f, ma, lambda;
};

const MetricsRow& find_row(const std::vector<MetricsRow>& rows,
                           const MetricKey& key) {
  for (const auto& r : rows)
    if (r.variant == key.variant && std::abs(r.f - key.f) < 1e-6 &&
        std::abs(r.ma - key.ma) < 1e-9 &&
        std::abs(r.lambda - key.lambda) < 1e-12)
      return r;
  throw std::runtime_error("metric row not found: " + key.variant);
}

struct CheckList {
  bool ok = true;
  void expect(bool condition, const std::string& what) {
    std::printf("    %s  %s\n", condition ? "ok  " : "FAIL", what.c_str());
    ok = ok && condition;
  }
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// ------------------------------------------------------------ shared configs

// Uniform-wind experiment (criteria 1-3): dense 70x30 grid, paper network
// sizes trained to 1e-7 with snapshots at the looser thresholds, Mach
// sweep over [0, 0.05] with and without wind knowledge.
ExperimentConfig uniform_wind_config() {
  json j;
  j["scenario"] = "uniform_wind";
  j["seed"] = 1;
  j["networks"] = {
      {"mse_target", 1e-7},
      {"max_epochs", 2000},
      {"snapshot_thresholds", {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}}};
  ExperimentConfig cfg = parse_config(j);
  for (const double th : cfg.networks.snapshot_thresholds)
    cfg.variants.push_back({"t" + paths::threshold_tag(th),
                            paths::snapshot_model_name("model", th), false});
  finalize_dirs(cfg, "uw");
  return cfg;
}

// Center-microphone study (criterion 5).
ExperimentConfig center_mic_config(bool bigger_square, bool center_mic) {
  json j;
  j["scenario"] = bigger_square ? "bigger_square" : "no_wind";
  j["seed"] = 1;
  j["geometry"] = {{"center_mic", center_mic}};
  j["training"] = {{"f_count", 81}};
  j["networks"] = {{"mse_target", 1e-7}, {"max_epochs", 2000}};
  j["solve"] = {{"lambdas", {0.0}}};
  ExperimentConfig cfg = parse_config(j);
  finalize_dirs(cfg, std::string(bigger_square ? "bs" : "nw") +
                         (center_mic ? "_c" : "_nc"));
  return cfg;
}

// Harsh-conditions experiment (criterion 6) at the reduced euler grid.
ExperimentConfig harsh_config(double temp_gradient) {
  json j;
  j["scenario"] = "harsh";
  j["seed"] = 1;
  j["euler"] = {{"n_points", 250},
                {"n_steps", 800},
                {"window", 100},
                {"temp_gradient", temp_gradient}};
  j["training"] = {{"f_min", 400.0}, {"f_max", 800.0}, {"f_count", 9},
                   {"ma_min", 0.0}, {"ma_max", 0.0275}, {"ma_count", 4}};
  j["networks"] = {{"mse_target", 1e-7}, {"max_epochs", 2000}};
  ExperimentConfig cfg = parse_config(j);
  finalize_dirs(cfg, fmt("harsh_tg%g", temp_gradient));
  cfg.cache_dir = g_work + "/harsh_sim_cache";  // shared across gradients
  return cfg;
}

// ----------------------------------------------------------------- criteria

bool criterion_1() {
  ExperimentConfig cfg = uniform_wind_config();
  const auto rows = run_analytic_experiment(cfg);
  CheckList checks;
  const double ac0 = find_row(rows, {"considered", 600.0, 0.0, 0.0}).ac_db;
  const double ac_reg = find_row(rows, {"considered", 600.0, 0.0, 0.1}).ac_db;
  const double re0 = find_row(rows, {"considered", 600.0, 0.0, 0.0}).re_db;
  checks.expect(std::abs(ac0 - 48.0) <= 3.0,
                fmt("AC(lambda=0) = %.2f dB, expected 48 +/- 3", ac0));
  checks.expect(std::abs(ac_reg - 35.3) <= 2.0,
                fmt("AC(lambda=0.1) = %.2f dB, expected 35.3 +/- 2", ac_reg));
  checks.expect(std::abs(re0 - (-20.2)) <= 2.0,
                fmt("RE = %.2f dB, expected -20.2 +/- 2", re0));
  return checks.ok;
}

bool criterion_2() {
  ExperimentConfig cfg = uniform_wind_config();
  const auto rows = run_analytic_experiment(cfg);
  CheckList checks;

  // Threshold sequence 1e-7 (the fully trained model) .. 1e-1.
  std::vector<std::pair<double, std::string>> thresholds{
      {1e-7, "considered"}};
  for (const double th : {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1})
    thresholds.push_back({th, "t" + paths::threshold_tag(th)});

  std::map<double, double> re, ac;
  for (const auto& [th, variant] : thresholds) {
    re[th] = find_row(rows, {variant, 600.0, 0.0, 0.0}).re_db;
    ac[th] = find_row(rows, {variant, 600.0, 0.0, 0.0}).ac_db;
    std::printf("    threshold %g: AC = %.2f dB, RE = %.2f dB\n", th, ac[th],
                re[th]);
  }

  double re_lo = 1e300, re_hi = -1e300;
  for (const double th : {1e-7, 1e-6, 1e-5, 1e-4}) {
    re_lo = std::min(re_lo, re.at(th));
    re_hi = std::max(re_hi, re.at(th));
  }
  checks.expect(re_hi - re_lo <= 1.0,
                fmt("RE spread over thresholds <= 1e-4: %.2f dB (<= 1 dB)",
                    re_hi - re_lo));
  checks.expect(std::abs(re.at(1e-1) - (-17.0)) <= 2.0,
                fmt("RE at threshold 1e-1: %.2f dB, expected -17 +/- 2",
                    re.at(1e-1)));

  bool strictly_decreasing = true;
  const std::vector<double> seq{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  for (std::size_t i = 1; i < seq.size(); ++i)
    strictly_decreasing =
        strictly_decreasing && ac.at(seq[i]) < ac.at(seq[i - 1]);
  checks.expect(strictly_decreasing,
                "AC(lambda=0) strictly decreasing from 1e-6 to 1e-1");
  checks.expect(ac.at(1e-6) - ac.at(1e-1) >= 10.0,
                fmt("AC drop 1e-6 -> 1e-1: %.2f dB (>= 10 dB)",
                    ac.at(1e-6) - ac.at(1e-1)));
  return checks.ok;
}

bool criterion_3() {
  ExperimentConfig cfg = uniform_wind_config();
  const auto rows = run_analytic_experiment(cfg);
  CheckList checks;

  bool considered_wins = true;
  bool boundary_ordering = true;
  for (const double ma : cfg.solve.machs) {
    if (ma < 0.01 - 1e-12) continue;
    for (const double lambda : {0.0, 0.01, 0.1}) {
      const auto& cons = find_row(rows, {"considered", 600.0, ma, lambda});
      const auto& negl = find_row(rows, {"neglected", 600.0, ma, lambda});
      if (!(cons.ac_db > negl.ac_db)) {
        considered_wins = false;
        std::printf("    AC ordering violated at Ma=%.3f lambda=%g "
                    "(%.2f vs %.2f)\n",
                    ma, lambda, cons.ac_db, negl.ac_db);
      }
      if (!(negl.re_boundary_db > cons.re_boundary_db)) {
        boundary_ordering = false;
        std::printf("    RE_boundary ordering violated at Ma=%.3f lambda=%g "
                    "(%.2f vs %.2f)\n",
                    ma, lambda, negl.re_boundary_db, cons.re_boundary_db);
      }
    }
  }
  checks.expect(considered_wins,
                "AC(considered) > AC(neglected) for Ma in [0.01, 0.05], "
                "lambda in {0, 0.01, 0.1}");
  checks.expect(boundary_ordering,
                "RE_boundary(neglected) > RE_boundary(considered) for "
                "Ma >= 0.01");

  // Crossover where the unregularized neglected-wind AC falls below the
  // lambda = 0.1 neglected-wind AC.
  double crossover = -1.0;
  for (const double ma : cfg.solve.machs) {
    const double ac_unreg =
        find_row(rows, {"neglected", 600.0, ma, 0.0}).ac_db;
    const double ac_reg =
        find_row(rows, {"neglected", 600.0, ma, 0.1}).ac_db;
    if (ac_unreg < ac_reg) {
      crossover = ma;
      break;
    }
  }
  checks.expect(crossover > 0.0,
                fmt("crossover exists (found at Ma = %.3f)", crossover));
  if (crossover > 0.0)
    checks.expect(std::abs(crossover - 0.032) <= 0.012,
                  fmt("crossover Ma = %.3f, expected 0.032 +/- 0.012",
                      crossover));
  return checks.ok;
}

bool criterion_4() {
  CheckList checks;
  const double c = 343.0;
  const double dt = 1.0 / 48000.0;
  const auto t_grid = uniform_time_grid(100, dt);
  for (const double ma : {0.01, 0.02, 0.03, 0.05}) {
    for (const bool downstream : {true, false}) {
      const Vec3 src = downstream ? Vec3{0, 0, 0} : Vec3{1, 0, 0};
      const Vec3 rcv = downstream ? Vec3{1, 0, 0} : Vec3{0, 0, 0};
      std::vector<TransferSample> samples;
      for (int i = 0; i < 15; ++i) {
        const double f = 200.0 + 800.0 * i / 14.0;
        const complexd g = greens_uniform_flow_3d(src, rcv, 2.0 * kPi * f,
                                                  ConvectedMedium(c, ma));
        const auto signal = synthesize_time_signal(g, 1.0, 0.0, f, t_grid);
        const SinusoidFit fit = extract_sinusoid(signal, f, dt);
        TransferSample s;
        s.f = f;
        s.ma = ma;
        s.amp = fit.amplitude;
        s.phase = fit.phase;
        samples.push_back(s);
      }
      const double k = fit_wavenumber_modulation(samples, 1.0, c);
      const double expected = downstream ? 1.0 / (1.0 + ma) : 1.0 / (1.0 - ma);
      checks.expect(std::abs(k - expected) < 1e-2,
                    fmt("Ma=%.2f %s: k~ = %.5f, expected %.5f", ma,
                        downstream ? "downstream" : "upstream", k, expected));
    }
  }
  return checks.ok;
}

bool criterion_5() {
  CheckList checks;
  auto re_curve = [](ExperimentConfig& cfg) {
    const auto rows = run_analytic_experiment(cfg);
    std::map<double, double> curve;
    for (const auto& r : rows)
      if (r.variant == "considered" && r.lambda == 0.0) curve[r.f] = r.re_db;
    return curve;
  };
  auto mean_over = [](const std::map<double, double>& curve, double lo,
                      double hi) {
    double acc = 0.0;
    int count = 0;
    for (const auto& [f, re] : curve)
      if (f >= lo - 1e-9 && f <= hi + 1e-9) {
        acc += re;
        ++count;
      }
    return acc / count;
  };
  auto peak_in = [](const std::map<double, double>& curve, double lo,
                    double hi) {
    double best_f = lo, best = -1e300, floor = 1e300;
    for (const auto& [f, re] : curve)
      if (f >= lo - 1e-9 && f <= hi + 1e-9) {
        if (re > best) {
          best = re;
          best_f = f;
        }
        floor = std::min(floor, re);
      }
    return std::tuple{best_f, best, best - floor};
  };

  // Original 0.3 m squares.
  ExperimentConfig with_mic = center_mic_config(false, true);
  ExperimentConfig without_mic = center_mic_config(false, false);
  const auto curve_with = re_curve(with_mic);
  const auto curve_without = re_curve(without_mic);
  const double mean_with = mean_over(curve_with, 700.0, 900.0);
  const double mean_without = mean_over(curve_without, 700.0, 900.0);
  checks.expect(mean_without - mean_with >= 5.0,
                fmt("mean RE 700-900 Hz: %.2f dB (no center) vs %.2f dB "
                    "(center), improvement %.2f dB (>= 5 dB)",
                    mean_without, mean_with, mean_without - mean_with));
  const auto [f_res, re_res, prom] = peak_in(curve_without, 700.0, 900.0);
  std::printf("    resonance without center mic at %.0f Hz "
              "(RE %.2f dB, prominence %.2f dB; paper: 810 Hz)\n",
              f_res, re_res, prom);

  // Bigger 0.4 m squares.
  ExperimentConfig bs_with = center_mic_config(true, true);
  ExperimentConfig bs_without = center_mic_config(true, false);
  const auto bs_curve_with = re_curve(bs_with);
  const auto bs_curve_without = re_curve(bs_without);

  const auto [f1_without, re1_without, prom1] =
      peak_in(bs_curve_without, 500.0, 700.0);
  checks.expect(std::abs(f1_without - 600.0) <= 30.0 && prom1 >= 2.0,
                fmt("bigger square, no center mic: resonance at %.0f Hz "
                    "(600 +/- 30, prominence %.1f dB)",
                    f1_without, prom1));
  const double suppressed =
      re1_without - bs_curve_with.at(f1_without);
  checks.expect(suppressed >= 5.0,
                fmt("center mic suppresses the 600 Hz resonance by %.2f dB "
                    "(>= 5 dB)",
                    suppressed));

  const auto [f2_without, re2_without, prom2] =
      peak_in(bs_curve_without, 870.0, 1000.0);
  const auto [f2_with, re2_with, prom2c] =
      peak_in(bs_curve_with, 870.0, 1000.0);
  checks.expect(std::abs(f2_without - 940.0) <= 30.0,
                fmt("second resonance without center mic at %.0f Hz "
                    "(940 +/- 30)",
                    f2_without));
  checks.expect(std::abs(f2_with - 940.0) <= 30.0,
                fmt("second resonance persists with center mic at %.0f Hz "
                    "(940 +/- 30)",
                    f2_with));
  return checks.ok;
}

bool criterion_6() {
  CheckList checks;
  for (const double gradient : {3.0, 30.0}) {
    ExperimentConfig cfg = harsh_config(gradient);
    std::printf("  [harsh] gradient %g degC/m -> %s\n", gradient,
                cfg.out_dir.c_str());
    std::fflush(stdout);
    bool have_data = true;
    for (const auto& model : cfg.models)
      have_data =
          have_data && fs::exists(paths::training_csv(cfg, model.name));
    if (!have_data) run_generate(cfg);
    if (!models_present(cfg))
      for (const auto& model : cfg.models)
        run_train(cfg, model.name, paths::training_csv(cfg, model.name));
    run_simulate(cfg);
    run_solve(cfg);
    const auto rows = run_evaluate(cfg);
    run_report(cfg, rows);

    auto cell = [&](const char* wind, const char* temp) {
      const std::string name =
          std::string("wind_") + wind + "_temp_" + temp;
      return find_row(rows, {name, 600.0, 0.0275, 0.0});
    };
    for (const char* wind : {"considered", "neglected"})
      for (const char* temp : {"considered", "neglected"}) {
        const auto& r = cell(wind, temp);
        std::printf("    gradient %g: wind %s, temp %s: AC = %.2f dB, "
                    "RE = %.2f dB\n",
                    gradient, wind, temp, r.ac_db, r.re_db);
      }

    if (gradient == 3.0) {
      const double ac_gap =
          cell("considered", "considered").ac_db -
          cell("neglected", "considered").ac_db;
      const double re_gap =
          cell("neglected", "considered").re_db -
          cell("considered", "considered").re_db;
      checks.expect(ac_gap >= 10.0,
                    fmt("AC(wind considered) - AC(wind neglected) = %.2f dB "
                        "(>= 10 dB)",
                        ac_gap));
      checks.expect(re_gap >= 10.0,
                    fmt("RE gap = %.2f dB (>= 10 dB)", re_gap));
    } else {
      const double temp_gap =
          cell("considered", "considered").ac_db -
          cell("considered", "neglected").ac_db;
      checks.expect(temp_gap >= 5.0,
                    fmt("gradient 30: neglecting temperature loses %.2f dB "
                        "AC (>= 5 dB)",
                        temp_gap));
    }
  }
  return checks.ok;
}

bool criterion_7() {
  CheckList checks;
  Rng rng(2024);

  // Convected Green's function: flow reversal and Ma = 0 reduction.
  {
    double worst_rec = 0.0, worst_red = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vec3 a{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1, 1)};
      const Vec3 b{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-1, 1)};
      if (distance(a, b) < 5e-2) continue;
      const double ma = rng.uniform(-0.8, 0.8);
      const double omega = rng.uniform(300, 6000);
      const complexd fwd =
          greens_uniform_flow_3d(a, b, omega, ConvectedMedium(343, ma));
      const complexd rev =
          greens_uniform_flow_3d(b, a, omega, ConvectedMedium(343, -ma));
      worst_rec = std::max(worst_rec, std::abs(fwd - rev) / std::abs(fwd));
      const complexd gu =
          greens_uniform_flow_3d(a, b, omega, ConvectedMedium(343, 0.0));
      const complexd gf = greens_free_field_3d(a, b, omega, 343.0);
      worst_red = std::max(worst_red, std::abs(gu - gf) / std::abs(gf));
    }
    checks.expect(worst_rec < 1e-12,
                  fmt("flow-reversal reciprocity, worst %.2e", worst_rec));
    checks.expect(worst_red < 1e-12,
                  fmt("Ma=0 reduction to free field, worst %.2e", worst_red));
  }

  // Retarded-time admissibility residuals.
  {
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const Vec3 x{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
      if (x.norm() < 1e-2) continue;
      const ConvectedMedium medium(rng.uniform(100, 400),
                                   rng.uniform(-0.9, 0.9));
      for (const double tau : tau_roots(x, medium).roots) {
        const double dx = x.x - medium.mach * medium.speed_of_sound * tau;
        const double res =
            tau - std::sqrt(dx * dx + x.y * x.y + x.z * x.z) /
                      medium.speed_of_sound;
        worst = std::max(worst, std::abs(res) / tau);
      }
    }
    checks.expect(worst < 1e-12, fmt("tau-root residuals, worst %.2e", worst));
  }

  // Tikhonov: normal-equation residual, augmented-system oracle, path
  // monotonicity.
  {
    double worst_normal = 0.0, worst_oracle = 0.0;
    bool monotone = true;
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::MatrixXcd g(7, 4);
      Eigen::VectorXcd b(7);
      for (Eigen::Index i = 0; i < g.size(); ++i)
        g.data()[i] = complexd(rng.normal(), rng.normal());
      for (Eigen::Index i = 0; i < b.size(); ++i)
        b(i) = complexd(rng.normal(), rng.normal());
      double prev_norm = 1e300, prev_res = -1.0;
      for (double lambda = 1e-4; lambda < 1e2; lambda *= 10.0) {
        ComplexSystem sys{g, b, lambda, 0};
        const SpeakerSolution sol = solve_tikhonov(sys);
        const Eigen::MatrixXcd normal =
            g.adjoint() * g + lambda * Eigen::MatrixXcd::Identity(4, 4);
        const Eigen::VectorXcd rhs = g.adjoint() * b;
        worst_normal =
            std::max(worst_normal,
                     (normal * sol.w - rhs).norm() / rhs.norm());
        Eigen::MatrixXcd aug(11, 4);
        aug.topRows(7) = g;
        aug.bottomRows(4) =
            std::sqrt(lambda) * Eigen::MatrixXcd::Identity(4, 4);
        Eigen::VectorXcd arhs(11);
        arhs.head(7) = b;
        arhs.tail(4).setZero();
        const Eigen::VectorXcd oracle = aug.colPivHouseholderQr().solve(arhs);
        worst_oracle =
            std::max(worst_oracle, (sol.w - oracle).norm() / oracle.norm());
        monotone = monotone && sol.solution_norm <= prev_norm * (1 + 1e-12) &&
                   sol.residual_norm >= prev_res * (1 - 1e-12);
        prev_norm = sol.solution_norm;
        prev_res = sol.residual_norm;
      }
    }
    checks.expect(worst_normal < 1e-10,
                  fmt("Tikhonov normal-equation residual, worst %.2e",
                      worst_normal));
    checks.expect(worst_oracle < 1e-10,
                  fmt("agreement with augmented-system oracle, worst %.2e",
                      worst_oracle));
    checks.expect(monotone, "Tikhonov path monotonicity");
  }

  // LM Jacobian versus finite differences; accepted-step monotonicity.
  {
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      Network net = init_network({2, 8, 5, 2}, 500 + trial);
      MatrixXd x(2, 6);
      for (Eigen::Index i = 0; i < x.size(); ++i)
        x.data()[i] = rng.uniform(-1, 1);
      const MatrixXd jac = jacobian(net, x);
      VectorXd params;
      detail::pack_parameters(net, params);
      for (Eigen::Index p = 0; p < params.size(); ++p) {
        VectorXd plus = params, minus = params;
        plus(p) += 1e-6;
        minus(p) -= 1e-6;
        detail::unpack_parameters(net, plus);
        const MatrixXd yp = forward(net, x);
        detail::unpack_parameters(net, minus);
        const MatrixXd ym = forward(net, x);
        detail::unpack_parameters(net, params);
        for (Eigen::Index s = 0; s < 6; ++s)
          for (int o = 0; o < 2; ++o) {
            const double fd = (yp(o, s) - ym(o, s)) / 2e-6;
            const double an = jac(s * 2 + o, p);
            worst = std::max(worst, std::abs(fd - an) /
                                        std::max(1.0, std::abs(an)));
          }
      }
    }
    checks.expect(worst < 1e-6,
                  fmt("LM Jacobian vs finite differences, worst %.2e", worst));

    MatrixXd x(1, 40), y(1, 40);
    for (int i = 0; i < 40; ++i) {
      x(0, i) = i / 39.0;
      y(0, i) = std::sin(2.0 * kPi * x(0, i));
    }
    Network net = init_network({1, 10, 5, 1}, 7);
    TrainOptions opts;
    opts.mse_target = 1e-9;
    opts.max_epochs = 150;
    const TrainReport report = train_lm(net, x, y, opts);
    bool monotone = true;
    for (std::size_t i = 1; i < report.mse_history.size(); ++i)
      monotone = monotone && report.mse_history[i] <= report.mse_history[i - 1];
    checks.expect(monotone, "accepted LM steps never increase the loss");
  }

  // Wrap / encode / decode round trip.
  {
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
      const double x = rng.uniform(-12 * kPi, 12 * kPi);
      const auto [v1, v2] = encode_phase(x);
      worst = std::max(worst, std::abs(decode_phase(v1, v2) - wrap_phase(x)));
    }
    checks.expect(worst < 1e-12,
                  fmt("wrap/encode/decode round trip, worst %.2e", worst));
  }

  // Noiseless sinusoid recovery.
  {
    double worst = 0.0;
    const double dt = 1.0 / 48000.0;
    for (int i = 0; i < 50; ++i) {
      const double amp = rng.uniform(0.1, 5.0);
      const double phase = rng.uniform(-kPi, kPi);
      const double f = rng.uniform(200, 1000);
      std::vector<double> p(160);
      for (std::size_t k = 0; k < p.size(); ++k)
        p[k] = amp * std::sin(2 * kPi * f * k * dt + phase);
      const SinusoidFit fit = extract_sinusoid(p, f, dt);
      worst = std::max(worst, std::abs(fit.amplitude - amp) / amp);
      worst = std::max(worst, std::abs(wrap_phase(fit.phase - phase)));
    }
    checks.expect(worst < 1e-10,
                  fmt("noiseless sinusoid recovery, worst %.2e", worst));
  }

  // AC scale invariance.
  {
    FieldMap bright, dark;
    for (int i = 0; i < 9; ++i) {
      bright.points.push_back({double(i), 0, 0});
      bright.values.push_back(complexd(rng.normal(), rng.normal()));
      bright.weights.push_back(0.01);
      dark.points.push_back({double(i), 1, 0});
      dark.values.push_back(complexd(rng.normal(), rng.normal()));
      dark.weights.push_back(0.01);
    }
    const double base = acoustic_contrast(bright, dark).db;
    const complexd alpha(-2.3, 1.7);
    for (auto& v : bright.values) v *= alpha;
    for (auto& v : dark.values) v *= alpha;
    checks.expect(
        std::abs(acoustic_contrast(bright, dark).db - base) < 1e-12,
        "AC invariant under global complex scaling");
  }

  // Euler: free-stream preservation and cylindrical decay.
  {
    const BaseState2D base = build_base_state(0.02, 3.0, 8.0, 90);
    GaussianSource silent;
    silent.center = {0, 0, 0};
    silent.half_width = 3.0 * base.h;
    silent.amplitude = 0.0;
    silent.frequency = 600.0;
    const auto records =
        run_case(base, silent, 800, {{0, 0, 0}, {1.5, -0.8, 0}});
    double worst = 0.0;
    for (const auto& rec : records)
      for (const double s : rec.samples) worst = std::max(worst, std::abs(s));
    checks.expect(worst < 1e-12,
                  fmt("euler free-stream preservation, worst %.2e", worst));

    const BaseState2D calm = build_base_state(0.0, 0.0, 5.0, 151);
    GaussianSource src;
    src.center = {0, 0, 0};
    src.half_width = 3.0 * calm.h;
    src.amplitude = 1.0;
    src.frequency = 800.0;
    EulerOptions opts;
    opts.sponge_width = 0.9;
    const auto decay =
        run_case(calm, src, 600, {{0.8, 0, 0}, {1.6, 0, 0}}, opts);
    const double a1 = extract_sinusoid(extract_window(decay[0], 100), 800.0,
                                       decay[0].dt)
                          .amplitude;
    const double a2 = extract_sinusoid(extract_window(decay[1], 100), 800.0,
                                       decay[1].dt)
                          .amplitude;
    const double ratio = (a1 / a2) / std::sqrt(1.6 / 0.8);
    checks.expect(std::abs(ratio - 1.0) < 0.05,
                  fmt("euler 1/sqrt(r) amplitude decay within 5%% "
                      "(off by %.2f%%)",
                      100.0 * std::abs(ratio - 1.0)));
  }

  // End-to-end byte determinism of the pipeline under a fixed seed.
  {
    json j;
    j["scenario"] = "no_wind";
    j["seed"] = 9;
    j["geometry"] = {{"speaker_count", 3}, {"boundary_mics", 4}};
    j["training"] = {{"f_min", 500.0}, {"f_max", 800.0}, {"f_count", 4}};
    j["networks"] = {{"amplitude_hidden", {4, 3}},
                     {"phase_hidden", {4, 3}},
                     {"wavenumber_hidden", {3, 2}},
                     {"mse_target", 1e-7},
                     {"max_epochs", 300}};
    j["solve"] = {{"frequencies", {600.0}}, {"machs", {0.0}},
                  {"lambdas", {0.0, 0.01}}};
    j["evaluate"] = {{"zone_grid", 7}, {"boundary_points", 16}};
    ExperimentConfig cfg = parse_config(j);
    cfg.workers = g_workers;
    cfg.out_dir = g_work + "/determinism";
    fs::remove_all(cfg.out_dir);

    auto run_all = [&] {
      run_generate(cfg);
      run_train(cfg, "model", paths::training_csv(cfg, "model"));
      run_solve(cfg);
      run_report(cfg, run_evaluate(cfg));
      std::map<std::string, std::string> files;
      for (const auto& entry : fs::recursive_directory_iterator(cfg.out_dir))
        if (entry.is_regular_file()) {
          std::ifstream in(entry.path(), std::ios::binary);
          files[entry.path().string()] =
              std::string((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
        }
      return files;
    };
    const auto first = run_all();
    const auto second = run_all();
    checks.expect(first == second && !first.empty(),
                  fmt("end-to-end byte determinism across %zu artifacts",
                      first.size()));
    fs::remove_all(cfg.out_dir);
  }

  return checks.ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted{1, 2, 3, 4, 5, 7};
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criteria" && i + 1 < argc) {
      wanted.clear();
      std::istringstream ss(argv[++i]);
      std::string token;
      while (std::getline(ss, token, ',')) wanted.insert(std::stoi(token));
    } else if (arg == "--work" && i + 1 < argc) {
      g_work = argv[++i];
    } else if (arg == "--workers" && i + 1 < argc) {
      g_workers = unsigned(std::stoul(argv[++i]));
    } else {
      std::fprintf(stderr,
                   "usage: sfr_acceptance [--criteria 1,2,...] [--work dir] "
                   "[--workers n]\n");
      return 2;
    }
  }
  fs::create_directories(g_work);

  const std::map<int, std::pair<const char*, bool (*)()>> criteria{
      {1, {"uniform-wind anchor values (AC/RE at 600 Hz)", criterion_1}},
      {2, {"MSE-threshold sweep", criterion_2}},
      {3, {"wind-consideration benefit and crossover", criterion_3}},
      {4, {"wavenumber modulation oracle", criterion_4}},
      {5, {"center-microphone study and resonances", criterion_5}},
      {6, {"harsh-conditions tables (long-running)", criterion_6}},
      {7, {"property suites", criterion_7}},
  };

  int failures = 0;
  for (const int id : wanted) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    std::printf("criterion %d: %s\n", id, it->second.first);
    std::fflush(stdout);
    bool ok = false;
    try {
      ok = it->second.second();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
      ok = false;
    }
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id,
                it->second.first);
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
