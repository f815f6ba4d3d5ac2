// Command-line experiment runner: generate / train / simulate / solve /
// evaluate / report / all over a JSON experiment config.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure,
// 4 partial success (stagnated networks or report gaps).

#include <CLI11.hpp>
#include <cstdio>

#include "sfr/evaluate.hpp"
#include "sfr/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;
constexpr int kPartial = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  unsigned workers = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

sfr::ExperimentConfig load(const CommonArgs& args) {
  sfr::ExperimentConfig cfg = sfr::load_config(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.workers > 0) cfg.workers = args.workers;
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

int do_generate(const sfr::ExperimentConfig& cfg) {
  sfr::run_generate(cfg);
  return kOk;
}

int do_train(const sfr::ExperimentConfig& cfg) {
  int stagnated = 0;
  for (const auto& model : cfg.models) {
    const auto result =
        sfr::run_train(cfg, model.name, sfr::paths::training_csv(cfg, model.name));
    stagnated += result.stagnated_networks;
  }
  if (stagnated > 0) {
    std::fprintf(stderr,
                 "warning: %d network(s) missed the MSE target; see the "
                 "training reports\n",
                 stagnated);
    return kPartial;
  }
  return kOk;
}

int do_solve(const sfr::ExperimentConfig& cfg) {
  sfr::run_solve(cfg);
  return kOk;
}

int do_evaluate(const sfr::ExperimentConfig& cfg) {
  sfr::run_evaluate(cfg);
  return kOk;
}

int do_report(const sfr::ExperimentConfig& cfg) {
  const auto rows = sfr::load_metrics_rows(cfg);
  return sfr::run_report(cfg, rows) ? kOk : kPartial;
}

int do_simulate(const sfr::ExperimentConfig& cfg) {
  if (cfg.propagator != sfr::PropagatorKind::euler) {
    std::fprintf(stderr, "simulate: nothing to do for analytic scenarios\n");
    return kOk;
  }
  sfr::run_simulate(cfg);
  return kOk;
}

int do_all(const sfr::ExperimentConfig& cfg) {
  sfr::run_generate(cfg);
  const int train_status = do_train(cfg);
  sfr::run_simulate(cfg);
  sfr::run_solve(cfg);
  const auto rows = sfr::run_evaluate(cfg);
  const bool complete = sfr::run_report(cfg, rows);
  if (train_status != kOk || !complete) return kPartial;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-zone sound field reproduction experiment runner"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string stage;
  for (const char* name :
       {"generate", "train", "simulate", "solve", "evaluate", "report", "all"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--out", args.out_dir, "output directory override");
    sub->add_option("--workers", args.workers, "worker thread count");
    sub->add_option("--seed", args.seed, "master seed override")
        ->each([&args](const std::string&) { args.seed_set = true; });
    sub->callback([&stage, name] { stage = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const sfr::ExperimentConfig cfg = load(args);
    if (stage == "generate") return do_generate(cfg);
    if (stage == "train") return do_train(cfg);
    if (stage == "simulate") return do_simulate(cfg);
    if (stage == "solve") return do_solve(cfg);
    if (stage == "evaluate") return do_evaluate(cfg);
    if (stage == "report") return do_report(cfg);
    if (stage == "all") return do_all(cfg);
    std::fprintf(stderr, "unknown stage\n");
    return kConfigError;
  } catch (const sfr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const sfr::NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumericalError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumericalError;
  }
}
