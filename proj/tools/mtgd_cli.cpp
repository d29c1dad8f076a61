// Command-line front end: single recoveries, phase grids, noise sweeps,
// convergence comparisons, statistical diagnostics, and instance
// generation, all seeded and replayable.

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mtgd/harness.hpp"
#include "mtgd/rng.hpp"

namespace fs = std::filesystem;
using namespace mtgd;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int trials = 0;
  bool full = false;
  int threads = 0;
  // Recovery overrides; NaN/0 = not set.
  double alpha_y = -1.0, alpha_h = -1.0, mu = -1.0, lambda = -1.0;
  int rank = 0, max_iters = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment spec file (JSON)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--trials", o.trials, "trials per cell");
  cmd->add_flag("--full", o.full, "full-scale 150x120 grids (slow)");
  cmd->add_option("--threads", o.threads, "worker thread count");
  cmd->add_option("--alpha-y", o.alpha_y, "init truncation threshold");
  cmd->add_option("--alpha-h", o.alpha_h, "loop truncation threshold");
  cmd->add_option("--mu", o.mu, "step size");
  cmd->add_option("--lambda", o.lambda, "balance regularizer weight");
  cmd->add_option("--rank", o.rank, "factor rank");
  cmd->add_option("--max-iters", o.max_iters, "iteration cap");
}

ExperimentSpec build_spec(const CommonOpts& o, ExperimentKind kind) {
  ExperimentSpec spec;
  if (!o.config_path.empty()) {
    spec = parse_spec_file(o.config_path);
  } else {
    nlohmann::json j{{"kind", kind_name(kind)}};
    if (o.full) j["full"] = true;
    spec = parse_spec(j.dump());
  }
  spec.kind = kind;
  if (o.seed != 0) spec.master_seed = o.seed;
  if (o.trials > 0) spec.trials = o.trials;
  if (!o.out_dir.empty()) spec.out_dir = o.out_dir;
  if (o.alpha_y >= 0) spec.recovery.alpha_y = o.alpha_y;
  if (o.alpha_h >= 0) spec.recovery.alpha_h = o.alpha_h;
  if (o.mu >= 0) spec.recovery.step_mu = o.mu;
  if (o.lambda >= 0) spec.recovery.lambda = o.lambda;
  if (o.rank > 0) spec.recovery.rank = o.rank;
  if (o.max_iters > 0) spec.recovery.max_iters = o.max_iters;
  if (o.threads > 0) omp_set_num_threads(o.threads);
  fs::create_directories(spec.out_dir);
  return spec;
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

int run_diagnose(const ExperimentSpec& spec) {
  const int m = spec.m_grid.front();
  const int r = spec.r_grid.front();
  const std::uint64_t seed = spec.master_seed;
  nlohmann::json out;
  out["spec"] = nlohmann::json::parse(spec.to_json());

  bool all_pass = true;
  for (double tau : {0.49, 0.5, 0.51}) {
    auto rep = median_concentration_check(
        20, 20, 1, 5000, 50, tau, 0.03, mix_seed(seed, std::uint64_t(tau * 100)));
    out["concentration"].push_back(nlohmann::json::parse(rep.to_json()));
    all_pass &= rep.pass;
    std::cout << "concentration tau=" << tau << ": "
              << (rep.pass ? "pass" : "FAIL") << " mean=" << rep.ratio_mean
              << " target=" << rep.target << "\n";
  }

  auto rip = rip_check(spec.n1, spec.n2, r, m, 100, mix_seed(seed, 6));
  out["rip"] = nlohmann::json::parse(rip.to_json());
  std::cout << "rip: delta_hat=" << rip.delta_hat << "\n";

  {
    std::vector<double> clean(200);
    RandomStream rs(mix_seed(seed, 7));
    for (auto& v : clean) v = rs.normal();
    auto sw = corrupted_quantile_sandwich_check(
        clean, 0.05, 0.5, [](RandomStream& g) { return g.normal() * 1e9; },
        200, mix_seed(seed, 8));
    out["quantile_sandwich"] = {{"pass", sw.pass}, {"trials", sw.trials}};
    all_pass &= sw.pass;
    std::cout << "quantile sandwich: " << (sw.pass ? "pass" : "FAIL") << "\n";
  }

  {
    const std::uint64_t ts = mix_seed(seed, 9);
    const ProblemInstance inst =
        generate_instance(spec.n1, spec.n2, r, m, 0.0, spec.outlier_scale,
                          0.0, mix_seed(ts, 0xA), mix_seed(ts, 0xB));
    for (double beta : {1000.0, 100.0}) {
      auto rc = rc_probe(inst, spec.recovery, 20.0, beta, 1.0 / 24.0, 100,
                         mix_seed(seed, 10));
      out["rc_probe"].push_back(nlohmann::json::parse(rc.to_json()));
      std::cout << "rc probe beta=" << beta << ": violations="
                << rc.violations << "/" << rc.samples << "\n";
    }
  }

  std::ofstream f(join(spec.out_dir, "diagnostics.json"));
  f << out.dump(2) << "\n";
  std::cout << (all_pass ? "diagnose: all checks passed"
                         : "diagnose: some checks FAILED")
            << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"median-truncated gradient descent for robust low-rank "
               "matrix recovery"};
  app.require_subcommand(1);

  CommonOpts common;

  // recover
  auto* recover = app.add_subcommand(
      "recover", "run a single recovery; writes trace.csv + factors.json");
  std::string instance_path, algorithm = "median-tgd";
  int n1 = 40, n2 = 30, m = 1200;
  double s = 0.0, noise = 0.0, outlier_scale = 1e4;
  add_common(recover, common);
  recover->add_option("--instance", instance_path, "instance JSON to solve");
  recover->add_option("--n1", n1, "rows of the target");
  recover->add_option("--n2", n2, "cols of the target");
  recover->add_option("--m", m, "measurement count");
  recover->add_option("--s", s, "outlier fraction");
  recover->add_option("--noise", noise, "bounded-noise scale");
  recover->add_option("--outlier-scale", outlier_scale,
                      "outlier variance / ||M||_F^2");
  recover->add_option("--algorithm", algorithm, "median-tgd | vanilla-gd");

  auto* gen = app.add_subcommand("gen-instance",
                                 "generate and save an instance JSON");
  add_common(gen, common);
  gen->add_option("--n1", n1, "rows of the target");
  gen->add_option("--n2", n2, "cols of the target");
  gen->add_option("--m", m, "measurement count");
  gen->add_option("--s", s, "outlier fraction");
  gen->add_option("--noise", noise, "bounded-noise scale");
  gen->add_option("--outlier-scale", outlier_scale,
                  "outlier variance / ||M||_F^2");

  auto* phase = app.add_subcommand("phase-grid",
                                   "success-rate grid over (m, r) or (s, r)");
  std::string axis = "mr";
  add_common(phase, common);
  phase->add_option("--axis", axis, "mr (measurements x rank) or sr");

  auto* noise_cmd =
      app.add_subcommand("noise-sweep", "mean error vs m, both algorithms");
  add_common(noise_cmd, common);

  auto* conv = app.add_subcommand(
      "convergence", "per-iteration error traces, both algorithms");
  add_common(conv, common);

  auto* diag = app.add_subcommand("diagnose",
                                  "statistical checks; writes JSON report");
  add_common(diag, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (recover->parsed() || gen->parsed()) {
      ExperimentSpec spec =
          build_spec(common, ExperimentKind::ConvergenceCompare);
      const int r = spec.recovery.rank > 0 ? spec.recovery.rank : 3;
      ProblemInstance inst =
          !instance_path.empty() && recover->parsed()
              ? load_instance(instance_path)
              : generate_instance(n1, n2, r, m, s, outlier_scale, noise,
                                  mix_seed(spec.master_seed, 0xA),
                                  mix_seed(spec.master_seed, 0xB));
      if (gen->parsed()) {
        const std::string path = join(spec.out_dir, "instance.json");
        save_instance(inst, path);
        std::cout << "wrote " << path << "\n";
        return 0;
      }
      RecoveryConfig cfg = spec.recovery;
      cfg.algorithm = algorithm == "vanilla-gd" ? Algorithm::VanillaGd
                                                : Algorithm::MedianTgd;
      const RecoveryTrace trace = run_recovery(inst, cfg);
      write_trace_csv(trace, join(spec.out_dir, "trace.csv"));
      // Estimated factors in the instance schema's factor block.
      ProblemInstance est = inst;
      est.x_true = trace.final_factors.u;
      est.y_true = trace.final_factors.v;
      const nlohmann::json factors =
          nlohmann::json::parse(instance_to_json(est)).at("factors");
      std::ofstream f(join(spec.out_dir, "factors.json"));
      f << factors.dump(2) << "\n";
      std::cout << "final normalized error: " << trace.final_error() << " ("
                << trace.iterations_run << " iterations)\n";
      return 0;
    }
    if (phase->parsed()) {
      ExperimentSpec spec = build_spec(
          common, axis == "sr" ? ExperimentKind::PhaseGridSR
                               : ExperimentKind::PhaseGridMR);
      const auto cells = run_phase_grid(spec);
      const std::string path = join(spec.out_dir, "phase_grid.csv");
      write_phase_grid_csv(spec, cells, path);
      std::cout << "wrote " << path << " (" << cells.size() << " cells)\n";
      return 0;
    }
    if (noise_cmd->parsed()) {
      ExperimentSpec spec = build_spec(common, ExperimentKind::NoiseStability);
      if (spec.noise_scale == 0.0) spec.noise_scale = 0.05;
      const auto points = run_noise_stability(spec);
      const std::string path = join(spec.out_dir, "noise_sweep.csv");
      write_noise_csv(spec, points, path);
      std::cout << "wrote " << path << "\n";
      return 0;
    }
    if (conv->parsed()) {
      ExperimentSpec spec =
          build_spec(common, ExperimentKind::ConvergenceCompare);
      const auto points = run_convergence_compare(spec);
      const std::string path = join(spec.out_dir, "convergence.csv");
      write_convergence_csv(spec, points, path);
      std::cout << "wrote " << path << "\n";
      return 0;
    }
    if (diag->parsed()) {
      ExperimentSpec spec = build_spec(common, ExperimentKind::Diagnose);
      return run_diagnose(spec);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
