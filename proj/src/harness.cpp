#include "mtgd/harness.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mtgd/rng.hpp"

namespace mtgd {

namespace {

// Shortest round-trippable decimal representation.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

void write_metadata(std::ofstream& out, const ExperimentSpec& spec) {
  out << "# schema-version 1\n";
  out << "# spec " << nlohmann::json::parse(spec.to_json()).dump() << "\n";
}

ProblemInstance trial_instance(const ExperimentSpec& spec, int m, int r,
                               double s, double noise, int trial) {
  const std::uint64_t ts = trial_seed(spec.master_seed, m, r, s, trial);
  return generate_instance(spec.n1, spec.n2, r, m, s, spec.outlier_scale,
                           noise, mix_seed(ts, 0xA), mix_seed(ts, 0xB));
}

RecoveryConfig cell_config(const ExperimentSpec& spec, int r, Algorithm alg) {
  RecoveryConfig cfg = spec.recovery;
  cfg.rank = r;
  cfg.algorithm = alg;
  return cfg;
}

}  // namespace

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::PhaseGridMR: return "phase-grid-mr";
    case ExperimentKind::PhaseGridSR: return "phase-grid-sr";
    case ExperimentKind::NoiseStability: return "noise-sweep";
    case ExperimentKind::ConvergenceCompare: return "convergence";
    case ExperimentKind::Diagnose: return "diagnose";
  }
  throw std::logic_error("kind_name: unreachable");
}

ExperimentKind kind_from_name(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::PhaseGridMR, ExperimentKind::PhaseGridSR,
        ExperimentKind::NoiseStability, ExperimentKind::ConvergenceCompare,
        ExperimentKind::Diagnose})
    if (kind_name(k) == name) return k;
  throw std::invalid_argument("unknown experiment kind: " + name);
}

std::string algorithm_name(Algorithm a) {
  return a == Algorithm::MedianTgd ? "median-tgd" : "vanilla-gd";
}

std::string ExperimentSpec::to_json() const {
  nlohmann::json rec{{"rank", recovery.rank},
                     {"alpha_y", recovery.alpha_y},
                     {"alpha_h", recovery.alpha_h},
                     {"mu", recovery.step_mu},
                     {"lambda", recovery.lambda},
                     {"max_iters", recovery.max_iters},
                     {"split_init", recovery.split_init},
                     {"stop_tol", recovery.stop_tol}};
  return nlohmann::json{{"kind", kind_name(kind)},
                        {"n1", n1},
                        {"n2", n2},
                        {"m_grid", m_grid},
                        {"r_grid", r_grid},
                        {"s_grid", s_grid},
                        {"trials", trials},
                        {"success_threshold", success_threshold},
                        {"outlier_scale", outlier_scale},
                        {"noise_scale", noise_scale},
                        {"recovery", rec},
                        {"master_seed", master_seed},
                        {"out_dir", out_dir},
                        {"full", full}}
      .dump(2);
}

namespace {

void apply_grid_defaults(ExperimentSpec& spec) {
  auto def_m = [&](std::initializer_list<int> v) {
    if (spec.m_grid.empty()) spec.m_grid.assign(v);
  };
  auto def_r = [&](std::initializer_list<int> v) {
    if (spec.r_grid.empty()) spec.r_grid.assign(v);
  };
  auto def_s = [&](std::initializer_list<double> v) {
    if (spec.s_grid.empty()) spec.s_grid.assign(v);
  };
  switch (spec.kind) {
    case ExperimentKind::PhaseGridMR:
      if (spec.full) {
        def_m({600, 1200, 1800, 2400, 3000});
        def_r({1, 3, 5, 7, 9});
      } else {
        def_m({400, 800, 1200, 1600, 2000});
        def_r({1, 2, 3, 4, 5});
      }
      def_s({0.05});
      break;
    case ExperimentKind::PhaseGridSR:
      def_m({spec.full ? 2700 : 1200});
      def_r(spec.full ? std::initializer_list<int>{1, 3, 5, 7, 9}
                      : std::initializer_list<int>{1, 2, 3, 4, 5});
      def_s({0.0, 0.02, 0.05, 0.1, 0.15});
      break;
    case ExperimentKind::NoiseStability:
      if (spec.full) {
        def_m({1500, 2000, 2500, 3000});
        def_r({5});
      } else {
        def_m({600, 900, 1200, 1600, 2000});
        def_r({3});
      }
      def_s({0.05});
      break;
    case ExperimentKind::ConvergenceCompare:
      def_m({spec.full ? 2400 : 1200});
      def_r({spec.full ? 5 : 3});
      def_s({0.0, 0.01, 0.10});
      break;
    case ExperimentKind::Diagnose:
      def_m({spec.full ? 4000 : 2000});
      def_r({2});
      def_s({0.05});
      break;
  }
}

}  // namespace

ExperimentSpec parse_spec(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("spec parse error: ") + e.what());
  }

  static const std::vector<std::string> known{
      "kind", "n1", "n2", "m_grid", "r_grid", "s_grid", "trials",
      "success_threshold", "outlier_scale", "noise_scale", "recovery",
      "master_seed", "out_dir", "full"};
  static const std::vector<std::string> known_rec{
      "rank", "alpha_y", "alpha_h", "mu", "lambda",
      "max_iters", "split_init", "stop_tol"};
  std::vector<std::string> problems;
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      problems.push_back("unknown key: " + it.key());

  ExperimentSpec spec;
  if (!j.contains("kind")) {
    problems.push_back("missing required key: kind");
  } else {
    try {
      spec.kind = kind_from_name(j.at("kind").get<std::string>());
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
  }
  spec.full = j.value("full", spec.full);
  if (spec.full) {
    spec.n1 = 150;
    spec.n2 = 120;
  }
  spec.n1 = j.value("n1", spec.n1);
  spec.n2 = j.value("n2", spec.n2);
  spec.m_grid = j.value("m_grid", spec.m_grid);
  spec.r_grid = j.value("r_grid", spec.r_grid);
  spec.s_grid = j.value("s_grid", spec.s_grid);
  spec.trials = j.value("trials", spec.trials);
  spec.success_threshold = j.value("success_threshold", spec.success_threshold);
  spec.outlier_scale = j.value("outlier_scale", spec.outlier_scale);
  spec.noise_scale = j.value("noise_scale", spec.noise_scale);
  spec.master_seed = j.value("master_seed", spec.master_seed);
  spec.out_dir = j.value("out_dir", spec.out_dir);
  if (j.contains("recovery")) {
    const auto& rj = j.at("recovery");
    for (auto it = rj.begin(); it != rj.end(); ++it)
      if (std::find(known_rec.begin(), known_rec.end(), it.key()) ==
          known_rec.end())
        problems.push_back("unknown key: recovery." + it.key());
    spec.recovery.rank = rj.value("rank", spec.recovery.rank);
    spec.recovery.alpha_y = rj.value("alpha_y", spec.recovery.alpha_y);
    spec.recovery.alpha_h = rj.value("alpha_h", spec.recovery.alpha_h);
    spec.recovery.step_mu = rj.value("mu", spec.recovery.step_mu);
    spec.recovery.lambda = rj.value("lambda", spec.recovery.lambda);
    spec.recovery.max_iters = rj.value("max_iters", spec.recovery.max_iters);
    spec.recovery.split_init = rj.value("split_init", spec.recovery.split_init);
    spec.recovery.stop_tol = rj.value("stop_tol", spec.recovery.stop_tol);
  }
  apply_grid_defaults(spec);

  if (spec.n1 < 1 || spec.n2 < 1) problems.push_back("n1, n2 must be >= 1");
  if (spec.trials < 1) problems.push_back("trials must be >= 1");
  if (!(spec.success_threshold > 0.0))
    problems.push_back("success_threshold must be > 0");
  if (spec.m_grid.empty()) problems.push_back("m_grid must be nonempty");
  if (spec.r_grid.empty()) problems.push_back("r_grid must be nonempty");
  if (spec.s_grid.empty()) problems.push_back("s_grid must be nonempty");
  for (double s : spec.s_grid)
    if (s < 0.0 || s >= 1.0) problems.push_back("s values must be in [0,1)");
  for (int r : spec.r_grid)
    if (r < 1 || r > std::min(spec.n1, spec.n2))
      problems.push_back("r values must be in [1, min(n1,n2)]");
  if (spec.recovery.alpha_h <= 1.0) problems.push_back("alpha_h must be > 1");
  if (spec.recovery.step_mu <= 0.0) problems.push_back("mu must be > 0");
  if (spec.recovery.max_iters < 1) problems.push_back("max_iters must be >= 1");

  if (!problems.empty()) {
    std::string msg = "invalid experiment spec:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
  }
  return spec;
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

std::uint64_t trial_seed(std::uint64_t master, int m, int r, double s,
                         int trial) {
  const auto s_key = static_cast<std::uint64_t>(std::llround(s * 1e6));
  std::uint64_t h = mix_seed(master, static_cast<std::uint64_t>(m));
  h = mix_seed(h, static_cast<std::uint64_t>(r));
  h = mix_seed(h, s_key);
  return mix_seed(h, static_cast<std::uint64_t>(trial));
}

std::vector<PhaseCellResult> run_phase_grid(const ExperimentSpec& spec) {
  if (spec.kind != ExperimentKind::PhaseGridMR &&
      spec.kind != ExperimentKind::PhaseGridSR)
    throw std::invalid_argument("run_phase_grid: wrong experiment kind");

  struct Cell {
    int m, r;
    double s;
  };
  std::vector<Cell> cells;
  if (spec.kind == ExperimentKind::PhaseGridMR) {
    for (int m : spec.m_grid)
      for (int r : spec.r_grid) cells.push_back({m, r, spec.s_grid.front()});
  } else {
    for (double s : spec.s_grid)
      for (int r : spec.r_grid) cells.push_back({spec.m_grid.front(), r, s});
  }

  std::vector<PhaseCellResult> results(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    PhaseCellResult res;
    res.m = cell.m;
    res.r = cell.r;
    res.s = cell.s;
    res.trials = spec.trials;
    res.theoretical_limit_r =
        (1.0 - cell.s) * cell.m / (spec.n1 + spec.n2);
    double err_sum = 0.0;
    for (int t = 0; t < spec.trials; ++t) {
      const ProblemInstance inst = trial_instance(
          spec, cell.m, cell.r, cell.s, spec.noise_scale, t);
      const RecoveryTrace trace = run_recovery(
          inst, cell_config(spec, cell.r, Algorithm::MedianTgd));
      const double err = trace.final_error();
      err_sum += err;
      if (err < spec.success_threshold) ++res.successes;
    }
    res.success_rate = double(res.successes) / spec.trials;
    res.mean_error = err_sum / spec.trials;
    results[c] = res;
  }
  // Canonical order regardless of scheduling.
  std::sort(results.begin(), results.end(),
            [](const PhaseCellResult& a, const PhaseCellResult& b) {
              return std::tie(a.m, a.s, a.r) < std::tie(b.m, b.s, b.r);
            });
  return results;
}

void write_phase_grid_csv(const ExperimentSpec& spec,
                          const std::vector<PhaseCellResult>& cells,
                          const std::string& path) {
  auto out = open_out(path);
  write_metadata(out, spec);
  out << "m,r,s,trials,successes,success_rate,mean_error,theoretical_limit_r\n";
  for (const auto& c : cells)
    out << c.m << ',' << c.r << ',' << fmt(c.s) << ',' << c.trials << ','
        << c.successes << ',' << fmt(c.success_rate) << ','
        << fmt(c.mean_error) << ',' << fmt(c.theoretical_limit_r) << "\n";
}

std::vector<NoisePoint> run_noise_stability(const ExperimentSpec& spec) {
  if (spec.kind != ExperimentKind::NoiseStability)
    throw std::invalid_argument("run_noise_stability: wrong experiment kind");
  const int r = spec.r_grid.front();
  const double s = spec.s_grid.front();

  std::vector<NoisePoint> points(2 * spec.m_grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < spec.m_grid.size(); ++k) {
    const int m = spec.m_grid[k];
    double sums[2] = {0.0, 0.0};
    for (int t = 0; t < spec.trials; ++t) {
      const ProblemInstance inst =
          trial_instance(spec, m, r, s, spec.noise_scale, t);
      sums[0] += run_recovery(inst, cell_config(spec, r, Algorithm::MedianTgd))
                     .final_error();
      sums[1] += run_recovery(inst, cell_config(spec, r, Algorithm::VanillaGd))
                     .final_error();
    }
    points[2 * k] = {m, Algorithm::MedianTgd, spec.trials,
                     sums[0] / spec.trials};
    points[2 * k + 1] = {m, Algorithm::VanillaGd, spec.trials,
                         sums[1] / spec.trials};
  }
  return points;
}

void write_noise_csv(const ExperimentSpec& spec,
                     const std::vector<NoisePoint>& points,
                     const std::string& path) {
  auto out = open_out(path);
  write_metadata(out, spec);
  out << "m,algorithm,trials,mean_error\n";
  for (const auto& p : points)
    out << p.m << ',' << algorithm_name(p.algorithm) << ',' << p.trials << ','
        << fmt(p.mean_error) << "\n";
}

std::vector<ConvergencePoint> run_convergence_compare(
    const ExperimentSpec& spec) {
  if (spec.kind != ExperimentKind::ConvergenceCompare)
    throw std::invalid_argument(
        "run_convergence_compare: wrong experiment kind");
  const int m = spec.m_grid.front();
  const int r = spec.r_grid.front();

  std::vector<ConvergencePoint> points;
  for (double s : spec.s_grid) {
    // Shared instance per s: both algorithms see identical data.
    const ProblemInstance inst =
        trial_instance(spec, m, r, s, spec.noise_scale, 0);
    for (Algorithm alg : {Algorithm::MedianTgd, Algorithm::VanillaGd}) {
      const RecoveryTrace trace =
          run_recovery(inst, cell_config(spec, r, alg));
      for (const auto& rec : trace.records)
        points.push_back({alg, s, rec.iter, rec.normalized_error});
    }
  }
  return points;
}

void write_convergence_csv(const ExperimentSpec& spec,
                           const std::vector<ConvergencePoint>& points,
                           const std::string& path) {
  auto out = open_out(path);
  write_metadata(out, spec);
  out << "algorithm,s,iter,error\n";
  for (const auto& p : points)
    out << algorithm_name(p.algorithm) << ',' << fmt(p.s) << ',' << p.iter
        << ',' << fmt(p.error) << "\n";
}

void write_trace_csv(const RecoveryTrace& trace, const std::string& path) {
  auto out = open_out(path);
  out << "# schema-version 1\n";
  out << "iter,normalized_error,dist,truncation_count,median_residual,"
         "wall_ms\n";
  for (const auto& rec : trace.records)
    out << rec.iter << ',' << fmt(rec.normalized_error) << ','
        << fmt(rec.dist) << ',' << rec.truncation_count << ','
        << fmt(rec.median_residual) << ',' << fmt(rec.wall_ms) << "\n";
}

}  // namespace mtgd
