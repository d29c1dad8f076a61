#pragma once

#include <string>
#include <vector>

#include "mtgd/diagnostics.hpp"

namespace mtgd {

enum class ExperimentKind {
  PhaseGridMR,     // success rate over (m, r) at fixed s
  PhaseGridSR,     // success rate over (s, r) at fixed m
  NoiseStability,  // mean error vs m, both algorithms
  ConvergenceCompare,
  Diagnose
};

std::string kind_name(ExperimentKind k);
ExperimentKind kind_from_name(const std::string& name);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::PhaseGridMR;
  int n1 = 40, n2 = 30;
  std::vector<int> m_grid;
  std::vector<int> r_grid;
  std::vector<double> s_grid;
  int trials = 10;
  double success_threshold = 1e-6;
  double outlier_scale = 1e4;
  double noise_scale = 0.0;
  RecoveryConfig recovery;
  std::uint64_t master_seed = 1;
  std::string out_dir = ".";
  bool full = false;  // full-scale 150x120 grids (slow)

  std::string to_json() const;
};

// Parse and validate a spec document; unknown keys are rejected,
// missing keys get kind-dependent defaults (applied idempotently, so
// parse(echo(spec)) == spec).
ExperimentSpec parse_spec(const std::string& json_text);
ExperimentSpec parse_spec_file(const std::string& path);

// Per-trial seeds: a pure function of (master seed, m, r, s, trial), so
// grids are reorderable and embarrassingly parallel.
std::uint64_t trial_seed(std::uint64_t master, int m, int r, double s,
                         int trial);

struct PhaseCellResult {
  int m = 0, r = 0;
  double s = 0.0;
  int trials = 0, successes = 0;
  double success_rate = 0.0;
  double mean_error = 0.0;
  double theoretical_limit_r = 0.0;  // (1-s) m / (n1+n2)
};

std::vector<PhaseCellResult> run_phase_grid(const ExperimentSpec& spec);
void write_phase_grid_csv(const ExperimentSpec& spec,
                          const std::vector<PhaseCellResult>& cells,
                          const std::string& path);

struct NoisePoint {
  int m = 0;
  Algorithm algorithm = Algorithm::MedianTgd;
  int trials = 0;
  double mean_error = 0.0;
};

std::vector<NoisePoint> run_noise_stability(const ExperimentSpec& spec);
void write_noise_csv(const ExperimentSpec& spec,
                     const std::vector<NoisePoint>& points,
                     const std::string& path);

struct ConvergencePoint {
  Algorithm algorithm = Algorithm::MedianTgd;
  double s = 0.0;
  int iter = 0;
  double error = 0.0;
};

std::vector<ConvergencePoint> run_convergence_compare(
    const ExperimentSpec& spec);
void write_convergence_csv(const ExperimentSpec& spec,
                           const std::vector<ConvergencePoint>& points,
                           const std::string& path);

// Trace CSV for a single recovery (wall_ms column is informational and
// excluded from golden comparisons).
void write_trace_csv(const RecoveryTrace& trace, const std::string& path);

std::string algorithm_name(Algorithm a);

}  // namespace mtgd
