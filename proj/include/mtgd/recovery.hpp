#pragma once

#include <optional>
#include <vector>

#include "mtgd/sensing.hpp"

namespace mtgd {

enum class Algorithm { MedianTgd, VanillaGd };

struct RecoveryConfig {
  int rank = 0;  // 0 -> take the instance's rank
  double alpha_y = 12.0;
  double alpha_h = 6.0;
  double step_mu = 0.4;
  double lambda = -1.0;  // <0 -> gamma1(0.65 * alpha_h) / 4
  int max_iters = 10000;
  bool split_init = false;
  double stop_tol = 0.0;  // 0 disables the relative-change stop
  Algorithm algorithm = Algorithm::MedianTgd;

  int resolved_rank(const ProblemInstance& inst) const {
    return rank > 0 ? rank : inst.r;
  }
  double resolved_lambda() const;
};

struct FactorPair {
  Matrix u;  // n1 x r
  Matrix v;  // n2 x r

  Matrix stacked() const;  // (n1+n2) x r
};

struct InitResult {
  FactorPair factors;
  bool degenerate = false;  // K == 0, zero factors returned
};

struct TraceRecord {
  int iter = 0;
  double normalized_error = 0.0;  // ||UV^T - M||_F / ||M||_F
  double dist = 0.0;              // dist(W_t, Z)
  int truncation_count = 0;       // |E^t|
  double median_residual = 0.0;   // med(|r^t|)
  double wall_ms = 0.0;
};

struct RecoveryTrace {
  std::vector<TraceRecord> records;
  FactorPair final_factors;
  int iterations_run = 0;

  double final_error() const { return records.back().normalized_error; }
};

// Truncated spectral initialization: rank-r SVD of the surrogate
// K = (1/m) sum_i y_i A_i 1{|y_i| <= alpha_y med(|y|)} (no-split), or
// the sample-split variant with m1 = ceil(m/2) and the threshold taken
// from the second half. U0 = C_L Sigma^(1/2), V0 = C_R Sigma^(1/2).
InitResult truncated_spectral_init(const ProblemInstance& inst,
                                   const RecoveryConfig& config);

// mask_i = (|r_i| <= alpha_h * med(|r|)), inclusive.
struct TruncationResult {
  std::vector<bool> mask;
  double median = 0.0;
  int kept = 0;
};
TruncationResult truncation_mask(const std::vector<double>& residuals,
                                 double alpha_h);

// grad_u = (1/2m) sum_{i in mask} (<A_i, UV^T> - y_i) A_i V
//          + lambda U (U^T U - V^T V), and symmetrically for grad_v.
struct Gradients {
  Matrix grad_u;
  Matrix grad_v;
};
Gradients tgd_gradients(const ProblemInstance& inst, const FactorPair& w,
                        const std::vector<bool>& mask, double lambda);

// Full algorithm: init then max_iters steps
// U <- U - (mu/||U0||^2) grad_u, V <- V - (mu/||V0||^2) grad_v, with the
// truncation mask recomputed every iteration (MedianTgd) or all-true
// (VanillaGd). Throws on a degenerate initialization. `init_override`
// is a test hook replacing the spectral initialization.
RecoveryTrace run_recovery(const ProblemInstance& inst,
                           const RecoveryConfig& config,
                           const std::optional<FactorPair>& init_override =
                               std::nullopt);

// E[xi^2 1{|xi| <= c}] for xi ~ N(0,1)
//   = erf(c/sqrt(2)) - c sqrt(2/pi) exp(-c^2/2).
double gamma1(double c);

// 2 ln(r^(1/4) kappa_bar0^(1/2) + 20).
double theory_alpha_y(int r, double kappa_bar_bound);

}  // namespace mtgd
