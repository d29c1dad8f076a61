#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mtgd/recovery.hpp"
#include "mtgd/rng.hpp"

namespace mtgd {

// Concentration of the sample quantile of |A(G)| around its population
// constant, over random unit-Frobenius rank-2r matrices G.
struct ConcentrationReport {
  double tau = 0.5;
  double target = 0.0;  // population quantile of |N(0,1)| at tau
  double tolerance = 0.0;
  int trials = 0;
  double ratio_mean = 0.0, ratio_min = 0.0, ratio_max = 0.0;
  bool pass = false;

  std::string to_json() const;
};

ConcentrationReport median_concentration_check(int n1, int n2, int r, int m,
                                               int trials, double tau,
                                               double tolerance,
                                               std::uint64_t seed);

// Quantile sandwich under corruption of exactly floor(s*m) entries:
// theta_{p-s}(clean) <= theta_p(corrupted) <= theta_{p+s}(clean).
struct SandwichResult {
  bool pass = true;
  int trials = 0;
  // First violating corrupted sequence, if any.
  std::optional<std::vector<double>> counterexample;
};

using Corruptor = std::function<double(RandomStream&)>;

SandwichResult corrupted_quantile_sandwich_check(
    const std::vector<double>& clean, double s, double p,
    const Corruptor& corruptor, int trials, std::uint64_t seed);

// max over trials of |(1/sqrt(m)) ||A(M)||_2 / ||M||_F - 1| for random
// rank-r M.
struct RipReport {
  double delta_hat = 0.0;
  std::vector<double> ratios;  // per trial, (1/sqrt m)||A(M)||_2/||M||_F

  std::string to_json() const;
};

RipReport rip_check(int n1, int n2, int r, int m, int trials,
                    std::uint64_t seed);

// Regularity-condition probe: samples W near Z and evaluates
//   <grad h(W), W - ZQ>  vs
//   sigma_r^2(Z)/alpha * dist^2 + ||grad h(W)||_F^2 / (beta ||Z||^2).
struct RcProbeReport {
  int samples = 0;
  double alpha = 0.0, beta = 0.0, eps_fraction = 0.0;
  int violations = 0;
  std::vector<double> lhs, rhs;  // per sample

  std::string to_json() const;
};

RcProbeReport rc_probe(const ProblemInstance& inst,
                       const RecoveryConfig& config, double alpha,
                       double beta, double eps_fraction, int samples,
                       std::uint64_t seed);

}  // namespace mtgd
