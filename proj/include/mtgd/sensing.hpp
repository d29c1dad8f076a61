#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtgd/linalg.hpp"

namespace mtgd {

enum class Storage { Materialized, Regenerate };

// Collection of m Gaussian sensing matrices A_i (n1 x n2), each a pure
// function of (seed, i). Materialized keeps all entries in memory;
// Regenerate rebuilds each A_i on demand from its per-index stream.
// Both modes produce bit-identical matrices.
class SensingEnsemble {
 public:
  static constexpr std::size_t kDefaultMemoryBudget = std::size_t{1} << 30;

  SensingEnsemble(int m, int n1, int n2, std::uint64_t seed,
                  Storage storage);
  // Picks Materialized when the dense ensemble fits in memory_budget
  // bytes, Regenerate otherwise.
  SensingEnsemble(int m, int n1, int n2, std::uint64_t seed,
                  std::size_t memory_budget = kDefaultMemoryBudget);

  int count() const { return m_; }
  int rows() const { return n1_; }
  int cols() const { return n2_; }
  std::uint64_t seed() const { return seed_; }
  Storage storage() const { return storage_; }

  // A_i as a dense matrix (row-major fill order from its stream).
  Matrix matrix(int i) const;

  // Row-major entries of A_i written to out (size n1*n2).
  void fill_entries(int i, double* out) const;

 private:
  int m_, n1_, n2_;
  std::uint64_t seed_;
  Storage storage_;
  std::vector<double> flat_;  // materialized entries, row-major per matrix

  friend Vector apply_forward(const SensingEnsemble&, const Matrix&);
  friend Matrix apply_adjoint_weighted(const SensingEnsemble&,
                                       const std::vector<double>&,
                                       const std::vector<bool>&);
};

// { <A_i, M> }_{i=1..m}. Parallel over i; each entry is a single serial
// inner product, so results do not depend on the thread count.
Vector apply_forward(const SensingEnsemble& e, const Matrix& m_matrix);

// Sum_{i : mask_i} weights_i * A_i. Accumulated over fixed-size index
// blocks combined in block order, so the reduction is deterministic and
// independent of the thread count.
Matrix apply_adjoint_weighted(const SensingEnsemble& e,
                              const std::vector<double>& weights,
                              const std::vector<bool>& mask);

// Plain scalar-loop implementations, kept as the reference path for
// testing and benchmarking the parallel kernels against.
namespace reference {
Vector apply_forward(const SensingEnsemble& e, const Matrix& m_matrix);
Matrix apply_adjoint_weighted(const SensingEnsemble& e,
                              const std::vector<double>& weights,
                              const std::vector<bool>& mask);
}  // namespace reference

// Ground truth factors, measurements, and corruption metadata for one
// synthetic recovery problem.
struct ProblemInstance {
  int n1 = 0, n2 = 0, r = 0;
  Matrix x_true;                 // n1 x r
  Matrix y_true;                 // n2 x r
  Vector measurements;           // length m
  std::vector<int> outlier_set;  // sorted indices into measurements
  double outlier_fraction = 0.0;
  double outlier_scale = 0.0;
  double noise_level = 0.0;
  std::uint64_t ensemble_seed = 0, instance_seed = 0;
  SensingEnsemble ensemble;

  Matrix target() const { return x_true * y_true.transpose(); }
};

// Summary statistics of the target matrix M = X Y^T.
struct GroundTruth {
  Matrix m_matrix;
  double frob_norm = 0.0;
  double sigma_r = 0.0;
  double kappa = 0.0;      // sigma_1 / sigma_r
  double kappa_bar = 0.0;  // ||M||_F / (sqrt(r) sigma_r)
};

GroundTruth ground_truth(const Matrix& x_true, const Matrix& y_true);

// X, Y ~ iid N(0,1); clean measurements <A_i, XY^T>; a uniformly random
// floor(s*m)-subset replaced by eta_i ~ N(0, outlier_scale*||M||_F^2);
// when noise_scale > 0, w_i ~ noise_scale * sigma_r(M) * U[-1,1] added
// to every measurement.
ProblemInstance generate_instance(int n1, int n2, int r, int m, double s,
                                  double outlier_scale, double noise_scale,
                                  std::uint64_t ensemble_seed,
                                  std::uint64_t instance_seed,
                                  std::size_t memory_budget =
                                      SensingEnsemble::kDefaultMemoryBudget);

// JSON instance schema (dims, seeds, fractions, scales, outlier_set,
// measurements, factor block); replayable across runs.
std::string instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const std::string& text);
void save_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace mtgd
