#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mtgd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Top-r singular triplets; columns of left/right are orthonormal,
// singulars nonincreasing.
struct RankRSvd {
  Matrix left;                    // n1 x r
  std::vector<double> singulars;  // length r, nonincreasing
  Matrix right;                   // n2 x r

  Matrix reconstruction() const;
};

// Quantile level in (0,1).
struct Quantile {
  double tau;
  explicit Quantile(double t);
};

// Best rank-r approximation factors of m (full SVD, truncated).
RankRSvd rank_r_svd(const Matrix& m, int r);

// Orthogonal r x r matrix Q minimizing ||w - z Q||_F, from the full SVD
// of z^T w.
Matrix procrustes_align(const Matrix& w, const Matrix& z);

// ||w - z * procrustes_align(w, z)||_F.
double factor_distance(const Matrix& w, const Matrix& z);

// k-th smallest element with k = ceil(tau * m); expected linear time.
// The result is always an element of `values`.
double sample_quantile(std::vector<double> values, Quantile q);

// Median = sample_quantile at tau = 1/2, i.e. the ceil(m/2)-th order
// statistic (lower convention for even m).
double sample_median(std::vector<double> values);

}  // namespace mtgd
