#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mtgd/linalg.hpp"
#include "mtgd/rng.hpp"

using namespace mtgd;

namespace {

Matrix random_matrix(int rows, int cols, RandomStream& rs) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rs.normal();
  return m;
}

// Dense search over the 2x2 orthogonal group: rotations and
// rotoreflections, angle step 1e-3.
double grid_search_distance(const Matrix& w, const Matrix& z) {
  double best = std::numeric_limits<double>::infinity();
  for (int refl = 0; refl < 2; ++refl) {
    for (double ang = 0.0; ang < 6.2832; ang += 1e-3) {
      Matrix q(2, 2);
      q << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
      if (refl) q.col(1) = -q.col(1);
      best = std::min(best, (w - z * q).norm());
    }
  }
  return best;
}

double sort_quantile(std::vector<double> v, double tau) {
  std::sort(v.begin(), v.end());
  const auto k = static_cast<std::size_t>(std::ceil(tau * v.size()));
  return v[k - 1];
}

}  // namespace

TEST_CASE("rank_r_svd on diagonal matrix") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 3;
  m(1, 1) = 2;
  m(2, 2) = 1;
  const RankRSvd svd = rank_r_svd(m, 2);
  CHECK(svd.singulars[0] == doctest::Approx(3.0));
  CHECK(svd.singulars[1] == doctest::Approx(2.0));
  Matrix expect = Matrix::Zero(3, 3);
  expect(0, 0) = 3;
  expect(1, 1) = 2;
  CHECK((svd.reconstruction() - expect).norm() < 1e-12);
}

TEST_CASE("rank_r_svd zero matrix") {
  const RankRSvd svd = rank_r_svd(Matrix::Zero(4, 3), 1);
  CHECK(svd.singulars[0] == 0.0);
  CHECK(svd.reconstruction().norm() == 0.0);
}

TEST_CASE("rank_r_svd reconstructs exactly rank-2 input") {
  RandomStream rs(11);
  const Matrix g = random_matrix(6, 1, rs) * random_matrix(5, 1, rs).transpose() +
                   random_matrix(6, 1, rs) * random_matrix(5, 1, rs).transpose();
  const RankRSvd svd = rank_r_svd(g, 2);
  CHECK((g - svd.reconstruction()).norm() < 1e-10);
  CHECK((svd.left.transpose() * svd.left - Matrix::Identity(2, 2)).norm() <
        1e-10);
  CHECK((svd.right.transpose() * svd.right - Matrix::Identity(2, 2)).norm() <
        1e-10);
  CHECK(svd.singulars[0] >= svd.singulars[1]);
}

TEST_CASE("rank_r_svd rejects bad rank") {
  CHECK_THROWS_AS(rank_r_svd(Matrix::Zero(3, 3), 4), std::invalid_argument);
  CHECK_THROWS_AS(rank_r_svd(Matrix::Zero(3, 3), 0), std::invalid_argument);
}

TEST_CASE("rank_r_svd rank-r reconstruction over random ranks") {
  RandomStream rs(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + static_cast<int>(rs.below(4));
    const Matrix g =
        random_matrix(8, r, rs) * random_matrix(7, r, rs).transpose();
    const RankRSvd svd = rank_r_svd(g, r);
    CHECK((g - svd.reconstruction()).norm() <= 1e-9 * g.norm());
  }
}

TEST_CASE("procrustes identity and exact orthogonal match") {
  RandomStream rs(3);
  const Matrix z = random_matrix(4, 2, rs);
  CHECK((procrustes_align(z, z) - Matrix::Identity(2, 2)).norm() < 1e-12);

  const double ang = 0.73;
  Matrix p(2, 2);
  p << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
  const Matrix w = z * p;
  const Matrix q = procrustes_align(w, z);
  CHECK((q - p).norm() < 1e-10);
  CHECK((w - z * q).norm() < 1e-10);
}

TEST_CASE("procrustes matches grid-search oracle") {
  RandomStream rs(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix w = random_matrix(4, 2, rs);
    const Matrix z = random_matrix(4, 2, rs);
    const Matrix q = procrustes_align(w, z);
    const double achieved = (w - z * q).norm();
    CHECK(achieved <= grid_search_distance(w, z) + 1e-6);
    CHECK(factor_distance(w, z) == doctest::Approx(achieved));
  }
}

TEST_CASE("procrustes output is always orthogonal") {
  RandomStream rs(29);
  for (int trial = 0; trial < 50; ++trial) {
    const int r = 1 + static_cast<int>(rs.below(3));
    const Matrix w = random_matrix(6, r, rs);
    const Matrix z = random_matrix(6, r, rs);
    const Matrix q = procrustes_align(w, z);
    CHECK((q.transpose() * q - Matrix::Identity(r, r)).norm() <= 1e-10);
  }
}

TEST_CASE("factor_distance invariances and minimality") {
  RandomStream rs(31);
  const Matrix z = random_matrix(5, 2, rs);
  CHECK(factor_distance(z, z) == doctest::Approx(0.0));

  Matrix p(2, 2);
  p << 0, 1, 1, 0;  // reflection
  CHECK(factor_distance(z * p, z) < 1e-12);

  for (int trial = 0; trial < 30; ++trial) {
    const Matrix w = random_matrix(5, 2, rs);
    const double ang = rs.uniform(0, 6.2832);
    Matrix rot(2, 2);
    rot << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
    if (rs.below(2)) rot.col(0) = -rot.col(0);
    CHECK(factor_distance(w, z) <= (w - z * rot).norm() + 1e-12);
  }
}

TEST_CASE("factor_distance shape mismatch") {
  CHECK_THROWS_AS(factor_distance(Matrix::Zero(4, 2), Matrix::Zero(5, 2)),
                  std::invalid_argument);
}

TEST_CASE("sample_quantile examples") {
  CHECK(sample_quantile({1, 3, 2}, Quantile(0.5)) == 2);
  // |.| of [-1,0,2,-3,4]: k = ceil(2.5) = 3 -> third smallest of
  // {0,1,2,3,4} = 2
  CHECK(sample_quantile({1, 0, 2, 3, 4}, Quantile(0.5)) == 2);
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i + 1;
  CHECK(sample_quantile(v, Quantile(0.49)) == 49);
  CHECK_THROWS_AS(sample_quantile({}, Quantile(0.5)), std::invalid_argument);
  CHECK_THROWS_AS(Quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Quantile(1.0), std::invalid_argument);
}

TEST_CASE("sample_quantile matches sort oracle and count invariants") {
  RandomStream rs(41);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + static_cast<int>(rs.below(40));
    std::vector<double> v(m);
    for (auto& x : v) x = rs.below(2) ? rs.normal() : std::floor(rs.normal());
    const double tau = rs.uniform(0.01, 0.99);
    const double theta = sample_quantile(v, Quantile(tau));
    CHECK(theta == sort_quantile(v, tau));
    CHECK(std::find(v.begin(), v.end(), theta) != v.end());
    const int k = static_cast<int>(std::ceil(tau * m));
    int le = 0, lt = 0;
    for (double x : v) {
      le += x <= theta;
      lt += x < theta;
    }
    CHECK(le >= k);
    CHECK(lt <= k - 1);
  }
}

TEST_CASE("order statistic perturbation bound (fuzzed)") {
  RandomStream rs(43);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 1 + static_cast<int>(rs.below(30));
    std::vector<double> x(m), y(m);
    double inf_norm = 0.0;
    for (int i = 0; i < m; ++i) {
      x[i] = rs.normal() * std::exp(rs.uniform(-2, 6));
      y[i] = x[i] + rs.normal() * std::exp(rs.uniform(-3, 3));
      inf_norm = std::max(inf_norm, std::abs(x[i] - y[i]));
    }
    const double tau = rs.uniform(0.01, 0.99);
    CHECK(std::abs(sample_quantile(x, Quantile(tau)) -
                   sample_quantile(y, Quantile(tau))) <= inf_norm);
  }
}
