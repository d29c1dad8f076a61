#include <doctest.h>

#include <cmath>

#include "mtgd/rng.hpp"
#include "mtgd/sensing.hpp"

using namespace mtgd;

namespace {

Matrix random_matrix(int rows, int cols, RandomStream& rs) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rs.normal();
  return m;
}

}  // namespace

TEST_CASE("forward of zero matrix is zero") {
  SensingEnsemble e(5, 3, 2, 1);
  CHECK(apply_forward(e, Matrix::Zero(3, 2)).norm() == 0.0);
}

TEST_CASE("single measurement picks one entry") {
  SensingEnsemble e(1, 3, 3, 9);
  Matrix m = Matrix::Zero(3, 3);
  m(0, 0) = 1.0;  // e1 e1^T
  const Vector out = apply_forward(e, m);
  CHECK(out[0] == doctest::Approx(e.matrix(0)(0, 0)));
}

TEST_CASE("forward matches scalar-loop oracle") {
  RandomStream rs(2);
  SensingEnsemble e(4, 3, 2, 77);
  const Matrix m = random_matrix(3, 2, rs);
  const Vector fast = apply_forward(e, m);
  const Vector slow = reference::apply_forward(e, m);
  for (int i = 0; i < 4; ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
}

TEST_CASE("forward shape mismatch") {
  SensingEnsemble e(2, 3, 2, 1);
  CHECK_THROWS_AS(apply_forward(e, Matrix::Zero(2, 3)),
                  std::invalid_argument);
}

TEST_CASE("adjoint basics and loop oracle") {
  SensingEnsemble e(3, 4, 3, 5);
  std::vector<double> w{0.0, 0.0, 0.0};
  std::vector<bool> mask{true, true, true};
  CHECK(apply_adjoint_weighted(e, w, mask).norm() == 0.0);

  SensingEnsemble e1(1, 4, 3, 5);
  CHECK((apply_adjoint_weighted(e1, {1.0}, {true}) - e1.matrix(0)).norm() <
        1e-14);

  RandomStream rs(6);
  w = {rs.normal(), rs.normal(), rs.normal()};
  mask = {true, false, true};
  const Matrix fast = apply_adjoint_weighted(e, w, mask);
  const Matrix slow = reference::apply_adjoint_weighted(e, w, mask);
  CHECK((fast - slow).norm() <= 1e-12 * (1.0 + slow.norm()));

  CHECK_THROWS_AS(apply_adjoint_weighted(e, {1.0}, mask),
                  std::invalid_argument);
}

TEST_CASE("materialized and regenerate agree bit for bit") {
  SensingEnsemble mat(7, 5, 4, 123, Storage::Materialized);
  SensingEnsemble regen(7, 5, 4, 123, Storage::Regenerate);
  for (int i = 0; i < 7; ++i)
    CHECK((mat.matrix(i) - regen.matrix(i)).norm() == 0.0);

  RandomStream rs(8);
  const Matrix m = random_matrix(5, 4, rs);
  const Vector a = apply_forward(mat, m);
  const Vector b = apply_forward(regen, m);
  CHECK((a - b).norm() == 0.0);

  std::vector<double> w(7);
  for (auto& x : w) x = rs.normal();
  const std::vector<bool> mask(7, true);
  CHECK((apply_adjoint_weighted(mat, w, mask) -
         apply_adjoint_weighted(regen, w, mask))
            .norm() == 0.0);
}

TEST_CASE("memory budget selects the storage policy") {
  // 100 * 20 * 20 * 8 bytes = 320 kB
  CHECK(SensingEnsemble(100, 20, 20, 1, std::size_t{1} << 20).storage() ==
        Storage::Materialized);
  CHECK(SensingEnsemble(100, 20, 20, 1, std::size_t{1} << 18).storage() ==
        Storage::Regenerate);
}

TEST_CASE("forward is orthogonally invariant in the factors") {
  RandomStream rs(13);
  SensingEnsemble e(20, 6, 5, 99);
  const Matrix u = random_matrix(6, 2, rs);
  const Matrix v = random_matrix(5, 2, rs);
  const double ang = 1.1;
  Matrix p(2, 2);
  p << std::cos(ang), -std::sin(ang), std::sin(ang), std::cos(ang);
  const Vector a = apply_forward(e, u * v.transpose());
  const Vector b = apply_forward(e, (u * p) * (v * p).transpose());
  CHECK((a - b).norm() <= 1e-12 * a.norm());
}

TEST_CASE("generate_instance clean case") {
  const ProblemInstance inst =
      generate_instance(6, 5, 2, 30, 0.0, 1e4, 0.0, 11, 12);
  CHECK(inst.outlier_set.empty());
  const Vector clean = apply_forward(inst.ensemble, inst.target());
  CHECK((inst.measurements - clean).norm() == 0.0);
}

TEST_CASE("outlier count is floor(s*m)") {
  const ProblemInstance inst =
      generate_instance(6, 5, 2, 100, 0.05, 1e4, 0.0, 11, 12);
  CHECK(inst.outlier_set.size() == 5);
  CHECK(std::is_sorted(inst.outlier_set.begin(), inst.outlier_set.end()));
  // Non-outlier entries are untouched.
  const Vector clean = apply_forward(inst.ensemble, inst.target());
  for (int i = 0; i < 100; ++i) {
    const bool is_outlier =
        std::binary_search(inst.outlier_set.begin(), inst.outlier_set.end(), i);
    if (!is_outlier) CHECK(inst.measurements[i] == clean[i]);
  }
}

TEST_CASE("instances replay bit-for-bit from seeds") {
  const ProblemInstance a =
      generate_instance(6, 5, 2, 50, 0.1, 1e4, 0.05, 21, 22);
  const ProblemInstance b =
      generate_instance(6, 5, 2, 50, 0.1, 1e4, 0.05, 21, 22);
  CHECK((a.measurements - b.measurements).norm() == 0.0);
  CHECK((a.x_true - b.x_true).norm() == 0.0);
  CHECK(a.outlier_set == b.outlier_set);
  const ProblemInstance c =
      generate_instance(6, 5, 2, 50, 0.1, 1e4, 0.05, 21, 23);
  CHECK((a.measurements - c.measurements).norm() != 0.0);
}

TEST_CASE("generate_instance input validation") {
  CHECK_THROWS_AS(generate_instance(4, 4, 5, 10, 0.0, 1, 0, 1, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_instance(4, 4, 2, 10, 1.0, 1, 0, 1, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_instance(4, 4, 2, 10, -0.1, 1, 0, 1, 2),
                  std::invalid_argument);
}

TEST_CASE("ground truth summary") {
  RandomStream rs(55);
  const Matrix x = random_matrix(8, 3, rs);
  const Matrix y = random_matrix(6, 3, rs);
  const GroundTruth gt = ground_truth(x, y);
  CHECK(gt.frob_norm == doctest::Approx((x * y.transpose()).norm()));
  CHECK(gt.kappa >= 1.0);
  CHECK(gt.kappa_bar <= gt.kappa + 1e-12);
  CHECK(gt.kappa_bar >= 1.0 / std::sqrt(3.0) - 1e-12);
}

TEST_CASE("instance JSON round trip") {
  const ProblemInstance a =
      generate_instance(5, 4, 2, 25, 0.08, 1e4, 0.05, 31, 32);
  const ProblemInstance b = instance_from_json(instance_to_json(a));
  CHECK(b.n1 == a.n1);
  CHECK(b.r == a.r);
  CHECK(b.outlier_set == a.outlier_set);
  CHECK((a.measurements - b.measurements).norm() == 0.0);
  CHECK((a.x_true - b.x_true).norm() == 0.0);
  CHECK((a.y_true - b.y_true).norm() == 0.0);
  // Ensemble rebuilt from the same seed.
  CHECK((a.ensemble.matrix(3) - b.ensemble.matrix(3)).norm() == 0.0);
}

TEST_CASE("empirical RIP at desk scale") {
  // Smaller than the acceptance run; sanity check only.
  RandomStream rs(77);
  int in_band = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    Matrix g = random_matrix(30, 2, rs) * random_matrix(30, 2, rs).transpose();
    g /= g.norm();
    SensingEnsemble e(2000, 30, 30, 1000 + t);
    const double ratio = apply_forward(e, g).norm() / std::sqrt(2000.0);
    in_band += (ratio > 0.9 && ratio < 1.1);
  }
  CHECK(in_band == trials);
}
