#include <doctest.h>
#include <omp.h>

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

std::vector<double> random_weights(int m, RandomStream& rs) {
  std::vector<double> w(m);
  for (auto& x : w) x = rs.normal();
  return w;
}

std::vector<bool> random_mask(int m, RandomStream& rs) {
  std::vector<bool> mask(m);
  for (int i = 0; i < m; ++i) mask[i] = rs.below(4) != 0;
  return mask;
}

}  // namespace

TEST_CASE("parallel kernels match the serial reference at scale") {
  RandomStream rs(101);
  // Sizes straddling the reduction block length.
  for (int m : {1, 7, 255, 256, 257, 1000, 2048 + 3}) {
    SensingEnsemble e(m, 11, 9, 500 + m);
    const Matrix g = random_matrix(11, 9, rs);
    const Vector fast = apply_forward(e, g);
    const Vector slow = reference::apply_forward(e, g);
    CHECK((fast - slow).norm() <= 1e-12 * (1.0 + slow.norm()));

    const auto w = random_weights(m, rs);
    const auto mask = random_mask(m, rs);
    const Matrix a_fast = apply_adjoint_weighted(e, w, mask);
    const Matrix a_slow = reference::apply_adjoint_weighted(e, w, mask);
    CHECK((a_fast - a_slow).norm() <= 1e-12 * (1.0 + a_slow.norm()));
  }
}

TEST_CASE("kernel outputs do not depend on the thread count") {
  RandomStream rs(103);
  const int m = 1337;
  SensingEnsemble e(m, 13, 10, 7);
  const Matrix g = random_matrix(13, 10, rs);
  const auto w = random_weights(m, rs);
  const auto mask = random_mask(m, rs);

  const int saved = omp_get_max_threads();
  Vector f1;
  Matrix a1;
  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    const Vector f = apply_forward(e, g);
    const Matrix a = apply_adjoint_weighted(e, w, mask);
    if (threads == 1) {
      f1 = f;
      a1 = a;
    } else {
      CHECK((f - f1).norm() == 0.0);  // bit-identical, not just close
      CHECK((a - a1).norm() == 0.0);
    }
  }
  omp_set_num_threads(saved);
}

TEST_CASE("storage policy is invisible to the kernels") {
  RandomStream rs(107);
  const int m = 600;
  SensingEnsemble mat(m, 9, 8, 42, Storage::Materialized);
  SensingEnsemble regen(m, 9, 8, 42, Storage::Regenerate);
  const Matrix g = random_matrix(9, 8, rs);
  const auto w = random_weights(m, rs);
  const auto mask = random_mask(m, rs);
  CHECK((apply_forward(mat, g) - apply_forward(regen, g)).norm() == 0.0);
  CHECK((apply_adjoint_weighted(mat, w, mask) -
         apply_adjoint_weighted(regen, w, mask))
            .norm() == 0.0);
}

TEST_CASE("adjoint is the transpose of forward") {
  // <A(G), w>_masked == <G, A*_masked(w)> for any weights and mask.
  RandomStream rs(109);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 50 + static_cast<int>(rs.below(200));
    SensingEnsemble e(m, 7, 6, 900 + trial);
    const Matrix g = random_matrix(7, 6, rs);
    const auto w = random_weights(m, rs);
    const auto mask = random_mask(m, rs);
    const Vector fwd = apply_forward(e, g);
    double lhs = 0.0;
    for (int i = 0; i < m; ++i)
      if (mask[i]) lhs += fwd[i] * w[i];
    const double rhs =
        (g.array() * apply_adjoint_weighted(e, w, mask).array()).sum();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}
