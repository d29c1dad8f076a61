// Times the OpenMP sensing kernels against the serial reference loops.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "mtgd/rng.hpp"
#include "mtgd/sensing.hpp"

using namespace mtgd;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
             .count() /
         reps;
}

}  // namespace

int main(int argc, char** argv) {
  int m = 2000, n1 = 40, n2 = 30, reps = 5;
  if (argc > 1) m = std::atoi(argv[1]);
  if (argc > 2) n1 = std::atoi(argv[2]);
  if (argc > 3) n2 = std::atoi(argv[3]);
  if (argc > 4) reps = std::atoi(argv[4]);

  std::printf("m=%d n1=%d n2=%d threads=%d reps=%d\n", m, n1, n2,
              omp_get_max_threads(), reps);
  SensingEnsemble ens(m, n1, n2, 42);

  RandomStream rs(7);
  Matrix target(n1, n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) target(i, j) = rs.normal();
  std::vector<double> weights(m);
  std::vector<bool> mask(m, true);
  for (auto& w : weights) w = rs.normal();

  Vector fwd_par, fwd_ser;
  Matrix adj_par, adj_ser;
  const double t_fwd_par =
      time_ms([&] { fwd_par = apply_forward(ens, target); }, reps);
  const double t_fwd_ser =
      time_ms([&] { fwd_ser = reference::apply_forward(ens, target); }, reps);
  const double t_adj_par = time_ms(
      [&] { adj_par = apply_adjoint_weighted(ens, weights, mask); }, reps);
  const double t_adj_ser = time_ms(
      [&] { adj_ser = reference::apply_adjoint_weighted(ens, weights, mask); },
      reps);

  const double fwd_dev = (fwd_par - fwd_ser).norm() / fwd_ser.norm();
  const double adj_dev = (adj_par - adj_ser).norm() / adj_ser.norm();
  std::printf("forward : omp %8.3f ms  serial %8.3f ms  speedup %5.2fx  "
              "rel-dev %.2e\n",
              t_fwd_par, t_fwd_ser, t_fwd_ser / t_fwd_par, fwd_dev);
  std::printf("adjoint : omp %8.3f ms  serial %8.3f ms  speedup %5.2fx  "
              "rel-dev %.2e\n",
              t_adj_par, t_adj_ser, t_adj_ser / t_adj_par, adj_dev);
  return (fwd_dev < 1e-12 && adj_dev < 1e-12) ? 0 : 1;
}
