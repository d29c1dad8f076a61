#include "mtgd/recovery.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace mtgd {

namespace {

double spectral_norm(const Matrix& m) {
  return Eigen::BDCSVD<Matrix>(m).singularValues()(0);
}

std::vector<double> abs_values(const Vector& v) {
  std::vector<double> out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
  return out;
}

}  // namespace

double RecoveryConfig::resolved_lambda() const {
  return lambda >= 0.0 ? lambda : gamma1(0.65 * alpha_h) / 4.0;
}

Matrix FactorPair::stacked() const {
  Matrix w(u.rows() + v.rows(), u.cols());
  w.topRows(u.rows()) = u;
  w.bottomRows(v.rows()) = v;
  return w;
}

InitResult truncated_spectral_init(const ProblemInstance& inst,
                                   const RecoveryConfig& config) {
  const int r = config.resolved_rank(inst);
  if (r < 1 || r > std::min(inst.n1, inst.n2))
    throw std::invalid_argument("truncated_spectral_init: rank out of range");
  const int m = inst.ensemble.count();
  const Vector& y = inst.measurements;

  int head = m;       // measurements entering the surrogate sum
  double scale = m;   // its normalization
  double threshold;
  if (config.split_init) {
    const int m1 = (m + 1) / 2;
    if (m1 == m)
      throw std::invalid_argument(
          "truncated_spectral_init: split init needs m >= 2");
    std::vector<double> tail(m - m1);
    for (int i = m1; i < m; ++i) tail[i - m1] = std::abs(y[i]);
    threshold = config.alpha_y * sample_median(std::move(tail));
    head = m1;
    scale = m1;
  } else {
    threshold = config.alpha_y * sample_median(abs_values(y));
  }

  std::vector<double> weights(m, 0.0);
  std::vector<bool> mask(m, false);
  for (int i = 0; i < head; ++i) {
    if (std::isinf(threshold) || std::abs(y[i]) <= threshold) {
      mask[i] = true;
      weights[i] = y[i] / scale;
    }
  }
  const Matrix k = apply_adjoint_weighted(inst.ensemble, weights, mask);

  InitResult res;
  if (k.norm() == 0.0) {
    res.factors.u = Matrix::Zero(inst.n1, r);
    res.factors.v = Matrix::Zero(inst.n2, r);
    res.degenerate = true;
    return res;
  }
  const RankRSvd svd = rank_r_svd(k, r);
  Matrix sqrt_sigma = Matrix::Zero(r, r);
  for (int i = 0; i < r; ++i) sqrt_sigma(i, i) = std::sqrt(svd.singulars[i]);
  res.factors.u = svd.left * sqrt_sigma;
  res.factors.v = svd.right * sqrt_sigma;
  return res;
}

TruncationResult truncation_mask(const std::vector<double>& residuals,
                                 double alpha_h) {
  if (residuals.empty())
    throw std::invalid_argument("truncation_mask: empty residuals");
  std::vector<double> absr(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i)
    absr[i] = std::abs(residuals[i]);
  TruncationResult out;
  out.median = sample_median(absr);
  const double threshold = alpha_h * out.median;
  out.mask.resize(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    out.mask[i] = absr[i] <= threshold;
    out.kept += out.mask[i];
  }
  return out;
}

Gradients tgd_gradients(const ProblemInstance& inst, const FactorPair& w,
                        const std::vector<bool>& mask, double lambda) {
  const int m = inst.ensemble.count();
  if (static_cast<int>(mask.size()) != m)
    throw std::invalid_argument("tgd_gradients: mask length mismatch");
  if (w.u.rows() != inst.n1 || w.v.rows() != inst.n2 ||
      w.u.cols() != w.v.cols())
    throw std::invalid_argument("tgd_gradients: factor shape mismatch");

  const Vector pred = apply_forward(inst.ensemble, w.u * w.v.transpose());
  std::vector<double> weights(m);
  for (int i = 0; i < m; ++i) weights[i] = pred[i] - inst.measurements[i];
  const Matrix s = apply_adjoint_weighted(inst.ensemble, weights, mask);

  const Matrix gram = w.u.transpose() * w.u - w.v.transpose() * w.v;
  Gradients g;
  g.grad_u = s * w.v / (2.0 * m) + lambda * w.u * gram;
  g.grad_v = s.transpose() * w.u / (2.0 * m) - lambda * w.v * gram;
  return g;
}

RecoveryTrace run_recovery(const ProblemInstance& inst,
                           const RecoveryConfig& config,
                           const std::optional<FactorPair>& init_override) {
  const int m = inst.ensemble.count();
  const double lambda = config.resolved_lambda();
  const bool vanilla = config.algorithm == Algorithm::VanillaGd;

  FactorPair w;
  if (init_override) {
    w = *init_override;
  } else {
    RecoveryConfig init_cfg = config;
    if (vanilla)  // untruncated spectral init
      init_cfg.alpha_y = std::numeric_limits<double>::infinity();
    const InitResult init = truncated_spectral_init(inst, init_cfg);
    if (init.degenerate)
      throw std::runtime_error(
          "run_recovery: degenerate initialization (K = 0)");
    w = init.factors;
  }

  const double u0_sq = spectral_norm(w.u) * spectral_norm(w.u);
  const double v0_sq = spectral_norm(w.v) * spectral_norm(w.v);
  if (u0_sq == 0.0 || v0_sq == 0.0)
    throw std::runtime_error("run_recovery: zero initial factor norm");

  const Matrix target = inst.target();
  const double target_norm = target.norm();
  const Matrix z = FactorPair{inst.x_true, inst.y_true}.stacked();

  RecoveryTrace trace;
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t_start)
        .count();
  };
  auto record = [&](int iter, const TruncationResult& tr) {
    TraceRecord rec;
    rec.iter = iter;
    rec.normalized_error =
        (w.u * w.v.transpose() - target).norm() / target_norm;
    rec.dist = factor_distance(w.stacked(), z);
    rec.truncation_count = tr.kept;
    rec.median_residual = tr.median;
    rec.wall_ms = elapsed_ms();
    trace.records.push_back(rec);
  };

  std::vector<double> residuals(m), weights(m);
  const std::vector<bool> all_true(m, true);
  for (int t = 0; t < config.max_iters; ++t) {
    const Vector pred = apply_forward(inst.ensemble, w.u * w.v.transpose());
    for (int i = 0; i < m; ++i) {
      residuals[i] = inst.measurements[i] - pred[i];
      weights[i] = -residuals[i];
    }
    TruncationResult tr = truncation_mask(residuals, config.alpha_h);
    if (vanilla) {
      tr.mask = all_true;
      tr.kept = m;
    }
    record(t, tr);

    const Matrix s = apply_adjoint_weighted(inst.ensemble, weights, tr.mask);
    const Matrix gram = w.u.transpose() * w.u - w.v.transpose() * w.v;
    const Matrix grad_u = s * w.v / (2.0 * m) + lambda * w.u * gram;
    const Matrix grad_v = s.transpose() * w.u / (2.0 * m) - lambda * w.v * gram;

    const Matrix du = (config.step_mu / u0_sq) * grad_u;
    const Matrix dv = (config.step_mu / v0_sq) * grad_v;
    w.u -= du;
    w.v -= dv;
    trace.iterations_run = t + 1;

    if (config.stop_tol > 0.0) {
      const double change = std::sqrt(du.squaredNorm() + dv.squaredNorm());
      const double size = std::sqrt(w.u.squaredNorm() + w.v.squaredNorm());
      if (size > 0.0 && change / size < config.stop_tol) break;
    }
  }
  // Final state, mask from the final residuals.
  {
    const Vector pred = apply_forward(inst.ensemble, w.u * w.v.transpose());
    for (int i = 0; i < m; ++i) residuals[i] = inst.measurements[i] - pred[i];
    TruncationResult tr = truncation_mask(residuals, config.alpha_h);
    if (vanilla) {
      tr.mask = all_true;
      tr.kept = m;
    }
    record(trace.iterations_run, tr);
  }
  trace.final_factors = w;
  return trace;
}

double gamma1(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("gamma1: c must be positive");
  constexpr double sqrt_2_over_pi = 0.79788456080286535588;
  return std::erf(c / std::sqrt(2.0)) -
         c * sqrt_2_over_pi * std::exp(-0.5 * c * c);
}

double theory_alpha_y(int r, double kappa_bar_bound) {
  if (r < 1 || !(kappa_bar_bound >= 1.0))
    throw std::invalid_argument("theory_alpha_y: invalid inputs");
  return 2.0 * std::log(std::pow(double(r), 0.25) *
                            std::sqrt(kappa_bar_bound) +
                        20.0);
}

}  // namespace mtgd
