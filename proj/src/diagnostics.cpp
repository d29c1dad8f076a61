#include "mtgd/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mtgd/rng.hpp"

namespace mtgd {

namespace {

// Quantile of |N(0,1)| at tau, i.e. x with erf(x/sqrt 2) = tau,
// by bisection.
double half_normal_quantile(double tau) {
  double lo = 0.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (std::erf(mid / std::sqrt(2.0)) < tau ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Matrix random_factor(int rows, int cols, RandomStream& rs) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rs.normal();
  return m;
}

Matrix random_orthogonal(int r, RandomStream& rs) {
  const Matrix g = random_factor(r, r, rs);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(r, r);
  // Fix the sign convention so Q is a deterministic function of g.
  const Matrix rr = q.transpose() * g;
  for (int j = 0; j < r; ++j)
    if (rr(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace

ConcentrationReport median_concentration_check(int n1, int n2, int r, int m,
                                               int trials, double tau,
                                               double tolerance,
                                               std::uint64_t seed) {
  if (n1 < 1 || n2 < 1 || r < 1 || m < 1 || trials < 1)
    throw std::invalid_argument("median_concentration_check: invalid dims");
  ConcentrationReport rep;
  rep.tau = tau;
  rep.target = half_normal_quantile(tau);
  rep.tolerance = tolerance;
  rep.trials = trials;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t ts = mix_seed(seed, t);
    RandomStream rs(mix_seed(ts, 0x01));
    Matrix g = random_factor(n1, 2 * r, rs) *
               random_factor(n2, 2 * r, rs).transpose();
    g /= g.norm();
    SensingEnsemble ens(m, n1, n2, mix_seed(ts, 0x02));
    const Vector meas = apply_forward(ens, g);
    std::vector<double> absm(m);
    for (int i = 0; i < m; ++i) absm[i] = std::abs(meas[i]);
    const double ratio = sample_quantile(std::move(absm), Quantile(tau));
    sum += ratio;
    if (t == 0) rep.ratio_min = rep.ratio_max = ratio;
    rep.ratio_min = std::min(rep.ratio_min, ratio);
    rep.ratio_max = std::max(rep.ratio_max, ratio);
  }
  rep.ratio_mean = sum / trials;
  // The averaged ratio is the stable statistic; per-trial extremes are
  // reported but a single ~3-sigma trial should not fail the check.
  rep.pass = std::abs(rep.ratio_mean - rep.target) <= tolerance;
  return rep;
}

std::string ConcentrationReport::to_json() const {
  return nlohmann::json{{"tau", tau},
                        {"target", target},
                        {"tolerance", tolerance},
                        {"trials", trials},
                        {"ratio_mean", ratio_mean},
                        {"ratio_min", ratio_min},
                        {"ratio_max", ratio_max},
                        {"pass", pass}}
      .dump(2);
}

SandwichResult corrupted_quantile_sandwich_check(
    const std::vector<double>& clean, double s, double p,
    const Corruptor& corruptor, int trials, std::uint64_t seed) {
  if (!(s < p && p < 1.0 - s))
    throw std::invalid_argument(
        "corrupted_quantile_sandwich_check: need s < p < 1-s");
  const int m = static_cast<int>(clean.size());
  const int nout = static_cast<int>(std::floor(s * m));
  const double lower =
      sample_quantile(clean, Quantile(s > 0.0 ? p - s : p));
  const double upper =
      sample_quantile(clean, Quantile(s > 0.0 ? p + s : p));

  SandwichResult res;
  res.trials = trials;
  for (int t = 0; t < trials; ++t) {
    RandomStream rs(mix_seed(seed, t));
    std::vector<double> corrupted = clean;
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    for (int i = 0; i < nout; ++i) {
      const int j = i + static_cast<int>(rs.below(m - i));
      std::swap(idx[i], idx[j]);
      corrupted[idx[i]] = corruptor(rs);
    }
    const double q = sample_quantile(corrupted, Quantile(p));
    if (q < lower || q > upper) {
      res.pass = false;
      res.counterexample = corrupted;
      return res;
    }
  }
  return res;
}

RipReport rip_check(int n1, int n2, int r, int m, int trials,
                    std::uint64_t seed) {
  if (n1 < 1 || n2 < 1 || r < 1 || m < 1 || trials < 1)
    throw std::invalid_argument("rip_check: invalid dims");
  RipReport rep;
  rep.ratios.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t ts = mix_seed(seed, t);
    RandomStream rs(mix_seed(ts, 0x01));
    const Matrix mmat = random_factor(n1, r, rs) *
                        random_factor(n2, r, rs).transpose();
    SensingEnsemble ens(m, n1, n2, mix_seed(ts, 0x02));
    const double ratio =
        apply_forward(ens, mmat).norm() / (std::sqrt(double(m)) * mmat.norm());
    rep.ratios.push_back(ratio);
    rep.delta_hat = std::max(rep.delta_hat, std::abs(ratio - 1.0));
  }
  return rep;
}

std::string RipReport::to_json() const {
  return nlohmann::json{{"delta_hat", delta_hat}, {"ratios", ratios}}.dump(2);
}

RcProbeReport rc_probe(const ProblemInstance& inst,
                       const RecoveryConfig& config, double alpha,
                       double beta, double eps_fraction, int samples,
                       std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("rc_probe: samples >= 1");
  // Balanced representation of the ground truth (X^T X = Y^T Y), which
  // the RC is stated against; the measurements are unchanged.
  const RankRSvd tsvd = rank_r_svd(inst.target(), inst.r);
  Matrix sqrt_sigma = Matrix::Zero(inst.r, inst.r);
  for (int i = 0; i < inst.r; ++i)
    sqrt_sigma(i, i) = std::sqrt(tsvd.singulars[i]);
  const Matrix z =
      FactorPair{tsvd.left * sqrt_sigma, tsvd.right * sqrt_sigma}.stacked();
  Eigen::BDCSVD<Matrix> zsvd(z);
  const double sigma_r = zsvd.singularValues()(inst.r - 1);
  const double z_spec = zsvd.singularValues()(0);
  const double lambda = config.resolved_lambda();
  const int r = inst.r;

  RcProbeReport rep;
  rep.samples = samples;
  rep.alpha = alpha;
  rep.beta = beta;
  rep.eps_fraction = eps_fraction;
  for (int t = 0; t < samples; ++t) {
    RandomStream rs(mix_seed(seed, t));
    const Matrix p = random_orthogonal(r, rs);
    Matrix delta = random_factor(inst.n1 + inst.n2, r, rs);
    delta *= rs.uniform() * eps_fraction * sigma_r / delta.norm();
    const Matrix w = z * p + delta;

    FactorPair fp{w.topRows(inst.n1), w.bottomRows(inst.n2)};
    const Vector pred =
        apply_forward(inst.ensemble, fp.u * fp.v.transpose());
    std::vector<double> residuals(inst.ensemble.count());
    for (int i = 0; i < inst.ensemble.count(); ++i)
      residuals[i] = inst.measurements[i] - pred[i];
    const TruncationResult tr = truncation_mask(residuals, config.alpha_h);
    const Gradients g = tgd_gradients(inst, fp, tr.mask, lambda);
    const Matrix grad = FactorPair{g.grad_u, g.grad_v}.stacked();

    const Matrix h = w - z * procrustes_align(w, z);
    const double lhs = (grad.array() * h.array()).sum();
    const double rhs = sigma_r * sigma_r / alpha * h.squaredNorm() +
                       grad.squaredNorm() / (beta * z_spec * z_spec);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    if (lhs < rhs) ++rep.violations;
  }
  return rep;
}

std::string RcProbeReport::to_json() const {
  return nlohmann::json{{"samples", samples},
                        {"alpha", alpha},
                        {"beta", beta},
                        {"eps_fraction", eps_fraction},
                        {"violations", violations},
                        {"lhs", lhs},
                        {"rhs", rhs}}
      .dump(2);
}

}  // namespace mtgd
