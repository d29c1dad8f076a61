#include "mtgd/sensing.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mtgd/rng.hpp"

namespace mtgd {

namespace {

constexpr int kAdjointBlock = 256;

std::uint64_t matrix_seed(std::uint64_t ensemble_seed, int i) {
  return mix_seed(ensemble_seed, static_cast<std::uint64_t>(i));
}

}  // namespace

SensingEnsemble::SensingEnsemble(int m, int n1, int n2, std::uint64_t seed,
                                 Storage storage)
    : m_(m), n1_(n1), n2_(n2), seed_(seed), storage_(storage) {
  if (m < 0 || n1 < 1 || n2 < 1)
    throw std::invalid_argument("SensingEnsemble: invalid dimensions");
  if (storage_ == Storage::Materialized) {
    flat_.resize(static_cast<std::size_t>(m_) * n1_ * n2_);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m_; ++i)
      fill_entries(i, flat_.data() + static_cast<std::size_t>(i) * n1_ * n2_);
  }
}

SensingEnsemble::SensingEnsemble(int m, int n1, int n2, std::uint64_t seed,
                                 std::size_t memory_budget)
    : SensingEnsemble(
          m, n1, n2, seed,
          static_cast<std::size_t>(m) * n1 * n2 * sizeof(double) <=
                  memory_budget
              ? Storage::Materialized
              : Storage::Regenerate) {}

void SensingEnsemble::fill_entries(int i, double* out) const {
  RandomStream rs(matrix_seed(seed_, i));
  const std::size_t len = static_cast<std::size_t>(n1_) * n2_;
  for (std::size_t k = 0; k < len; ++k) out[k] = rs.normal();
}

Matrix SensingEnsemble::matrix(int i) const {
  if (i < 0 || i >= m_)
    throw std::invalid_argument("SensingEnsemble::matrix: index out of range");
  Matrix a(n1_, n2_);
  std::vector<double> buf;
  const double* src;
  if (storage_ == Storage::Materialized) {
    src = flat_.data() + static_cast<std::size_t>(i) * n1_ * n2_;
  } else {
    buf.resize(static_cast<std::size_t>(n1_) * n2_);
    fill_entries(i, buf.data());
    src = buf.data();
  }
  for (int rr = 0; rr < n1_; ++rr)
    for (int cc = 0; cc < n2_; ++cc) a(rr, cc) = src[rr * n2_ + cc];
  return a;
}

Vector apply_forward(const SensingEnsemble& e, const Matrix& m_matrix) {
  if (m_matrix.rows() != e.rows() || m_matrix.cols() != e.cols())
    throw std::invalid_argument("apply_forward: shape mismatch");
  const int n1 = e.rows(), n2 = e.cols();
  const std::size_t len = static_cast<std::size_t>(n1) * n2;
  // M flattened row-major to match the ensemble layout.
  std::vector<double> mflat(len);
  for (int rr = 0; rr < n1; ++rr)
    for (int cc = 0; cc < n2; ++cc) mflat[rr * n2 + cc] = m_matrix(rr, cc);

  Vector out(e.count());
  const bool mat = e.storage() == Storage::Materialized;
#pragma omp parallel
  {
    std::vector<double> buf(mat ? 0 : len);
#pragma omp for schedule(static)
    for (int i = 0; i < e.count(); ++i) {
      const double* a;
      if (mat) {
        a = e.flat_.data() + static_cast<std::size_t>(i) * len;
      } else {
        e.fill_entries(i, buf.data());
        a = buf.data();
      }
      out[i] = Eigen::Map<const Vector>(a, len).dot(
          Eigen::Map<const Vector>(mflat.data(), len));
    }
  }
  return out;
}

Matrix apply_adjoint_weighted(const SensingEnsemble& e,
                              const std::vector<double>& weights,
                              const std::vector<bool>& mask) {
  const int m = e.count();
  if (static_cast<int>(weights.size()) != m ||
      static_cast<int>(mask.size()) != m)
    throw std::invalid_argument("apply_adjoint_weighted: length mismatch");
  const int n1 = e.rows(), n2 = e.cols();
  const std::size_t len = static_cast<std::size_t>(n1) * n2;
  const int nblocks = (m + kAdjointBlock - 1) / kAdjointBlock;
  const bool mat = e.storage() == Storage::Materialized;

  // Per-block partial sums; block layout is fixed, so the final
  // block-order combine gives the same bits for any thread count.
  std::vector<std::vector<double>> partial(
      nblocks, std::vector<double>(len, 0.0));
#pragma omp parallel
  {
    std::vector<double> buf(mat ? 0 : len);
#pragma omp for schedule(static)
    for (int b = 0; b < nblocks; ++b) {
      double* acc = partial[b].data();
      const int lo = b * kAdjointBlock;
      const int hi = std::min(m, lo + kAdjointBlock);
      for (int i = lo; i < hi; ++i) {
        if (!mask[i] || weights[i] == 0.0) continue;
        const double* a;
        if (mat) {
          a = e.flat_.data() + static_cast<std::size_t>(i) * len;
        } else {
          e.fill_entries(i, buf.data());
          a = buf.data();
        }
        const double w = weights[i];
        Eigen::Map<Vector>(acc, len) +=
            w * Eigen::Map<const Vector>(a, len);
      }
    }
  }
  std::vector<double> total(len, 0.0);
  for (int b = 0; b < nblocks; ++b)
    Eigen::Map<Vector>(total.data(), len) +=
        Eigen::Map<const Vector>(partial[b].data(), len);

  Matrix out(n1, n2);
  for (int rr = 0; rr < n1; ++rr)
    for (int cc = 0; cc < n2; ++cc) out(rr, cc) = total[rr * n2 + cc];
  return out;
}

namespace reference {

Vector apply_forward(const SensingEnsemble& e, const Matrix& m_matrix) {
  if (m_matrix.rows() != e.rows() || m_matrix.cols() != e.cols())
    throw std::invalid_argument("apply_forward: shape mismatch");
  Vector out(e.count());
  for (int i = 0; i < e.count(); ++i) {
    const Matrix a = e.matrix(i);
    double acc = 0.0;
    for (int rr = 0; rr < e.rows(); ++rr)
      for (int cc = 0; cc < e.cols(); ++cc)
        acc += a(rr, cc) * m_matrix(rr, cc);
    out[i] = acc;
  }
  return out;
}

Matrix apply_adjoint_weighted(const SensingEnsemble& e,
                              const std::vector<double>& weights,
                              const std::vector<bool>& mask) {
  const int m = e.count();
  if (static_cast<int>(weights.size()) != m ||
      static_cast<int>(mask.size()) != m)
    throw std::invalid_argument("apply_adjoint_weighted: length mismatch");
  Matrix out = Matrix::Zero(e.rows(), e.cols());
  for (int i = 0; i < m; ++i) {
    if (!mask[i]) continue;
    const Matrix a = e.matrix(i);
    for (int rr = 0; rr < e.rows(); ++rr)
      for (int cc = 0; cc < e.cols(); ++cc)
        out(rr, cc) += weights[i] * a(rr, cc);
  }
  return out;
}

}  // namespace reference

GroundTruth ground_truth(const Matrix& x_true, const Matrix& y_true) {
  GroundTruth gt;
  gt.m_matrix = x_true * y_true.transpose();
  gt.frob_norm = gt.m_matrix.norm();
  const int r = static_cast<int>(x_true.cols());
  Eigen::BDCSVD<Matrix> svd(gt.m_matrix);
  gt.sigma_r = svd.singularValues()(r - 1);
  gt.kappa = svd.singularValues()(0) / gt.sigma_r;
  gt.kappa_bar = gt.frob_norm / (std::sqrt(double(r)) * gt.sigma_r);
  return gt;
}

ProblemInstance generate_instance(int n1, int n2, int r, int m, double s,
                                  double outlier_scale, double noise_scale,
                                  std::uint64_t ensemble_seed,
                                  std::uint64_t instance_seed,
                                  std::size_t memory_budget) {
  if (r < 1 || r > std::min(n1, n2))
    throw std::invalid_argument("generate_instance: rank out of range");
  if (s < 0.0 || s >= 1.0)
    throw std::invalid_argument("generate_instance: s must be in [0,1)");
  if (m < 1) throw std::invalid_argument("generate_instance: m must be >= 1");
  if (outlier_scale < 0.0 || noise_scale < 0.0)
    throw std::invalid_argument("generate_instance: negative scale");

  ProblemInstance inst{
      n1, n2, r, Matrix(), Matrix(), Vector(), {}, s, outlier_scale,
      noise_scale, ensemble_seed, instance_seed,
      SensingEnsemble(m, n1, n2, ensemble_seed, memory_budget)};

  RandomStream fs(mix_seed(instance_seed, 0x11));
  inst.x_true.resize(n1, r);
  inst.y_true.resize(n2, r);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < r; ++j) inst.x_true(i, j) = fs.normal();
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < r; ++j) inst.y_true(i, j) = fs.normal();

  const Matrix target = inst.target();
  inst.measurements = apply_forward(inst.ensemble, target);

  // Outlier support: floor(s*m)-subset, uniform without replacement
  // (partial Fisher-Yates).
  const int nout = static_cast<int>(std::floor(s * m));
  if (nout > 0) {
    RandomStream os(mix_seed(instance_seed, 0x22));
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    for (int i = 0; i < nout; ++i) {
      const int j = i + static_cast<int>(os.below(m - i));
      std::swap(idx[i], idx[j]);
    }
    inst.outlier_set.assign(idx.begin(), idx.begin() + nout);
    std::sort(inst.outlier_set.begin(), inst.outlier_set.end());
    const double sigma = std::sqrt(outlier_scale) * target.norm();
    RandomStream vs(mix_seed(instance_seed, 0x33));
    for (int i : inst.outlier_set) inst.measurements[i] = sigma * vs.normal();
  }

  if (noise_scale > 0.0) {
    const GroundTruth gt = ground_truth(inst.x_true, inst.y_true);
    const double amp = noise_scale * gt.sigma_r;
    RandomStream ns(mix_seed(instance_seed, 0x44));
    for (int i = 0; i < m; ++i)
      inst.measurements[i] += amp * ns.uniform(-1.0, 1.0);
  }
  return inst;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  std::vector<double> row_major;
  row_major.reserve(m.size());
  for (int rr = 0; rr < m.rows(); ++rr)
    for (int cc = 0; cc < m.cols(); ++cc) row_major.push_back(m(rr, cc));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", row_major}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const int rows = j.at("rows"), cols = j.at("cols");
  const auto entries = j.at("entries").get<std::vector<double>>();
  if (static_cast<int>(entries.size()) != rows * cols)
    throw std::invalid_argument("matrix_from_json: entry count mismatch");
  Matrix m(rows, cols);
  for (int rr = 0; rr < rows; ++rr)
    for (int cc = 0; cc < cols; ++cc) {
      const double v = entries[rr * cols + cc];
      if (!std::isfinite(v))
        throw std::invalid_argument("matrix_from_json: non-finite entry");
      m(rr, cc) = v;
    }
  return m;
}

}  // namespace

std::string instance_to_json(const ProblemInstance& inst) {
  nlohmann::json j{
      {"n1", inst.n1},
      {"n2", inst.n2},
      {"r", inst.r},
      {"m", inst.ensemble.count()},
      {"ensemble_seed", inst.ensemble_seed},
      {"instance_seed", inst.instance_seed},
      {"outlier_fraction", inst.outlier_fraction},
      {"outlier_scale", inst.outlier_scale},
      {"noise_level", inst.noise_level},
      {"outlier_set", inst.outlier_set},
      {"measurements",
       std::vector<double>(inst.measurements.data(),
                           inst.measurements.data() + inst.measurements.size())},
      {"factors",
       {{"x_true", matrix_to_json(inst.x_true)},
        {"y_true", matrix_to_json(inst.y_true)}}}};
  return j.dump(2);
}

ProblemInstance instance_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const int n1 = j.at("n1"), n2 = j.at("n2"), r = j.at("r"),
            m = j.at("m");
  ProblemInstance inst{
      n1,
      n2,
      r,
      matrix_from_json(j.at("factors").at("x_true")),
      matrix_from_json(j.at("factors").at("y_true")),
      Vector(),
      j.at("outlier_set").get<std::vector<int>>(),
      j.at("outlier_fraction"),
      j.at("outlier_scale"),
      j.at("noise_level"),
      j.at("ensemble_seed"),
      j.at("instance_seed"),
      SensingEnsemble(m, n1, n2, j.at("ensemble_seed"))};
  const auto meas = j.at("measurements").get<std::vector<double>>();
  if (static_cast<int>(meas.size()) != m)
    throw std::invalid_argument("instance_from_json: measurement count");
  inst.measurements = Eigen::Map<const Vector>(meas.data(), m);
  return inst;
}

void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_instance: cannot open " + path);
  out << instance_to_json(inst) << "\n";
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_instance: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return instance_from_json(ss.str());
}

}  // namespace mtgd
