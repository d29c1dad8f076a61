#include "mtgd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mtgd {

Matrix RankRSvd::reconstruction() const {
  const int r = static_cast<int>(singulars.size());
  Matrix s = Matrix::Zero(r, r);
  for (int i = 0; i < r; ++i) s(i, i) = singulars[i];
  return left * s * right.transpose();
}

Quantile::Quantile(double t) : tau(t) {
  if (!(t > 0.0 && t < 1.0))
    throw std::invalid_argument("Quantile: tau must be in (0,1)");
}

RankRSvd rank_r_svd(const Matrix& m, int r) {
  if (r < 1 || r > std::min(m.rows(), m.cols()))
    throw std::invalid_argument("rank_r_svd: r out of range");
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("rank_r_svd: SVD did not converge");
  RankRSvd out;
  out.left = svd.matrixU().leftCols(r);
  out.right = svd.matrixV().leftCols(r);
  out.singulars.assign(svd.singularValues().data(),
                       svd.singularValues().data() + r);
  return out;
}

Matrix procrustes_align(const Matrix& w, const Matrix& z) {
  if (w.rows() != z.rows() || w.cols() != z.cols())
    throw std::invalid_argument("procrustes_align: shape mismatch");
  Matrix cross = z.transpose() * w;  // r x r
  Eigen::JacobiSVD<Matrix> svd(cross,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

double factor_distance(const Matrix& w, const Matrix& z) {
  return (w - z * procrustes_align(w, z)).norm();
}

double sample_quantile(std::vector<double> values, Quantile q) {
  if (values.empty())
    throw std::invalid_argument("sample_quantile: empty input");
  const auto m = values.size();
  const auto k = static_cast<std::size_t>(
      std::ceil(q.tau * static_cast<double>(m)));
  const std::size_t idx = (k == 0 ? 0 : k - 1);  // 0-based
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[idx];
}

double sample_median(std::vector<double> values) {
  return sample_quantile(std::move(values), Quantile(0.5));
}

}  // namespace mtgd
