#include <algorithm>
#include <cmath>
#include <numeric>

#include "smogan/error.hpp"
#include "smogan/metrics.hpp"

namespace smogan {

Matrix correlation_matrix(const Matrix& data) {
  const auto n = data.rows();
  const auto p = data.cols();
  if (n < 2) throw Error(Errc::TooFewRows, "correlation needs at least 2 rows");
  const Vector mean = data.colwise().mean().transpose();
  const Matrix c = data.rowwise() - mean.transpose();
  Matrix cov = c.transpose() * c;
  Matrix r = Matrix::Identity(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double denom = std::sqrt(cov(i, i) * cov(j, j));
      const double v = denom > 0.0 ? std::clamp(cov(i, j) / denom, -1.0, 1.0) : 0.0;
      r(i, j) = r(j, i) = v;
    }
  return r;
}

double frobenius_gap(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(Errc::DimensionMismatch, "matrices differ in shape");
  return (a - b).norm();
}

std::pair<double, double> correlation_frobenius_gap(const Matrix& real, const Matrix& pool_a,
                                                    const Matrix& pool_b) {
  if (real.rows() < 3 || pool_a.rows() < 3 || pool_b.rows() < 3)
    throw Error(Errc::TooFewRows, "correlation gap needs at least 3 rows per sample");
  if (pool_a.cols() != real.cols() || pool_b.cols() != real.cols())
    throw Error(Errc::DimensionMismatch, "pools and real data differ in width");
  const Matrix cr = correlation_matrix(real);
  return {frobenius_gap(cr, correlation_matrix(pool_a)), frobenius_gap(cr, correlation_matrix(pool_b))};
}

std::pair<double, double> correlation_frobenius_gap(const Dataset& real, const SyntheticPool& pool_a,
                                                    const SyntheticPool& pool_b) {
  return correlation_frobenius_gap(real.joint(), pool_a.rows, pool_b.rows);
}

ColumnMoments column_moments(const Matrix& data) {
  const auto n = static_cast<double>(data.rows());
  ColumnMoments m;
  m.mean = data.colwise().mean().transpose();
  const auto p = data.cols();
  m.std.resize(p);
  m.skewness.resize(p);
  m.kurtosis.resize(p);
  for (Eigen::Index c = 0; c < p; ++c) {
    const auto centered = (data.col(c).array() - m.mean[c]).eval();
    const double m2 = centered.square().sum() / n;
    const double m3 = centered.cube().sum() / n;
    const double m4 = centered.square().square().sum() / n;
    m.std[c] = std::sqrt(m2);
    m.skewness[c] = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    m.kurtosis[c] = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
  }
  return m;
}

MomentGaps moment_gaps(const Matrix& real, const Matrix& pool) {
  if (real.rows() < 4 || pool.rows() < 4)
    throw Error(Errc::TooFewRows, "moment gaps need at least 4 rows per sample");
  if (real.cols() != pool.cols()) throw Error(Errc::DimensionMismatch, "pool and real differ in width");
  const ColumnMoments a = column_moments(real);
  const ColumnMoments b = column_moments(pool);
  return {(a.mean - b.mean).cwiseAbs().mean(), (a.std - b.std).cwiseAbs().mean(),
          (a.skewness - b.skewness).cwiseAbs().mean(), (a.kurtosis - b.kurtosis).cwiseAbs().mean()};
}

MomentGaps moment_gaps(const Dataset& real, const SyntheticPool& pool) {
  return moment_gaps(real.joint(), pool.rows);
}

SymmetricEigen jacobi_eigen(const Matrix& sym, double tol, int max_sweeps) {
  const auto n = sym.rows();
  if (sym.cols() != n) throw Error(Errc::DimensionMismatch, "eigen solver needs a square matrix");
  Matrix a = sym;
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(1.0, a.norm());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) <= tol * scale) break;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values[k] = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

Matrix PcaResult::project(const Matrix& data) const {
  if (data.cols() != mean.size()) throw Error(Errc::DimensionMismatch, "PCA input width differs");
  return (data.rowwise() - mean.transpose()) * components.transpose();
}

PcaResult pca_project(const Matrix& data, int n_components) {
  const auto n = data.rows();
  const auto p = data.cols();
  if (n < 2) throw Error(Errc::TooFewRows, "PCA needs at least 2 rows");
  if (n_components < 1 || n_components > std::min<Eigen::Index>(n - 1, p))
    throw Error(Errc::BadComponentCount, "n_components must lie in [1, min(rows - 1, cols)]");

  PcaResult r;
  r.mean = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - r.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const SymmetricEigen eig = jacobi_eigen(cov);

  const double total = eig.values.cwiseMax(0.0).sum();
  r.components.resize(n_components, p);
  r.explained_ratios.resize(n_components);
  for (int k = 0; k < n_components; ++k) {
    Vector comp = eig.vectors.col(k);
    Eigen::Index big = 0;
    comp.cwiseAbs().maxCoeff(&big);
    if (comp[big] < 0.0) comp = -comp;
    r.components.row(k) = comp.transpose();
    r.explained_ratios[k] = total > 0.0 ? std::max(0.0, eig.values[k]) / total : 0.0;
  }
  r.projections = centered * r.components.transpose();
  return r;
}

DiagnosticReport diagnose(const Matrix& real, const Matrix& pool, int n_components) {
  DiagnosticReport d;
  d.frobenius_real_vs_pool = correlation_frobenius_gap(real, pool, pool).first;
  d.moment_gaps = moment_gaps(real, pool);
  const PcaResult pca = pca_project(real, n_components);
  d.pca_components = pca.components;
  d.explained_variance_ratios = pca.explained_ratios;
  return d;
}

}  // namespace smogan
