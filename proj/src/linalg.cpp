#include "splitlab/linalg.hpp"

#include <cmath>
#include <limits>

namespace splitlab::linalg {

Mat orthonormal_basis(const Mat& columns) {
  const Eigen::Index n = columns.rows();
  const Eigen::Index m = columns.cols();
  Eigen::HouseholderQR<Mat> qr(columns);
  Mat q = qr.householderQ() * Mat::Identity(n, m);
  const Mat r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  }
  return q;
}

Mat orthogonal_projector(const Mat& basis) {
  const Mat q = orthonormal_basis(basis);
  return q * q.transpose();
}

double max_principal_sine(const Mat& a, const Mat& b) {
  const Mat residual = b - a * (a.transpose() * b);
  if (residual.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(residual);
  return std::min(1.0, svd.singularValues()(0));
}

double condition_number(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  const double smallest = s(s.size() - 1);
  if (smallest == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smallest;
}

std::vector<std::vector<int>> subsets(int n, int j) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(j));
  for (int i = 0; i < j; ++i) cur[static_cast<std::size_t>(i)] = i;
  if (j == 0 || j > n) {
    if (j == 0) out.push_back({});
    return out;
  }
  while (true) {
    out.push_back(cur);
    int i = j - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - j + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < j; ++k) cur[static_cast<std::size_t>(k)] = cur[static_cast<std::size_t>(k - 1)] + 1;
  }
  return out;
}

Mat compound(const Mat& m, int j) {
  const int n = static_cast<int>(m.rows());
  if (j == 1) return m;
  const auto sets = subsets(n, j);
  const auto size = static_cast<Eigen::Index>(sets.size());
  Mat out(size, size);
  Mat minor(j, j);
  for (Eigen::Index r = 0; r < size; ++r) {
    for (Eigen::Index c = 0; c < size; ++c) {
      const auto& rows = sets[static_cast<std::size_t>(r)];
      const auto& cols = sets[static_cast<std::size_t>(c)];
      for (int a = 0; a < j; ++a)
        for (int b = 0; b < j; ++b)
          minor(a, b) = m(rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
      out(r, c) = minor.determinant();
    }
  }
  return out;
}

Mat random_orthonormal(int n, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat g(n, m);
  for (int c = 0; c < m; ++c)
    for (int r = 0; r < n; ++r) g(r, c) = gauss(rng);
  return orthonormal_basis(g);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto count = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= count;
  my /= count;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LineFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace splitlab::linalg
