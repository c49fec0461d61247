// Slow, direct reference implementations used to check the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "orip/common.hpp"
#include "orip/gp_regression.hpp"

namespace oracle {

using orip::Matrix;
using orip::Vector;

inline double rbf(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, const orip::gp::Hyperparams& hp) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) r2 += std::pow((a[d] - b[d]) / hp.lengthscales[d], 2);
  return hp.amplitude * hp.amplitude * std::exp(-0.5 * r2);
}

struct DenseGp {
  Vector mean;
  Vector std;
  double lml;
};

// Explicit inverse and determinant through a full-pivot LU. `extra_diag` is
// added to σ² on the diagonal (the library's jitter).
inline DenseGp dense_gp(const Matrix& x, const Vector& y, const Matrix& q, const orip::gp::Hyperparams& hp,
                        double extra_diag) {
  const Eigen::Index n = x.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = rbf(x.row(i), x.row(j), hp);
  k.diagonal().array() += hp.noise_std * hp.noise_std + extra_diag;
  Eigen::FullPivLU<Matrix> lu(k);
  const Matrix k_inv = lu.inverse();
  DenseGp out;
  out.mean.resize(q.rows());
  out.std.resize(q.rows());
  for (Eigen::Index m = 0; m < q.rows(); ++m) {
    Vector ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks[i] = rbf(x.row(i), q.row(m), hp);
    out.mean[m] = ks.dot(k_inv * y);
    out.std[m] = std::sqrt(std::max(0.0, hp.amplitude * hp.amplitude - ks.dot(k_inv * ks)));
  }
  out.lml = -0.5 * y.dot(k_inv * y) - 0.5 * std::log(lu.determinant()) - 0.5 * n * std::log(2.0 * M_PI);
  return out;
}

inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector up = x, down = x;
    up[i] += h;
    down[i] -= h;
    g[i] = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

// ECDFs by counting.
inline double ecdf_left(const std::vector<double>& col, double y) {
  double c = 0;
  for (double v : col) c += v <= y ? 1 : 0;
  return c / static_cast<double>(col.size());
}

inline double ecdf_right(const std::vector<double>& col, double y) {
  double c = 0;
  for (double v : col) c += v >= y ? 1 : 0;
  return c / static_cast<double>(col.size());
}

inline double skewness(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  double m2 = 0, m3 = 0;
  for (double x : v) {
    m2 += (x - mean) * (x - mean);
    m3 += (x - mean) * (x - mean) * (x - mean);
  }
  if (m2 == 0) return 0.0;
  return (m3 / n) / std::pow(std::sqrt(m2 / (n - 1)), 3);
}

inline double copod_score(const Matrix& train, const std::vector<double>& point) {
  const double n = static_cast<double>(train.rows());
  const double floor = 1.0 / (n + 1.0);
  double sl = 0, sr = 0, ss = 0;
  for (Eigen::Index o = 0; o < train.cols(); ++o) {
    std::vector<double> col(train.col(o).data(), train.col(o).data() + train.rows());
    const double l = -std::log(std::max(ecdf_left(col, point[o]), floor));
    const double r = -std::log(std::max(ecdf_right(col, point[o]), floor));
    sl += l;
    sr += r;
    ss += skewness(col) < 0 ? l : r;
  }
  return std::max({sl, sr, ss});
}

// Quadratic dominance check: indices of vectors nobody weakly dominates.
inline std::vector<std::size_t> pareto_front(const std::vector<Vector>& v) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (i == j) continue;
      const bool ge = (v[j].array() >= v[i].array()).all();
      const bool gt = (v[j].array() > v[i].array()).any();
      if (ge && gt) dominated = true;
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

// Direct 2-D convolution with a sampled, normalised Gaussian kernel and
// mirrored borders (edge sample repeated).
inline Matrix gaussian_blur_2d(const Matrix& g, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  double norm = 0;
  for (int a = -radius; a <= radius; ++a)
    for (int b = -radius; b <= radius; ++b) norm += std::exp(-0.5 * (a * a + b * b) / (sigma * sigma));
  auto mirror = [](long i, long n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  Matrix out = Matrix::Zero(g.rows(), g.cols());
  for (long r = 0; r < g.rows(); ++r)
    for (long c = 0; c < g.cols(); ++c)
      for (int a = -radius; a <= radius; ++a)
        for (int b = -radius; b <= radius; ++b)
          out(r, c) += std::exp(-0.5 * (a * a + b * b) / (sigma * sigma)) / norm *
                       g(mirror(r + a, g.rows()), mirror(c + b, g.cols()));
  return out;
}

}  // namespace oracle
