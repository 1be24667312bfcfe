// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qelab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline const cplx iu{0.0, 1.0};

inline double binomial(int a, int b) {
  if (b < 0 || b > a) return 0.0;
  return std::round(std::exp(std::lgamma(a + 1.0) - std::lgamma(b + 1.0) -
                             std::lgamma(a - b + 1.0)));
}

// splitmix64, used to derive independent substream seeds from one root seed.
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t root, std::uint64_t index = 0) {
  return std::mt19937_64(split_seed(root, index));
}

// Largest singular value by power iteration on A* A.  Deterministic start,
// random restart if the first vector is unlucky.
inline double operator_norm(const Mat& a, double tol = 1e-10, int maxit = 2000) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  if (a.cols() == 1) return a.col(0).norm();
  Vec v = Vec::Ones(a.cols());
  for (int j = 0; j < v.size(); ++j) v[j] += cplx(0.0, 1.0 / (j + 2.0));
  v.normalize();
  double s2 = 0.0;
  auto rng = make_rng(0x9e1ab5u);
  std::normal_distribution<double> gauss;
  for (int restart = 0; restart < 3; ++restart) {
    double prev = -1.0;
    for (int it = 0; it < maxit; ++it) {
      Vec w = a.adjoint() * (a * v);
      s2 = w.norm();
      if (s2 == 0.0) return 0.0;
      v = w / s2;
      if (it % 4 == 3) {
        if (std::abs(s2 - prev) <= tol * s2) return std::sqrt(s2);
        prev = s2;
      }
    }
    for (int j = 0; j < v.size(); ++j) v[j] += cplx(gauss(rng), gauss(rng)) * 0.1;
    v.normalize();
  }
  return std::sqrt(s2);
}

inline double hermiticity_defect(const Mat& a) {
  return (a - a.adjoint()).norm();
}

// Matrix-free largest singular value: power iteration on A* A given the two
// apply callbacks.
template <class Apply, class ApplyAdj>
inline double operator_norm_matfree(int dim, Apply&& a, ApplyAdj&& at,
                                    double tol = 1e-9, int maxit = 3000) {
  if (dim == 0) return 0.0;
  Vec v = Vec::Ones(dim);
  for (int j = 0; j < dim; ++j) v[j] += cplx(0.0, 1.0 / (j + 2.0));
  v.normalize();
  double s2 = 0.0, prev = -1.0;
  for (int it = 0; it < maxit; ++it) {
    Vec w = at(a(v));
    s2 = w.norm();
    if (s2 == 0.0) return 0.0;
    v = w / s2;
    if (it % 4 == 3) {
      if (std::abs(s2 - prev) <= tol * s2) break;
      prev = s2;
    }
  }
  return std::sqrt(s2);
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  bool at_floor = false;  // all residuals below the measurement floor
};

// Least squares fit of log(value) against log(param).  Values at or below
// `floor` mean the quantity vanished to working precision and no slope is
// measurable; the fit is flagged instead of inventing one.
inline SlopeFit fit_loglog_slope(const std::vector<double>& param,
                                 const std::vector<double>& value,
                                 double floor = 1e-13) {
  if (param.size() != value.size() || param.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need matching lists, size >= 2");
  SlopeFit out;
  out.at_floor = true;
  for (double v : value)
    if (v > floor) out.at_floor = false;
  if (out.at_floor) return out;
  const int m = static_cast<int>(param.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    const double x = std::log(param[i]);
    const double y = std::log(std::max(value[i], floor));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double det = m * sxx - sx * sx;
  out.slope = (m * sxy - sx * sy) / det;
  out.intercept = (sy - out.slope * sx) / m;
  double ss = 0;
  for (int i = 0; i < m; ++i) {
    const double x = std::log(param[i]);
    const double y = std::log(std::max(value[i], floor));
    const double r = y - (out.intercept + out.slope * x);
    ss += r * r;
  }
  if (m > 2) out.stderr_slope = std::sqrt(ss / (m - 2) * m / det);
  return out;
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void certify(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

}  // namespace qelab
