// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "qelab/common.hpp"

namespace qelab {

// Element of su(n+1): anti-Hermitian, traceless.  Stored dense; the sizes
// here are tiny (n+1 <= 4 in practice).
struct LieElement {
  Mat a;

  explicit LieElement(Mat m) : a(std::move(m)) {
    require(a.rows() == a.cols() && a.rows() >= 2, "LieElement: need square matrix, size >= 2");
    require((a + a.adjoint()).norm() <= 1e-12 * (1.0 + a.norm()),
            "LieElement: matrix is not anti-Hermitian");
    require(std::abs(a.trace()) <= 1e-12 * (1.0 + a.norm()),
            "LieElement: matrix is not traceless");
  }

  int n() const { return static_cast<int>(a.rows()) - 1; }

  Mat exp(double t = 1.0) const { return (t * a).exp(); }
};

inline LieElement lie_bracket(const LieElement& x, const LieElement& y) {
  return LieElement(x.a * y.a - y.a * x.a);
}

inline LieElement lie_diag(const RVec& angles) {
  // diag(i * angles) with the trace removed.
  Mat m = Mat::Zero(angles.size(), angles.size());
  const double mean = angles.mean();
  for (int j = 0; j < angles.size(); ++j) m(j, j) = iu * (angles[j] - mean);
  return LieElement(std::move(m));
}

inline LieElement random_lie_element(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Mat m(n + 1, n + 1);
  for (int j = 0; j <= n; ++j)
    for (int k = 0; k <= n; ++k) m(j, k) = cplx(gauss(rng), gauss(rng));
  Mat a = 0.5 * (m - m.adjoint());
  a -= (a.trace() / (n + 1.0)) * Mat::Identity(n + 1, n + 1);
  return LieElement(std::move(a));
}

}  // namespace qelab
