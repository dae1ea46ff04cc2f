#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "aioli/linalg.hpp"
#include "aioli/rng.hpp"

namespace testing_support {

using aioli::linalg::LowerTriangular;
using aioli::linalg::Vector;

inline Eigen::MatrixXd to_eigen(const std::vector<Vector>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

inline Eigen::MatrixXd to_eigen(const LowerTriangular& L) {
  const auto n = static_cast<Eigen::Index>(L.dim());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = L(i, j);
  }
  return m;
}

inline Eigen::VectorXd to_eigen(const Vector& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Vector random_vector(aioli::CounterRng& rng, std::size_t d, double scale = 1.0) {
  Vector v(d);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

// Well-conditioned random lower-triangular factor.
inline LowerTriangular random_lower(aioli::CounterRng& rng, std::size_t d) {
  std::vector<Vector> rows(d, Vector(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < i; ++j) rows[i][j] = 0.5 * rng.normal();
    rows[i][i] = 1.0 + rng.uniform();
  }
  return LowerTriangular::from_rows(rows);
}

}  // namespace testing_support
