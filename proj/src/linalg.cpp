#include "aioli/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aioli/error.hpp"

namespace aioli::linalg {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : a) s += (v / scale) * (v / scale);
  return scale * std::sqrt(s);
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

LowerTriangular::LowerTriangular(std::size_t d, double scale) : d_(d), a_(d * d, 0.0) {
  if (d == 0) throw InvalidInput("LowerTriangular: dimension must be positive");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidInput("LowerTriangular: diagonal must be positive and finite");
  }
  for (std::size_t i = 0; i < d; ++i) a_[i * d + i] = scale;
}

LowerTriangular LowerTriangular::from_rows(const std::vector<Vector>& rows) {
  const std::size_t d = rows.size();
  LowerTriangular L(d, 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (rows[i].size() != d) throw InvalidInput("LowerTriangular: matrix is not square");
    for (std::size_t j = 0; j < d; ++j) {
      const double v = rows[i][j];
      if (!std::isfinite(v)) throw InvalidInput("LowerTriangular: non-finite entry");
      if (j > i && v != 0.0) throw InvalidInput("LowerTriangular: non-zero entry above diagonal");
      if (j == i && !(v > 0.0)) throw InvalidInput("LowerTriangular: non-positive diagonal");
      L.a_[i * d + j] = v;
    }
  }
  return L;
}

std::vector<Vector> LowerTriangular::gram() const {
  std::vector<Vector> g(d_, Vector(d_, 0.0));
  for (std::size_t i = 0; i < d_; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += a_[i * d_ + k] * a_[j * d_ + k];
      g[i][j] = s;
      g[j][i] = s;
    }
  }
  return g;
}

double LowerTriangular::log_det_gram() const {
  double s = 0.0;
  for (std::size_t i = 0; i < d_; ++i) s += std::log(a_[i * d_ + i]);
  return 2.0 * s;
}

void cholesky_rank1_update(LowerTriangular& L, std::span<const double> v) {
  const std::size_t d = L.dim();
  if (v.size() != d) throw InvalidInput("cholesky_rank1_update: dimension mismatch");
  if (!all_finite(v)) throw InvalidInput("cholesky_rank1_update: non-finite update vector");

  // Rotation k is fixed once row k is processed; rows below reuse it.
  std::vector<double> cos_k(d), sin_k(d);
  for (std::size_t i = 0; i < d; ++i) {
    double w = v[i];
    for (std::size_t k = 0; k < i; ++k) {
      double& lik = L.at(i, k);
      lik = (lik + sin_k[k] * w) / cos_k[k];
      w = cos_k[k] * w - sin_k[k] * lik;
    }
    double& lii = L.at(i, i);
    const double r = std::hypot(lii, w);
    cos_k[i] = r / lii;
    sin_k[i] = w / lii;
    lii = r;
  }
}

Vector solve_lower(const LowerTriangular& L, std::span<const double> rhs) {
  const std::size_t d = L.dim();
  if (rhs.size() != d) throw InvalidInput("solve_lower: dimension mismatch");
  if (!all_finite(rhs)) throw InvalidInput("solve_lower: non-finite right-hand side");
  Vector w(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto row = L.row(i);
    double s = rhs[i];
    for (std::size_t j = 0; j < i; ++j) s -= row[j] * w[j];
    w[i] = s / row[i];
  }
  return w;
}

Vector solve_upper_transpose(const LowerTriangular& L, std::span<const double> rhs) {
  const std::size_t d = L.dim();
  if (rhs.size() != d) throw InvalidInput("solve_upper_transpose: dimension mismatch");
  if (!all_finite(rhs)) throw InvalidInput("solve_upper_transpose: non-finite right-hand side");
  // Column-oriented back substitution so that L is only read by rows.
  Vector r(rhs.begin(), rhs.end());
  Vector w(d);
  for (std::size_t i = d; i-- > 0;) {
    const auto row = L.row(i);
    w[i] = r[i] / row[i];
    for (std::size_t j = 0; j < i; ++j) r[j] -= row[j] * w[i];
  }
  return w;
}

LowerTriangular cholesky_factor(const std::vector<Vector>& a) {
  const std::size_t d = a.size();
  LowerTriangular L(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    if (a[j].size() != d) throw InvalidInput("cholesky_factor: matrix is not square");
    double diag = a[j][j];
    for (std::size_t k = 0; k < j; ++k) diag -= L(j, k) * L(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw InvalidInput("cholesky_factor: matrix is not positive definite");
    }
    L.at(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < d; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L.at(i, j) = s / L(j, j);
    }
  }
  return L;
}

EigenPair2 eig2_symmetric_psd(const Sym2& m, double rank_tol) {
  const double vals[] = {m.a00, m.a01, m.a10, m.a11};
  if (!all_finite(vals)) throw InvalidInput("eig2_symmetric_psd: non-finite entry");
  const double scale = std::max({1.0, std::abs(m.a00), std::abs(m.a11)});
  if (std::abs(m.a01 - m.a10) > 1e-12 * scale) {
    throw InvalidInput("eig2_symmetric_psd: matrix is not symmetric");
  }
  const double a = m.a00;
  const double c = 0.5 * (m.a01 + m.a10);
  const double b = m.a11;
  const double trace = a + b;

  const double half_gap = std::hypot(0.5 * (a - b), c);
  const double big = 0.5 * trace + half_gap;
  // det / big avoids the cancellation in trace/2 - half_gap.
  const double small = big > 0.0 ? (a * b - c * c) / big : 0.5 * trace - half_gap;

  const double neg_tol = 1e-12 * std::max(1.0, std::abs(trace));
  if (small < -neg_tol || big < -neg_tol) {
    throw InvalidInput("eig2_symmetric_psd: matrix has a negative eigenvalue");
  }

  // Leading eigenvector: pick the better conditioned of the two null-space
  // candidates of (M - big I).
  std::array<double, 2> e0;
  const double c1x = c, c1y = big - a;
  const double c2x = big - b, c2y = c;
  if (std::hypot(c1x, c1y) >= std::hypot(c2x, c2y)) {
    e0 = {c1x, c1y};
  } else {
    e0 = {c2x, c2y};
  }
  double len = std::hypot(e0[0], e0[1]);
  if (len == 0.0) {
    // Multiple of the identity.
    e0 = {1.0, 0.0};
    len = 1.0;
  }
  e0 = {e0[0] / len, e0[1] / len};

  EigenPair2 out;
  out.u = {{{e0[0], -e0[1]}, {e0[1], e0[0]}}};
  out.sigma = {big, small};

  const double drop = rank_tol * std::max(1.0, trace);
  out.rank = (big > drop ? 1 : 0) + (small > drop ? 1 : 0);
  if (out.rank < 2) out.sigma[1] = 0.0;
  if (out.rank < 1) out.sigma[0] = 0.0;
  return out;
}

}  // namespace aioli::linalg
