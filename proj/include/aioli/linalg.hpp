#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace aioli::linalg {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
bool all_finite(std::span<const double> a);

// Dense lower-triangular factor stored row-major. Entries above the
// diagonal are kept at zero and are never written by the operations below.
class LowerTriangular {
 public:
  LowerTriangular() = default;
  // scale * I.
  LowerTriangular(std::size_t d, double scale);
  // Throws InvalidInput unless `rows` is d x d, lower triangular, with a
  // strictly positive diagonal.
  static LowerTriangular from_rows(const std::vector<Vector>& rows);

  std::size_t dim() const { return d_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }
  double& at(std::size_t i, std::size_t j) { return a_[i * d_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return {a_.data() + i * d_, i + 1};
  }

  // L L^T as a dense row-major d x d matrix.
  std::vector<Vector> gram() const;
  // log det(L L^T) = 2 * sum log L_ii.
  double log_det_gram() const;

 private:
  std::size_t d_ = 0;
  std::vector<double> a_;
};

// In-place rank-one update: afterwards L L^T = (old L)(old L)^T + v v^T.
// One O(d^2) sweep of Givens-style rotations, row by row.
void cholesky_rank1_update(LowerTriangular& L, std::span<const double> v);

// Returns w with L w = rhs (forward substitution).
Vector solve_lower(const LowerTriangular& L, std::span<const double> rhs);
// Returns w with L^T w = rhs (back substitution).
Vector solve_upper_transpose(const LowerTriangular& L, std::span<const double> rhs);

// Full Cholesky factorization of a symmetric positive definite matrix.
// Throws InvalidInput if a non-positive pivot shows up.
LowerTriangular cholesky_factor(const std::vector<Vector>& a);

struct Sym2 {
  double a00 = 0.0;
  double a01 = 0.0;
  double a10 = 0.0;
  double a11 = 0.0;
};

// Economic eigendecomposition of a 2x2 PSD matrix. Column k of the
// decomposition is (u[0][k], u[1][k]) with eigenvalue sigma[k]; only the
// first `rank` columns are meaningful. rank == 0 means M is numerically zero.
struct EigenPair2 {
  int rank = 0;
  std::array<std::array<double, 2>, 2> u{};
  std::array<double, 2> sigma{};
};

inline constexpr double kDefaultRankTol = 1e-10;

// Closed form via trace and determinant. Eigenvalues at or below
// rank_tol * max(1, trace) are dropped.
EigenPair2 eig2_symmetric_psd(const Sym2& m, double rank_tol = kDefaultRankTol);

}  // namespace aioli::linalg
