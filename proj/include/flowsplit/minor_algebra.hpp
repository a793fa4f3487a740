#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flowsplit/matrix.hpp"

namespace flowsplit {

// Closed forms up to 3x3, partial-pivot elimination above.
double determinant(const Matrix& m);

// Exact fraction-free (Bareiss) elimination. Throws on int64 overflow of the
// result; intermediates are carried in 128 bits.
std::int64_t determinant(const IntMatrix& m);

template <typename T>
BasicMatrix<T> submatrix(const BasicMatrix<T>& m, const IndexSelection& rows, const IndexSelection& cols) {
  if (rows.bound() > m.rows() || cols.bound() > m.cols()) {
    throw Error(Errc::out_of_range, "selection bound exceeds matrix dimension");
  }
  BasicMatrix<T> s(rows.size(), cols.size());
  for (std::size_t p = 0; p < rows.size(); ++p)
    for (std::size_t q = 0; q < cols.size(); ++q) s(p, q) = m(rows[p] - 1, cols[q] - 1);
  return s;
}

// det of the square submatrix picked out by `rows` x `cols`. The empty
// selection has minor 1.
template <typename T>
T minor_det(const BasicMatrix<T>& m, const IndexSelection& rows, const IndexSelection& cols) {
  if (rows.size() != cols.size()) throw Error(Errc::dimension_mismatch, "minor: row and column selections differ in length");
  if (rows.empty()) return T{1};
  return determinant(submatrix(m, rows, cols));
}

// Sum over increasing l-subsets S of det(A restricted to columns S) * det(B
// restricted to rows S). Equals det(A*B).
template <typename T>
T cauchy_binet(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  const std::size_t l = a.rows();
  const std::size_t m = a.cols();
  if (b.rows() != m || b.cols() != l) throw Error(Errc::dimension_mismatch, "cauchy_binet: expects (l x m) and (m x l)");
  if (l > m) throw Error(Errc::invalid_argument, "cauchy_binet: requires l <= m");
  const IndexSelection all_l = IndexSelection::full(l);
  T sum{};
  for (const IndexSelection& s : combinations(m, l)) {
    sum += minor_det(a, all_l, s) * minor_det(b, s, all_l);
  }
  return sum;
}

struct RowReplacement {
  Matrix base;
  Matrix source;
  std::size_t row = 1;  // 1-based
};

// [base : source : row] -- base with its row-th row taken from source.
Matrix row_replace(const Matrix& base, const Matrix& source, std::size_t row);
inline Matrix row_replace(const RowReplacement& r) { return row_replace(r.base, r.source, r.row); }

// Partial derivative of minor_det(m, rows, cols) with respect to the entry
// (rows[p], cols[q]); p and q are 1-based positions within the selections.
double laplace_partial(const Matrix& m, const IndexSelection& rows, const IndexSelection& cols, std::size_t p,
                       std::size_t q);

// Both sides of the block-conjugation identity for the lower-right k-minor:
// first = minor(A Y B^-1), second = minor(Y) * minor(A B^-1). A and B must be
// block diagonal for the split (n-k, k).
std::pair<double, double> block_conjugation_subdet(const Matrix& a, const Matrix& y, const Matrix& b, std::size_t k);

inline constexpr double kBlockTolerance = 1e-12;

bool is_block_diagonal(const Matrix& m, std::size_t k, double tol = kBlockTolerance);

Matrix inverse(const Matrix& m);

// Solves a x = b by partial-pivot elimination; throws Errc::singular.
Vector solve(const Matrix& a, std::span<const double> b);

// +1 for even permutations of {1..n}, -1 for odd. The sequence must be a
// permutation of its own sorted values.
int permutation_parity(std::span<const std::size_t> sequence);

}  // namespace flowsplit
