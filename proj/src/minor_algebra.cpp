#include "flowsplit/minor_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowsplit {

namespace {

double lu_determinant(Matrix a) {
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    double best = std::abs(a(c, c));
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a(r, c)) > best) {
        best = std::abs(a(r, c));
        pivot = r;
      }
    }
    if (best == 0.0) return 0.0;
    if (pivot != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(pivot, j));
      det = -det;
    }
    const double d = a(c, c);
    det *= d;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / d;
      if (f == 0.0) continue;
      for (std::size_t j = c + 1; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return det;
}

}  // namespace

double determinant(const Matrix& m) {
  if (!m.square()) throw Error(Errc::dimension_mismatch, "determinant of a non-square matrix");
  switch (m.rows()) {
    case 0: return 1.0;
    case 1: return m(0, 0);
    case 2: return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    case 3:
      return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
             m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    default: return lu_determinant(m);
  }
}

std::int64_t determinant(const IntMatrix& m) {
  if (!m.square()) throw Error(Errc::dimension_mismatch, "determinant of a non-square matrix");
  const std::size_t n = m.rows();
  if (n == 0) return 1;
  __extension__ typedef __int128 Wide;
  std::vector<Wide> a(m.entries().begin(), m.entries().end());
  auto at = [&](std::size_t r, std::size_t c) -> Wide& { return a[r * n + c]; };
  Wide prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (at(k, k) == 0) {
      std::size_t r = k + 1;
      while (r < n && at(r, k) == 0) ++r;
      if (r == n) return 0;
      for (std::size_t j = 0; j < n; ++j) std::swap(at(k, j), at(r, j));
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        // exact division by the previous pivot (Sylvester identity)
        at(i, j) = (at(i, j) * at(k, k) - at(i, k) * at(k, j)) / prev;
      }
    }
    prev = at(k, k);
  }
  const Wide det = sign * at(n - 1, n - 1);
  if (det > std::numeric_limits<std::int64_t>::max() || det < std::numeric_limits<std::int64_t>::min()) {
    throw Error(Errc::out_of_range, "integer determinant overflows int64");
  }
  return static_cast<std::int64_t>(det);
}

Matrix row_replace(const Matrix& base, const Matrix& source, std::size_t row) {
  if (!base.square() || !source.square() || base.rows() != source.rows()) {
    throw Error(Errc::dimension_mismatch, "row_replace: base and source must be square of equal size");
  }
  if (row < 1 || row > base.rows()) throw Error(Errc::out_of_range, "row_replace: row outside [1, n]");
  Matrix out = base;
  std::ranges::copy(source.row(row - 1), out.row(row - 1).begin());
  return out;
}

double laplace_partial(const Matrix& m, const IndexSelection& rows, const IndexSelection& cols, std::size_t p,
                       std::size_t q) {
  const std::size_t k = rows.size();
  if (cols.size() != k) throw Error(Errc::dimension_mismatch, "laplace_partial: selections differ in length");
  if (k == 0 || p < 1 || p > k || q < 1 || q > k) throw Error(Errc::out_of_range, "laplace_partial: p or q outside [1, k]");
  const double sign = ((p + q) % 2 == 0) ? 1.0 : -1.0;
  return sign * minor_det(m, rows.without(p), cols.without(q));
}

bool is_block_diagonal(const Matrix& m, std::size_t k, double tol) {
  if (!m.square() || k > m.rows()) return false;
  const std::size_t h = m.rows() - k;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const bool off_block = (i < h) != (j < h);
      if (off_block && std::abs(m(i, j)) > tol) return false;
    }
  }
  return true;
}

Matrix inverse(const Matrix& m) {
  if (!m.square()) throw Error(Errc::dimension_mismatch, "inverse of a non-square matrix");
  const std::size_t n = m.rows();
  Matrix a = m;
  Matrix inv = Matrix::identity(n);
  double scale = 0.0;
  for (double v : m.entries()) scale = std::max(scale, std::abs(v));
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a(r, c)) > std::abs(a(pivot, c))) pivot = r;
    }
    if (std::abs(a(pivot, c)) <= 1e-14 * scale || a(pivot, c) == 0.0) throw Error(Errc::singular, "matrix is singular");
    if (pivot != c) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(c, j), a(pivot, j));
        std::swap(inv(c, j), inv(pivot, j));
      }
    }
    const double d = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

Vector solve(const Matrix& a, std::span<const double> b) {
  if (!a.square() || a.rows() != b.size()) throw Error(Errc::dimension_mismatch, "solve: shape mismatch");
  const std::size_t n = a.rows();
  Matrix m = a;
  Vector x(b.begin(), b.end());
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(m(r, c)) > std::abs(m(pivot, c))) pivot = r;
    }
    if (m(pivot, c) == 0.0) throw Error(Errc::singular, "solve: singular matrix");
    if (pivot != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(c, j), m(pivot, j));
      std::swap(x[c], x[pivot]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m(r, c) / m(c, c);
      if (f == 0.0) continue;
      for (std::size_t j = c; j < n; ++j) m(r, j) -= f * m(c, j);
      x[r] -= f * x[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    double s = x[c];
    for (std::size_t j = c + 1; j < n; ++j) s -= m(c, j) * x[j];
    x[c] = s / m(c, c);
  }
  return x;
}

std::pair<double, double> block_conjugation_subdet(const Matrix& a, const Matrix& y, const Matrix& b, std::size_t k) {
  const std::size_t n = y.rows();
  if (!y.square() || a.rows() != n || b.rows() != n || !a.square() || !b.square()) {
    throw Error(Errc::dimension_mismatch, "block_conjugation_subdet: A, Y, B must be n x n");
  }
  if (k < 1 || k > n) throw Error(Errc::out_of_range, "block_conjugation_subdet: k outside [1, n]");
  if (!is_block_diagonal(a, k)) throw Error(Errc::invalid_argument, "A is not block diagonal for the split");
  if (!is_block_diagonal(b, k)) throw Error(Errc::invalid_argument, "B is not block diagonal for the split");
  const Matrix b_inv = inverse(b);
  const IndexSelection lower = IndexSelection::trailing(n, k);
  const double lhs = minor_det(a * y * b_inv, lower, lower);
  const double rhs = minor_det(y, lower, lower) * minor_det(a * b_inv, lower, lower);
  return {lhs, rhs};
}

int permutation_parity(std::span<const std::size_t> sequence) {
  std::vector<std::size_t> seq(sequence.begin(), sequence.end());
  std::vector<std::size_t> sorted = seq;
  std::ranges::sort(sorted);
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(Errc::invalid_argument, "permutation_parity: repeated entries");
  }
  // count cycles over positions
  std::vector<std::size_t> target(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    target[i] = static_cast<std::size_t>(std::ranges::lower_bound(sorted, seq[i]) - sorted.begin());
  }
  std::vector<bool> seen(seq.size(), false);
  std::size_t transpositions = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = target[j]) {
      seen[j] = true;
      ++len;
    }
    transpositions += len - 1;
  }
  return transpositions % 2 == 0 ? 1 : -1;
}

}  // namespace flowsplit
