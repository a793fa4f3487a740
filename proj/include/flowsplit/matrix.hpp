#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "flowsplit/error.hpp"

namespace flowsplit {

using Vector = std::vector<double>;

// Row-major dense matrix. Element access is 0-based; index selections used by
// the minor routines are 1-based.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;

  BasicMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T{}) {}

  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(Errc::dimension_mismatch, "matrix entries length " + std::to_string(data_.size()) +
                                                " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    if constexpr (std::is_floating_point_v<T>) {
      for (T v : data_) {
        if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "matrix entries must be finite");
      }
    }
  }

  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw Error(Errc::dimension_mismatch, "ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  // Skips the finiteness check; for intermediate states of an integration
  // that reports non-finite values itself.
  static BasicMatrix unchecked(std::size_t rows, std::size_t cols, std::vector<T> entries) {
    if (entries.size() != rows * cols) throw Error(Errc::dimension_mismatch, "matrix entries length mismatch");
    BasicMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_ = std::move(entries);
    return m;
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<const T> entries() const noexcept { return data_; }
  std::span<T> entries() noexcept { return data_; }

  bool all_finite() const noexcept {
    if constexpr (std::is_floating_point_v<T>) {
      for (T v : data_) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }

  BasicMatrix transpose() const {
    BasicMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using IntMatrix = BasicMatrix<std::int64_t>;

template <typename T>
BasicMatrix<T> operator*(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) throw Error(Errc::dimension_mismatch, "matrix product: inner dimensions differ");
  BasicMatrix<T> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const T ail = a(i, l);
      if (ail == T{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += ail * b(l, j);
    }
  }
  return c;
}

inline Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(Errc::dimension_mismatch, "matrix-vector product: size mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

// Largest absolute entrywise difference.
double max_abs_diff(const Matrix& a, const Matrix& b);

// Strictly increasing 1-based positions drawn from {1, ..., bound}.
class IndexSelection {
 public:
  IndexSelection() = default;
  IndexSelection(std::vector<std::size_t> indices, std::size_t bound);

  static IndexSelection full(std::size_t n);
  // {n-k+1, ..., n}
  static IndexSelection trailing(std::size_t n, std::size_t k);

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::size_t bound() const noexcept { return bound_; }
  std::size_t operator[](std::size_t p) const noexcept { return indices_[p]; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  auto begin() const noexcept { return indices_.begin(); }
  auto end() const noexcept { return indices_.end(); }

  // Copy with the p-th entry (1-based) removed.
  IndexSelection without(std::size_t p) const;

  std::string to_string() const;

  friend bool operator==(const IndexSelection&, const IndexSelection&) = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t bound_ = 0;
};

// All strictly increasing k-subsets of {1..bound} in lexicographic order.
std::vector<IndexSelection> combinations(std::size_t bound, std::size_t k);

// Binomial coefficient, saturating at SIZE_MAX.
std::size_t binomial(std::size_t n, std::size_t k) noexcept;

}  // namespace flowsplit
