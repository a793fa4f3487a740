#include "flowsplit/matrix.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace flowsplit {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::out_of_range: return "out_of_range";
    case Errc::singular: return "singular";
    case Errc::explosion: return "explosion";
    case Errc::not_converged: return "not_converged";
    case Errc::unknown_scenario: return "unknown_scenario";
    case Errc::parse_error: return "parse_error";
    case Errc::io_error: return "io_error";
    case Errc::check_failed: return "check_failed";
  }
  return "unknown";
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(Errc::dimension_mismatch, "max_abs_diff: shapes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i) d = std::max(d, std::abs(a.entries()[i] - b.entries()[i]));
  return d;
}

IndexSelection::IndexSelection(std::vector<std::size_t> indices, std::size_t bound)
    : indices_(std::move(indices)), bound_(bound) {
  if (indices_.size() > bound_) throw Error(Errc::out_of_range, "selection longer than its bound");
  for (std::size_t p = 0; p < indices_.size(); ++p) {
    if (indices_[p] < 1 || indices_[p] > bound_) {
      throw Error(Errc::out_of_range, "selection index " + std::to_string(indices_[p]) + " outside [1, " +
                                          std::to_string(bound_) + "]");
    }
    if (p > 0 && indices_[p] <= indices_[p - 1]) {
      throw Error(Errc::invalid_argument, "selection indices must be strictly increasing");
    }
  }
}

IndexSelection IndexSelection::full(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i + 1;
  return IndexSelection(std::move(idx), n);
}

IndexSelection IndexSelection::trailing(std::size_t n, std::size_t k) {
  if (k > n) throw Error(Errc::out_of_range, "trailing selection larger than dimension");
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = n - k + 1 + i;
  return IndexSelection(std::move(idx), n);
}

IndexSelection IndexSelection::without(std::size_t p) const {
  if (p < 1 || p > indices_.size()) throw Error(Errc::out_of_range, "position outside selection");
  std::vector<std::size_t> idx;
  idx.reserve(indices_.size() - 1);
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (i + 1 != p) idx.push_back(indices_[i]);
  }
  return IndexSelection(std::move(idx), bound_);
}

std::string IndexSelection::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < indices_.size(); ++i) os << (i ? "," : "") << indices_[i];
  return os.str();
}

std::vector<IndexSelection> combinations(std::size_t bound, std::size_t k) {
  std::vector<IndexSelection> out;
  if (k > bound) return out;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i + 1;
  while (true) {
    out.emplace_back(idx, bound);
    // advance to the next increasing tuple
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == bound - k + i) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

std::size_t binomial(std::size_t n, std::size_t k) noexcept {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    const std::size_t num = n - k + i;
    if (r > std::numeric_limits<std::size_t>::max() / num) return std::numeric_limits<std::size_t>::max();
    r = r * num / i;
  }
  return r;
}

}  // namespace flowsplit
