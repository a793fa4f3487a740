#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace flowsplit {

struct Cell {
  std::size_t x = 0;  // column
  std::size_t y = 0;  // row
  friend bool operator==(const Cell&, const Cell&) = default;
};

// A pair of foliations on a masked planar lattice, each given by leaf labels.
// Cells outside the mask carry label -1.
class GridFoliation {
 public:
  GridFoliation(std::size_t width, std::size_t height, std::vector<std::uint8_t> mask, std::vector<int> h_label,
                std::vector<int> v_label, double resolution = 1.0);

  static GridFoliation from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t cells() const noexcept { return mask_.size(); }
  double resolution() const noexcept { return resolution_; }
  std::size_t index(Cell c) const noexcept { return c.y * width_ + c.x; }
  Cell cell(std::size_t index) const noexcept { return {index % width_, index / width_}; }
  bool in_mask(Cell c) const noexcept { return c.x < width_ && c.y < height_ && mask_[index(c)] != 0; }
  bool in_mask(std::size_t i) const noexcept { return mask_[i] != 0; }
  int h_label(std::size_t i) const noexcept { return h_label_[i]; }
  int v_label(std::size_t i) const noexcept { return v_label_[i]; }
  std::size_t mask_count() const noexcept;
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }

  // True when the mask is a single 4-connected component.
  bool connected() const;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> mask_;
  std::vector<int> h_label_;
  std::vector<int> v_label_;
  double resolution_;
};

enum class AttainableKind { attainable, coattainable };

struct AttainableSet {
  Cell base;
  std::vector<std::uint8_t> members;
  AttainableKind kind = AttainableKind::attainable;

  std::size_t count() const noexcept;
  bool contains(const GridFoliation& f, Cell c) const noexcept { return members[f.index(c)] != 0; }
  nlohmann::json to_json(const GridFoliation& f) const;
  // Plain-text PGM: 0 outside the domain, 1 in the domain, 2 member.
  std::string to_pgm(const GridFoliation& f) const;
};

// Horizontal saturation of the vertical leaf through x.
AttainableSet attainable_set(const GridFoliation& f, Cell x);

// attainable_set(f, x) intersected with the vertical saturation of the
// horizontal leaf through x.
AttainableSet coattainable_set(const GridFoliation& f, Cell x);

struct AttainabilityReport {
  std::size_t attainable = 0;
  std::size_t coattainable = 0;
  std::size_t domain = 0;
  bool antecedent = false;  // A(x) == C(x)
  bool consequent = false;  // A(x) == whole domain
  bool implication_holds() const noexcept { return !antecedent || consequent; }
  std::string note;
};

AttainabilityReport check_attainability_prop(const GridFoliation& f, Cell x);

}  // namespace flowsplit
