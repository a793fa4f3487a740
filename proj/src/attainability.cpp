#include "flowsplit/attainability.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "flowsplit/error.hpp"

namespace flowsplit {

GridFoliation::GridFoliation(std::size_t width, std::size_t height, std::vector<std::uint8_t> mask,
                             std::vector<int> h_label, std::vector<int> v_label, double resolution)
    : width_(width),
      height_(height),
      mask_(std::move(mask)),
      h_label_(std::move(h_label)),
      v_label_(std::move(v_label)),
      resolution_(resolution) {
  const std::size_t n = width_ * height_;
  if (n == 0) throw Error(Errc::invalid_argument, "grid foliation needs a nonempty lattice");
  if (mask_.size() != n || h_label_.size() != n || v_label_.size() != n) {
    throw Error(Errc::dimension_mismatch, "mask and labels must have width*height entries");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (mask_[i] > 1) throw Error(Errc::invalid_argument, "mask entries must be 0 or 1");
    if (mask_[i] && (h_label_[i] < 0 || v_label_[i] < 0)) {
      throw Error(Errc::invalid_argument, "every masked cell needs both leaf labels");
    }
    if (!mask_[i]) h_label_[i] = v_label_[i] = -1;
  }
  if (mask_count() == 0) throw Error(Errc::invalid_argument, "grid foliation mask is empty");
}

std::size_t GridFoliation::mask_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

bool GridFoliation::connected() const {
  const auto start = std::find(mask_.begin(), mask_.end(), std::uint8_t{1});
  if (start == mask_.end()) return false;
  std::vector<std::uint8_t> seen(mask_.size(), 0);
  std::vector<std::size_t> stack{static_cast<std::size_t>(start - mask_.begin())};
  seen[stack.back()] = 1;
  std::size_t reached = 0;
  while (!stack.empty()) {
    const Cell c = cell(stack.back());
    stack.pop_back();
    ++reached;
    const Cell nbrs[4] = {{c.x - 1, c.y}, {c.x + 1, c.y}, {c.x, c.y - 1}, {c.x, c.y + 1}};
    for (const Cell& nb : nbrs) {
      // unsigned wrap puts x-1 / y-1 out of range
      if (!in_mask(nb) || seen[index(nb)]) continue;
      seen[index(nb)] = 1;
      stack.push_back(index(nb));
    }
  }
  return reached == mask_count();
}

GridFoliation GridFoliation::from_json(const nlohmann::json& j) {
  try {
    const auto w = j.at("width").get<std::size_t>();
    const auto h = j.at("height").get<std::size_t>();
    auto mask = j.at("mask").get<std::vector<std::uint8_t>>();
    auto hl = j.at("h_label").get<std::vector<int>>();
    auto vl = j.at("v_label").get<std::vector<int>>();
    const double res = j.value("resolution", 1.0);
    return GridFoliation(w, h, std::move(mask), std::move(hl), std::move(vl), res);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("grid foliation JSON: ") + e.what());
  }
}

nlohmann::json GridFoliation::to_json() const {
  return {{"width", width_}, {"height", height_}, {"resolution", resolution_},
          {"mask", mask_},   {"h_label", h_label_}, {"v_label", v_label_}};
}

std::size_t AttainableSet::count() const noexcept {
  return static_cast<std::size_t>(std::count(members.begin(), members.end(), std::uint8_t{1}));
}

nlohmann::json AttainableSet::to_json(const GridFoliation& f) const {
  return {{"kind", kind == AttainableKind::attainable ? "attainable" : "coattainable"},
          {"base", {base.x, base.y}},
          {"width", f.width()},
          {"height", f.height()},
          {"count", count()},
          {"members", members}};
}

std::string AttainableSet::to_pgm(const GridFoliation& f) const {
  std::ostringstream os;
  os << "P2\n" << f.width() << ' ' << f.height() << "\n2\n";
  // top row first, so y grows upwards as in the chart
  for (std::size_t y = f.height(); y-- > 0;) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      const std::size_t i = f.index({x, y});
      os << (x ? " " : "") << (members[i] ? 2 : (f.in_mask(i) ? 1 : 0));
    }
    os << '\n';
  }
  return os.str();
}

namespace {

void require_cell(const GridFoliation& f, Cell x) {
  if (!f.in_mask(x)) {
    throw Error(Errc::out_of_range, "cell (" + std::to_string(x.x) + "," + std::to_string(x.y) + ") is outside the mask");
  }
}

// Cells whose `to` label is shared with some cell carrying from-label `seed`.
std::vector<std::uint8_t> saturate(const GridFoliation& f, int seed, bool seed_is_vertical) {
  std::unordered_set<int> reached;
  for (std::size_t i = 0; i < f.cells(); ++i) {
    if (!f.in_mask(i)) continue;
    const int from = seed_is_vertical ? f.v_label(i) : f.h_label(i);
    if (from == seed) reached.insert(seed_is_vertical ? f.h_label(i) : f.v_label(i));
  }
  std::vector<std::uint8_t> members(f.cells(), 0);
  for (std::size_t i = 0; i < f.cells(); ++i) {
    if (!f.in_mask(i)) continue;
    const int to = seed_is_vertical ? f.h_label(i) : f.v_label(i);
    if (reached.contains(to)) members[i] = 1;
  }
  return members;
}

}  // namespace

AttainableSet attainable_set(const GridFoliation& f, Cell x) {
  require_cell(f, x);
  return {x, saturate(f, f.v_label(f.index(x)), true), AttainableKind::attainable};
}

AttainableSet coattainable_set(const GridFoliation& f, Cell x) {
  AttainableSet a = attainable_set(f, x);
  const auto vh = saturate(f, f.h_label(f.index(x)), false);
  for (std::size_t i = 0; i < a.members.size(); ++i) a.members[i] = a.members[i] && vh[i];
  a.kind = AttainableKind::coattainable;
  return a;
}

AttainabilityReport check_attainability_prop(const GridFoliation& f, Cell x) {
  require_cell(f, x);
  if (!f.connected()) throw Error(Errc::invalid_argument, "attainability check needs a connected mask");
  const AttainableSet a = attainable_set(f, x);
  const AttainableSet c = coattainable_set(f, x);
  AttainabilityReport rep;
  rep.attainable = a.count();
  rep.coattainable = c.count();
  rep.domain = f.mask_count();
  rep.antecedent = a.members == c.members;
  rep.consequent = rep.attainable == rep.domain;
  rep.note = "discrete certificate on a finite connected mask";
  return rep;
}

}  // namespace flowsplit
