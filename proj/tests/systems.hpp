#pragma once
// Small helpers for building systems from expression strings in tests.

#include <string>
#include <vector>

#include "flowsplit/expr.hpp"
#include "flowsplit/vector_field.hpp"

namespace testing_support {

inline flowsplit::VectorField field_of(const std::vector<std::string>& comps) {
  const auto names = flowsplit::coordinate_names(comps.size());
  std::vector<flowsplit::Expression> e;
  for (const auto& c : comps) e.push_back(flowsplit::Expression::parse(c, names));
  return flowsplit::expression_field(std::move(e));
}

inline flowsplit::VectorFieldSystem system_of(const std::vector<std::vector<std::string>>& fields,
                                              const std::vector<flowsplit::Vector>& samples = {}) {
  std::vector<flowsplit::VectorField> f;
  for (const auto& c : fields) f.push_back(field_of(c));
  return flowsplit::VectorFieldSystem(fields.front().size(), std::move(f), samples);
}

}  // namespace testing_support
