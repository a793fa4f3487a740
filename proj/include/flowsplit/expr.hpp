#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowsplit/vector_field.hpp"

namespace flowsplit {

// Arithmetic over chart coordinates: + - * / ^, unary minus, numbers, the
// constants pi and e, and sin cos tan exp log sqrt tanh atan. Compiled to a
// postfix program; gradients come from forward-mode evaluation.
class Expression {
 public:
  using Constants = std::map<std::string, double, std::less<>>;

  // Named constants shadow pi and e but not variables.
  static Expression parse(std::string_view text, std::span<const std::string> variables,
                          const Constants& constants = {});

  std::size_t dim() const noexcept { return dim_; }
  const std::string& text() const noexcept { return text_; }

  double evaluate(std::span<const double> x) const;
  // Value and gradient with respect to every variable.
  double evaluate(std::span<const double> x, std::span<double> gradient) const;

  enum class OpCode : unsigned char { constant, variable, add, sub, mul, div, neg, pow, sin, cos, tan, exp, log, sqrt, tanh, atan };
  struct Op {
    OpCode code;
    double constant = 0.0;
    std::size_t variable = 0;
  };

 private:
  std::vector<Op> program_;
  std::size_t dim_ = 0;
  std::size_t depth_ = 0;
  std::string text_;
};

// Default variable names x1..xn.
std::vector<std::string> coordinate_names(std::size_t n);

// A vector field whose components are expressions; the Jacobian is assembled
// from the forward-mode gradients.
VectorField expression_field(std::vector<Expression> components);

}  // namespace flowsplit
