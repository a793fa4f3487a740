#include "flowsplit/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <numbers>

namespace flowsplit {

namespace {

using Op = Expression::Op;
using OpCode = Expression::OpCode;

class Parser {
 public:
  Parser(std::string_view text, std::span<const std::string> vars, const Expression::Constants& constants)
      : text_(text), vars_(vars), constants_(constants) {}

  std::vector<Op> run() {
    expression();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::parse_error, "expression \"" + std::string(text_) + "\" at offset " + std::to_string(pos_) + ": " + msg);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expression() {
    term();
    while (true) {
      if (accept('+')) {
        term();
        out_.push_back({OpCode::add});
      } else if (accept('-')) {
        term();
        out_.push_back({OpCode::sub});
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    while (true) {
      if (accept('*')) {
        unary();
        out_.push_back({OpCode::mul});
      } else if (accept('/')) {
        unary();
        out_.push_back({OpCode::div});
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept('-')) {
      unary();
      out_.push_back({OpCode::neg});
    } else if (accept('+')) {
      unary();
    } else {
      power();
    }
  }

  void power() {
    primary();
    if (accept('^')) {
      unary();  // right associative, binds tighter than unary minus on the left
      out_.push_back({OpCode::pow});
    }
  }

  void primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (accept('(')) {
      expression();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
      const std::string_view name = text_.substr(start, pos_ - start);
      if (accept('(')) {
        const OpCode fn = function(name);
        expression();
        if (!accept(')')) fail("expected ')' after function argument");
        out_.push_back({fn});
        return;
      }
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          out_.push_back({OpCode::variable, 0.0, i});
          return;
        }
      }
      if (auto it = constants_.find(name); it != constants_.end()) {
        out_.push_back({OpCode::constant, it->second});
        return;
      }
      if (name == "pi") {
        out_.push_back({OpCode::constant, std::numbers::pi});
        return;
      }
      if (name == "e") {
        out_.push_back({OpCode::constant, std::numbers::e});
        return;
      }
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  OpCode function(std::string_view name) {
    if (name == "sin") return OpCode::sin;
    if (name == "cos") return OpCode::cos;
    if (name == "tan") return OpCode::tan;
    if (name == "exp") return OpCode::exp;
    if (name == "log") return OpCode::log;
    if (name == "sqrt") return OpCode::sqrt;
    if (name == "tanh") return OpCode::tanh;
    if (name == "atan") return OpCode::atan;
    fail("unknown function '" + std::string(name) + "'");
  }

  void number() {
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{}) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    out_.push_back({OpCode::constant, v});
  }

  std::string_view text_;
  std::span<const std::string> vars_;
  const Expression::Constants& constants_;
  std::size_t pos_ = 0;
  std::vector<Op> out_;
};

std::size_t stack_depth(const std::vector<Op>& program) {
  std::size_t depth = 0, best = 0;
  for (const Op& op : program) {
    switch (op.code) {
      case OpCode::constant:
      case OpCode::variable: ++depth; break;
      case OpCode::add:
      case OpCode::sub:
      case OpCode::mul:
      case OpCode::div:
      case OpCode::pow: --depth; break;
      default: break;
    }
    best = std::max(best, depth);
  }
  return best;
}

}  // namespace

Expression Expression::parse(std::string_view text, std::span<const std::string> variables,
                             const Constants& constants) {
  Expression e;
  e.text_ = std::string(text);
  e.dim_ = variables.size();
  e.program_ = Parser(text, variables, constants).run();
  e.depth_ = stack_depth(e.program_);
  return e;
}

double Expression::evaluate(std::span<const double> x) const {
  if (x.size() != dim_) throw Error(Errc::dimension_mismatch, "expression evaluated at wrong dimension");
  thread_local std::vector<double> val;
  val.resize(depth_);
  std::size_t top = 0;
  for (const Op& op : program_) {
    switch (op.code) {
      case OpCode::constant: val[top++] = op.constant; break;
      case OpCode::variable: val[top++] = x[op.variable]; break;
      case OpCode::add: --top; val[top - 1] += val[top]; break;
      case OpCode::sub: --top; val[top - 1] -= val[top]; break;
      case OpCode::mul: --top; val[top - 1] *= val[top]; break;
      case OpCode::div: --top; val[top - 1] /= val[top]; break;
      case OpCode::pow: --top; val[top - 1] = std::pow(val[top - 1], val[top]); break;
      case OpCode::neg: val[top - 1] = -val[top - 1]; break;
      case OpCode::sin: val[top - 1] = std::sin(val[top - 1]); break;
      case OpCode::cos: val[top - 1] = std::cos(val[top - 1]); break;
      case OpCode::tan: val[top - 1] = std::tan(val[top - 1]); break;
      case OpCode::exp: val[top - 1] = std::exp(val[top - 1]); break;
      case OpCode::log: val[top - 1] = std::log(val[top - 1]); break;
      case OpCode::sqrt: val[top - 1] = std::sqrt(val[top - 1]); break;
      case OpCode::tanh: val[top - 1] = std::tanh(val[top - 1]); break;
      case OpCode::atan: val[top - 1] = std::atan(val[top - 1]); break;
    }
  }
  return val[0];
}

double Expression::evaluate(std::span<const double> x, std::span<double> gradient) const {
  if (x.size() != dim_ || gradient.size() != dim_) throw Error(Errc::dimension_mismatch, "expression evaluated at wrong dimension");
  const std::size_t n = dim_;
  thread_local std::vector<double> val, grad;
  val.resize(depth_);
  grad.resize(depth_ * n);
  std::size_t top = 0;  // number of live slots
  auto g = [&](std::size_t slot) { return grad.data() + slot * n; };
  for (const Op& op : program_) {
    switch (op.code) {
      case OpCode::constant:
        val[top] = op.constant;
        std::fill_n(g(top), n, 0.0);
        ++top;
        break;
      case OpCode::variable:
        val[top] = x[op.variable];
        std::fill_n(g(top), n, 0.0);
        g(top)[op.variable] = 1.0;
        ++top;
        break;
      case OpCode::add:
      case OpCode::sub:
      case OpCode::mul:
      case OpCode::div:
      case OpCode::pow: {
        const std::size_t a = top - 2, b = top - 1;
        const double va = val[a], vb = val[b];
        double* ga = g(a);
        const double* gb = g(b);
        switch (op.code) {
          case OpCode::add:
            val[a] = va + vb;
            for (std::size_t i = 0; i < n; ++i) ga[i] += gb[i];
            break;
          case OpCode::sub:
            val[a] = va - vb;
            for (std::size_t i = 0; i < n; ++i) ga[i] -= gb[i];
            break;
          case OpCode::mul:
            val[a] = va * vb;
            for (std::size_t i = 0; i < n; ++i) ga[i] = ga[i] * vb + va * gb[i];
            break;
          case OpCode::div:
            val[a] = va / vb;
            for (std::size_t i = 0; i < n; ++i) ga[i] = (ga[i] * vb - va * gb[i]) / (vb * vb);
            break;
          default: {
            const double v = std::pow(va, vb);
            bool const_exponent = true;
            for (std::size_t i = 0; i < n; ++i) const_exponent = const_exponent && gb[i] == 0.0;
            if (const_exponent) {
              const double d = vb == 0.0 ? 0.0 : vb * std::pow(va, vb - 1.0);
              for (std::size_t i = 0; i < n; ++i) ga[i] *= d;
            } else {
              const double la = std::log(va);
              for (std::size_t i = 0; i < n; ++i) ga[i] = v * (gb[i] * la + vb * ga[i] / va);
            }
            val[a] = v;
          }
        }
        --top;
        break;
      }
      default: {
        const std::size_t a = top - 1;
        const double v = val[a];
        double d = 0.0;
        switch (op.code) {
          case OpCode::neg: val[a] = -v; d = -1.0; break;
          case OpCode::sin: val[a] = std::sin(v); d = std::cos(v); break;
          case OpCode::cos: val[a] = std::cos(v); d = -std::sin(v); break;
          case OpCode::tan: {
            const double c = std::cos(v);
            val[a] = std::tan(v);
            d = 1.0 / (c * c);
            break;
          }
          case OpCode::exp: val[a] = std::exp(v); d = val[a]; break;
          case OpCode::log: val[a] = std::log(v); d = 1.0 / v; break;
          case OpCode::sqrt: val[a] = std::sqrt(v); d = 0.5 / val[a]; break;
          case OpCode::tanh: val[a] = std::tanh(v); d = 1.0 - val[a] * val[a]; break;
          case OpCode::atan: val[a] = std::atan(v); d = 1.0 / (1.0 + v * v); break;
          default: break;
        }
        double* ga = g(a);
        for (std::size_t i = 0; i < n; ++i) ga[i] *= d;
      }
    }
  }
  std::copy_n(g(0), n, gradient.begin());
  return val[0];
}

std::vector<std::string> coordinate_names(std::size_t n) {
  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = "x" + std::to_string(i + 1);
  return names;
}

VectorField expression_field(std::vector<Expression> components) {
  if (components.empty()) throw Error(Errc::invalid_argument, "vector field needs at least one component");
  const std::size_t n = components.front().dim();
  for (const auto& c : components) {
    if (c.dim() != n) throw Error(Errc::dimension_mismatch, "field components use different variable sets");
  }
  auto comps = std::make_shared<const std::vector<Expression>>(std::move(components));
  VectorField f;
  f.value = [comps](std::span<const double> x) {
    Vector v(comps->size());
    for (std::size_t i = 0; i < comps->size(); ++i) v[i] = (*comps)[i].evaluate(x);
    return v;
  };
  f.jacobian = [comps, n](std::span<const double> x) {
    Matrix j = Matrix::unchecked(comps->size(), n, Vector(comps->size() * n));
    for (std::size_t i = 0; i < comps->size(); ++i) (*comps)[i].evaluate(x, j.row(i));
    return j;
  };
  return f;
}

}  // namespace flowsplit
