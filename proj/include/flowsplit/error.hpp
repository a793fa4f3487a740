#pragma once

#include <stdexcept>
#include <string>

namespace flowsplit {

enum class Errc {
  invalid_argument = 1,
  dimension_mismatch,
  out_of_range,
  singular,
  explosion,
  not_converged,
  unknown_scenario,
  parse_error,
  io_error,
  check_failed,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace flowsplit
