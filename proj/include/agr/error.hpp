#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agr {

enum class ErrorKind {
  domain,               // evaluation at a kernel singularity
  precondition,         // caller violated an operation's contract
  resource,             // memory budget exceeded
  parse,                // malformed input file
  io,                   // filesystem failure
  numerical_breakdown,  // NaN/Inf during an iterative solve
  no_surface,           // marching cubes found no crossing cell
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::precondition, message);
}

}  // namespace agr
