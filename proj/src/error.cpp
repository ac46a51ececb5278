#include "agr/error.hpp"

namespace agr {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::resource: return "resource";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::numerical_breakdown: return "numerical_breakdown";
    case ErrorKind::no_surface: return "no_surface";
  }
  return "unknown";
}

}  // namespace agr
