#include "coxsvi/format.hpp"

#include <charconv>
#include <cmath>

namespace coxsvi {

std::string format_integer(Index v) {
  char buf[24];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_real(Real v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < Real(9.007199254740992e15))
    return format_integer(static_cast<Index>(v));
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace coxsvi
