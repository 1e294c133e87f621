#pragma once

// Locale-independent numeric formatting for CSV output. Values that are
// exactly integral print without a decimal point; everything else prints
// the shortest decimal string that round-trips to the same double, so
// parse -> serialize -> parse is bit-identical.

#include "coxsvi/types.hpp"

#include <string>

namespace coxsvi {

std::string format_real(Real v);
std::string format_integer(Index v);

}  // namespace coxsvi
