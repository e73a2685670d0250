#pragma once

#include <string>

namespace grpolab {

// Shortest decimal text that round-trips the exact double. Used for every
// number we persist (CSV, stdout) so repeated runs are byte-identical.
std::string format_double(double value);

}  // namespace grpolab
