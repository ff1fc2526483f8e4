#pragma once

#include <string>

namespace psivolterra {

/// Shortest decimal text that parses back to exactly v ("nan", "inf" and
/// "-inf" for non-finite values).
std::string format_double(double v);

}  // namespace psivolterra
