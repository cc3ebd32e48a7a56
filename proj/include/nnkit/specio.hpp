#pragma once

// Text rendering of NetworkSpec, used in config files and checkpoint headers.
// parse_spec(render_spec(s)) == s, including exact float round-trip.

#include <string>

#include "nnkit/net_spec.hpp"

namespace nnkit {

std::string render_spec(const NetworkSpec &spec);
NetworkSpec parse_spec(const std::string &text);

/// %.17g, enough digits to reproduce the double exactly.
std::string format_double(double v);

} // namespace nnkit
