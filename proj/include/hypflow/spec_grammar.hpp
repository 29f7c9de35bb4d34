#pragma once

#include <string>
#include <string_view>

#include "hypflow/symfunc.hpp"

namespace hypflow::symfunc {

/// Parses `powermean(r=<float>)`, `sigma(k=<int>)` or `blend(<spec>:<weight>,...)`.
/// Whitespace between tokens is ignored. Throws ConfigError with the offending
/// column on malformed input or when the parsed spec violates its invariants.
CurvatureFunctionSpec parse_spec(std::string_view text);

/// Canonical text form; parse_spec(to_string(s)) == s.
std::string to_string(const CurvatureFunctionSpec& spec);

}  // namespace hypflow::symfunc
