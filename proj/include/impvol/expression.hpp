#pragma once

#include <string_view>

#include "impvol/xreal.hpp"

namespace impvol {

/// Evaluates a real expression at the given precision. Grammar: decimal
/// numbers (with optional exponent, so 2e-1 is 0.2), the constants e and pi,
/// + - * / ^ (right associative, binds tighter than unary minus), parentheses,
/// and implicit multiplication ("2e", "3(1+pi)"). Throws DomainError on
/// malformed input.
XReal parse_expression(std::string_view text, int bits);

}  // namespace impvol
