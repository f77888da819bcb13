#pragma once

#include <string_view>

#include "cspath/polynomial_operator.hpp"

namespace cspath {

/**
 * Parses an operator expression over the modes of `space`. Whitespace is ignored.
 *
 *   expr    := term (('+' | '-') term)*
 *   term    := unary (('*' | '/') unary)*
 *   unary   := ('+' | '-') unary | power
 *   power   := primary ('^' uint)?
 *   primary := number | 'i' | 'hbar' | 'Q' uint | 'P' uint | 'A' uint | 'Ad' uint | '(' expr ')'
 *
 * Numbers are decimal with optional exponent, parsed without locale. 'A' is the
 * scaled lowering operator (Q/w + i w P)/2 and 'Ad' its adjoint. Division is only
 * allowed by an hbar-free constant. Errors throw ParseError with a 1-based column.
 *
 * Example: "0.5*(P0^2 + Q0^2) + (1 + Q0^2)*P0^2".
 */
PolynomialOperator parse_operator(std::string_view text, const ModeSpace& space);

}  // namespace cspath
