#pragma once

#include <string>

#include "smallgain/scalar_fn.hpp"

namespace smallgain {

/// Parse the function grammar:
///
///   expr   := term ('+' term)*
///   term   := factor ('.' factor)*            composition, f . g = f(g(s))
///   factor := 'id' | 's' | NUM
///           | NUM '*' 's'                     linear
///           | 's' '^' NUM                     power
///           | NUM '*' 's' '/' '(1+s)'         bounded saturation
///           | NUM '*' 's' '^' NUM             k * s^p
///           | 'inv' '(' expr ')'
///           | 'min' '(' expr ',' expr ')'
///           | '(' expr ')'
///
/// An optional trailing ':K' or ':Kinf' declares the class; without it the
/// class derived from the tree construction stands.
ScalarFn parse_scalar_fn(const std::string& text, double cap = kDefaultCap);

}  // namespace smallgain
