#pragma once

#include <string_view>

#include "pathfinder/predicate.hpp"

namespace pathfinder {

/// Parses the filter language:
///
///   expr   := term (OR term)*
///   term   := factor (AND factor)*
///   factor := atom | "(" expr ")"
///   atom   := ident cmp number
///           | number ("<=" | "<") ident ("<=" | "<") number
///           | ident IN "(" string ("," string)* ")"
///           | ident "=" string
///   cmp    := < | <= | > | >= | =
///
/// Keywords are case-insensitive, strings are double-quoted with backslash
/// escapes. Attribute names are resolved against the schema.
/// Throws FilterError carrying the byte offset of the offending token.
BoolExpr parse_filter(std::string_view text, const Schema& schema);

/// parse_filter followed by to_dnf.
DnfPredicate parse_dnf(std::string_view text, const Schema& schema);

}  // namespace pathfinder
