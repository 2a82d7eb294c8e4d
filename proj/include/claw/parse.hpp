#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "claw/model.hpp"

namespace claw {

struct ParseError {
  std::size_t line = 0;  // 1-based
  std::size_t col = 0;   // 1-based
  std::string message;

  std::string to_string() const;
};

struct ParseResult {
  SecurityModel model;
  std::vector<ParseError> errors;

  bool ok() const { return errors.empty(); }
};

// Parses the policy DSL. Collects all errors (syntax, duplicate names,
// dangling references, unknown attribute keys) instead of stopping at the
// first one; the returned model is only meaningful when ok().
ParseResult parse(std::string_view text);

// Canonical text form: entities, grants, defaults, policies in declaration
// order, permissions in the fixed order Read, Write, Append, NoExec,
// Visible; empty defaults are omitted. parse(render(m)) == m.
std::string render(const SecurityModel& model);

// Shared formatting helpers (also used by the table format).
std::string format_attr(const AttributeMatcher& attr);
std::string format_attr_list(const std::vector<AttributeMatcher>& attrs,
                             std::string_view separator);
std::string format_perm_braces(PermSet perms);
std::string quote_string(std::string_view text);

}  // namespace claw
