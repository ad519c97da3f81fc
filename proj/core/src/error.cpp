#include "nidm/error.hpp"

namespace nidm {

std::string ParseError::describe(const SourceSpan& span, const std::string& expected,
                                 const std::string& found, const std::string& path) {
  std::string out = "parse error";
  if (!path.empty()) out += " at " + path;
  out += " (line " + std::to_string(span.line) + ", column " + std::to_string(span.column) + ")";
  if (!expected.empty()) out += ": expected " + expected;
  if (!found.empty()) out += ", found '" + found + "'";
  return out;
}

}  // namespace nidm
