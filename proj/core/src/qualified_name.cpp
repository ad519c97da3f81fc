#include "nidm/qualified_name.hpp"

#include <stdexcept>

namespace nidm {
namespace {

bool is_alpha(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

bool QualifiedName::valid_prefix(std::string_view prefix) {
  if (prefix.empty() || !(is_alpha(prefix[0]) || prefix[0] == '_')) return false;
  for (char c : prefix) {
    if (!(is_alpha(c) || is_digit(c) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

bool QualifiedName::valid_local(std::string_view local) {
  if (local.empty() || !(is_alpha(local[0]) || is_digit(local[0]) || local[0] == '_')) return false;
  for (char c : local) {
    if (!(is_alpha(c) || is_digit(c) || c == '_' || c == '-' || c == '.')) return false;
  }
  return true;
}

QualifiedName::QualifiedName(std::string prefix, std::string local)
    : prefix_(std::move(prefix)), local_(std::move(local)) {
  if (!valid_prefix(prefix_)) throw std::invalid_argument("invalid namespace prefix '" + prefix_ + "'");
  if (!valid_local(local_)) throw std::invalid_argument("invalid local name '" + local_ + "'");
}

std::optional<QualifiedName> QualifiedName::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto prefix = text.substr(0, colon);
  auto local = text.substr(colon + 1);
  if (!valid_prefix(prefix) || !valid_local(local)) return std::nullopt;
  return QualifiedName(std::string(prefix), std::string(local));
}

bool valid_local_id(std::string_view id) {
  if (id.empty() || !(is_alpha(id[0]) || id[0] == '_')) return false;
  for (char c : id) {
    if (!(is_alpha(c) || is_digit(c) || c == '_' || c == '.')) return false;
  }
  return true;
}

}  // namespace nidm
