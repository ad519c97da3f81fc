#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace nidm {

/// A namespaced term `prefix:local`. Both parts are restricted to a
/// conservative token alphabet so the textual form is unambiguous in every
/// codec (no whitespace, quotes or colons; the local part never starts with '/'
/// so `scheme://...` strings are never mistaken for terms).
class QualifiedName {
 public:
  QualifiedName() = default;

  /// Throws std::invalid_argument when either part is malformed.
  QualifiedName(std::string prefix, std::string local);

  /// Parses "prefix:local"; nullopt on any syntax problem.
  static std::optional<QualifiedName> parse(std::string_view text);

  static bool valid_prefix(std::string_view prefix);
  static bool valid_local(std::string_view local);

  const std::string& prefix() const noexcept { return prefix_; }
  const std::string& local() const noexcept { return local_; }
  std::string str() const { return prefix_ + ":" + local_; }

  friend bool operator==(const QualifiedName&, const QualifiedName&) = default;
  friend auto operator<=>(const QualifiedName&, const QualifiedName&) = default;

 private:
  std::string prefix_;
  std::string local_;
};

/// Record identifiers local to one document (plan_1, a_1, e_30, ...).
bool valid_local_id(std::string_view id);

namespace ns {
inline constexpr std::string_view kProv = "http://www.w3.org/ns/prov#";
inline constexpr std::string_view kNidm = "http://www.incf.org/ns/nidash/nidm#";
inline constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema";
inline constexpr std::string_view kXsi = "http://www.w3.org/2001/XMLSchema-instance";
}  // namespace ns

}  // namespace nidm
