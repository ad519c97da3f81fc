#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace nidm {

/// UTC instant at second precision.
///
/// Two lexical forms are accepted everywhere a timestamp is read:
///   ISO 8601   2001-01-01T00:30:00   (optional trailing 'Z')
///   SPM batch  07-Jun-2012 14:06:39  (English month abbreviations)
/// Output is ISO unless a caller explicitly asks for the SPM form.
class Timestamp {
 public:
  Timestamp() = default;
  explicit Timestamp(std::chrono::sys_seconds t) : t_(t) {}

  static std::optional<Timestamp> parse_iso(std::string_view text);
  static std::optional<Timestamp> parse_spm(std::string_view text);
  /// Unix ctime-style "Sat Mar 10 14:06:39 [TZ] 2012"; the zone is ignored.
  static std::optional<Timestamp> parse_ctime(std::string_view text);
  /// ISO or SPM form.
  static std::optional<Timestamp> parse(std::string_view text);

  std::string iso() const;
  std::string spm() const;

  std::chrono::sys_seconds time() const noexcept { return t_; }

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

 private:
  std::chrono::sys_seconds t_{};
};

}  // namespace nidm
