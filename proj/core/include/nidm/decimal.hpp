#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace nidm {

/// Exact decimal number kept in its lexical form ("2", "2.0", "-6000.25").
///
/// `==` is lexical identity (what round-trips through the codecs);
/// `compare` is exact numeric ordering with no floating point involved, so
/// "2" and "2.0" compare equal numerically while remaining distinct values.
class Decimal {
 public:
  Decimal() : text_("0") {}

  /// Throws std::invalid_argument unless `text` matches [+-]?[0-9]+(\.[0-9]+)?
  explicit Decimal(std::string text);

  static std::optional<Decimal> parse(std::string_view text);
  static bool is_decimal(std::string_view text);

  const std::string& text() const noexcept { return text_; }

  friend bool operator==(const Decimal&, const Decimal&) = default;

  std::strong_ordering compare(const Decimal& other) const;
  bool numerically_equal(const Decimal& other) const {
    return compare(other) == std::strong_ordering::equal;
  }

 private:
  std::string text_;
};

}  // namespace nidm
