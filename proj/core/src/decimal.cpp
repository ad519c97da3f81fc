#include "nidm/decimal.hpp"

#include <algorithm>
#include <stdexcept>

namespace nidm {
namespace {

struct Parts {
  bool negative = false;
  std::string_view integer;   // no leading zeros
  std::string_view fraction;  // no trailing zeros
};

Parts split(std::string_view text) {
  Parts p;
  if (!text.empty() && (text[0] == '+' || text[0] == '-')) {
    p.negative = text[0] == '-';
    text.remove_prefix(1);
  }
  auto dot = text.find('.');
  auto integer = text.substr(0, dot);
  auto fraction = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  while (!integer.empty() && integer.front() == '0') integer.remove_prefix(1);
  while (!fraction.empty() && fraction.back() == '0') fraction.remove_suffix(1);
  p.integer = integer;
  p.fraction = fraction;
  if (integer.empty() && fraction.empty()) p.negative = false;  // -0 == 0
  return p;
}

std::strong_ordering compare_magnitude(const Parts& a, const Parts& b) {
  if (a.integer.size() != b.integer.size()) return a.integer.size() <=> b.integer.size();
  if (auto c = a.integer.compare(b.integer); c != 0) return c <=> 0;
  auto n = std::max(a.fraction.size(), b.fraction.size());
  for (std::size_t i = 0; i < n; ++i) {
    char x = i < a.fraction.size() ? a.fraction[i] : '0';
    char y = i < b.fraction.size() ? b.fraction[i] : '0';
    if (x != y) return x <=> y;
  }
  return std::strong_ordering::equal;
}

}  // namespace

bool Decimal::is_decimal(std::string_view text) {
  std::size_t i = 0;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i, ++digits;
  if (digits == 0) return false;
  if (i == text.size()) return true;
  if (text[i] != '.') return false;
  ++i;
  digits = 0;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i, ++digits;
  return digits > 0 && i == text.size();
}

Decimal::Decimal(std::string text) : text_(std::move(text)) {
  if (!is_decimal(text_)) throw std::invalid_argument("not a decimal: '" + text_ + "'");
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  if (!is_decimal(text)) return std::nullopt;
  return Decimal(std::string(text));
}

std::strong_ordering Decimal::compare(const Decimal& other) const {
  auto a = split(text_);
  auto b = split(other.text_);
  if (a.negative != b.negative) return a.negative ? std::strong_ordering::less : std::strong_ordering::greater;
  auto mag = compare_magnitude(a, b);
  if (a.negative) {
    if (mag == std::strong_ordering::less) return std::strong_ordering::greater;
    if (mag == std::strong_ordering::greater) return std::strong_ordering::less;
  }
  return mag;
}

}  // namespace nidm
