#include "nidm/timestamp.hpp"

#include <array>
#include <cstdio>

namespace nidm {
namespace {

using namespace std::chrono;

constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

int month_index(std::string_view abbrev) {
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (kMonths[i] == abbrev) return static_cast<int>(i) + 1;
  }
  return 0;
}

std::optional<Timestamp> make(int y, int mo, int d, int h, int mi, int s) {
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  return Timestamp(sys_days{ymd} + hours{h} + minutes{mi} + seconds{s});
}

// "HH:MM:SS" at `pos`
bool clock(std::string_view s, std::size_t pos, int& h, int& mi, int& sec) {
  return digits(s, pos, 2, h) && s.size() > pos + 2 && s[pos + 2] == ':' && digits(s, pos + 3, 2, mi) &&
         s.size() > pos + 5 && s[pos + 5] == ':' && digits(s, pos + 6, 2, sec);
}

}  // namespace

std::optional<Timestamp> Timestamp::parse_iso(std::string_view s) {
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() != 19) return std::nullopt;
  int y, mo, d, h, mi, sec;
  if (!digits(s, 0, 4, y) || s[4] != '-' || !digits(s, 5, 2, mo) || s[7] != '-' || !digits(s, 8, 2, d) ||
      s[10] != 'T' || !clock(s, 11, h, mi, sec)) {
    return std::nullopt;
  }
  return make(y, mo, d, h, mi, sec);
}

std::optional<Timestamp> Timestamp::parse_spm(std::string_view s) {
  // 07-Jun-2012 14:06:39
  if (s.size() != 20) return std::nullopt;
  int d, y, h, mi, sec;
  if (!digits(s, 0, 2, d) || s[2] != '-' || s[6] != '-' || !digits(s, 7, 4, y) || s[11] != ' ' ||
      !clock(s, 12, h, mi, sec)) {
    return std::nullopt;
  }
  int mo = month_index(s.substr(3, 3));
  if (mo == 0) return std::nullopt;
  return make(y, mo, d, h, mi, sec);
}

std::optional<Timestamp> Timestamp::parse_ctime(std::string_view s) {
  // Www Mmm dd hh:mm:ss [ZZZ] yyyy ; day may be space padded
  auto next = [&s](std::size_t& pos) -> std::string_view {
    while (pos < s.size() && s[pos] == ' ') ++pos;
    auto start = pos;
    while (pos < s.size() && s[pos] != ' ') ++pos;
    return s.substr(start, pos - start);
  };
  std::size_t pos = 0;
  auto weekday = next(pos);
  auto mon = next(pos);
  auto day_txt = next(pos);
  auto clock_txt = next(pos);
  auto tail1 = next(pos);
  auto tail2 = next(pos);
  if (!next(pos).empty() || weekday.size() != 3) return std::nullopt;
  auto year_txt = tail2.empty() ? tail1 : tail2;
  int mo = month_index(mon);
  int d, y, h, mi, sec;
  if (mo == 0 || day_txt.empty() || day_txt.size() > 2 || year_txt.size() != 4) return std::nullopt;
  if (!digits(day_txt, 0, day_txt.size(), d) || !digits(year_txt, 0, 4, y)) return std::nullopt;
  if (clock_txt.size() != 8 || !clock(clock_txt, 0, h, mi, sec)) return std::nullopt;
  return make(y, mo, d, h, mi, sec);
}

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
  if (auto t = parse_iso(text)) return t;
  return parse_spm(text);
}

std::string Timestamp::iso() const {
  auto days = floor<std::chrono::days>(t_);
  year_month_day ymd{days};
  hh_mm_ss hms{t_ - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string Timestamp::spm() const {
  auto days = floor<std::chrono::days>(t_);
  year_month_day ymd{days};
  hh_mm_ss hms{t_ - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02u-%s-%04d %02d:%02d:%02d", static_cast<unsigned>(ymd.day()),
                kMonths[static_cast<unsigned>(ymd.month()) - 1].data(), static_cast<int>(ymd.year()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

}  // namespace nidm
