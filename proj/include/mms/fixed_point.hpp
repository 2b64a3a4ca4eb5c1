#pragma once

// Exact fixed-point time values with 1e-4 resolution.

#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

#include "mms/error.hpp"

namespace mms {

// A duration or conveyor offset in time units (TU), stored as an integer
// count of 1e-4 TU ticks so that cumulative sums over long sequences are
// exact.
class Time {
 public:
  static constexpr std::int64_t kScale = 10000;

  constexpr Time() = default;

  static constexpr Time from_ticks(std::int64_t ticks) { return Time(ticks); }
  static Time from_double(double tu) {
    return Time(static_cast<std::int64_t>(std::llround(tu * kScale)));
  }
  static constexpr Time from_units(std::int64_t whole) {
    return Time(whole * kScale);
  }

  // Parses a plain decimal string ("97", "97.5", "-0.0001") without going
  // through binary floating point. More than four fractional digits is an
  // error because the value would not be representable.
  static Time parse(std::string_view text) {
    if (text.empty()) throw ParseError("empty time value");
    bool negative = false;
    std::size_t pos = 0;
    if (text[0] == '-' || text[0] == '+') {
      negative = text[0] == '-';
      pos = 1;
    }
    std::int64_t whole = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool seen_digit = false;
    bool in_frac = false;
    for (; pos < text.size(); ++pos) {
      const char ch = text[pos];
      if (ch == '.') {
        if (in_frac) throw ParseError("malformed time value '" + std::string(text) + "'");
        in_frac = true;
        continue;
      }
      if (ch < '0' || ch > '9') {
        throw ParseError("malformed time value '" + std::string(text) + "'");
      }
      seen_digit = true;
      if (in_frac) {
        if (++frac_digits > 4) {
          throw ParseError("time value '" + std::string(text) +
                           "' has more than 4 decimal places");
        }
        frac = frac * 10 + (ch - '0');
      } else {
        whole = whole * 10 + (ch - '0');
        if (whole > (std::int64_t{1} << 40)) {
          throw ParseError("time value '" + std::string(text) + "' out of range");
        }
      }
    }
    if (!seen_digit) throw ParseError("malformed time value '" + std::string(text) + "'");
    for (int i = frac_digits; i < 4; ++i) frac *= 10;
    const std::int64_t ticks = whole * kScale + frac;
    return Time(negative ? -ticks : ticks);
  }

  constexpr std::int64_t ticks() const { return ticks_; }
  constexpr double to_double() const {
    return static_cast<double>(ticks_) / static_cast<double>(kScale);
  }

  // Always four decimals, e.g. "97.0000".
  std::string to_string() const {
    const std::int64_t mag = ticks_ < 0 ? -ticks_ : ticks_;
    std::string frac = std::to_string(mag % kScale);
    frac.insert(0, 4 - frac.size(), '0');
    return (ticks_ < 0 ? "-" : "") + std::to_string(mag / kScale) + "." + frac;
  }

  constexpr Time operator+(Time o) const { return Time(ticks_ + o.ticks_); }
  constexpr Time operator-(Time o) const { return Time(ticks_ - o.ticks_); }
  constexpr Time operator-() const { return Time(-ticks_); }
  constexpr Time& operator+=(Time o) {
    ticks_ += o.ticks_;
    return *this;
  }
  constexpr Time& operator-=(Time o) {
    ticks_ -= o.ticks_;
    return *this;
  }
  constexpr Time operator*(std::int64_t k) const { return Time(ticks_ * k); }

  constexpr auto operator<=>(const Time&) const = default;

 private:
  constexpr explicit Time(std::int64_t ticks) : ticks_(ticks) {}
  std::int64_t ticks_ = 0;
};

constexpr Time kZeroTime{};

inline std::ostream& operator<<(std::ostream& os, Time t) {
  return os << t.to_string();
}

// Probabilities are quantised to the same four decimals the file format
// carries, so generated values survive a save/load round trip bit-exactly.
inline double quantize_probability(double p) {
  return static_cast<double>(std::llround(p * 10000.0)) / 10000.0;
}

inline double parse_probability(std::string_view text) {
  // Validate shape with the fixed-point parser, then let strtod produce the
  // nearest double (identical to quantize_probability of the same decimal).
  (void)Time::parse(text);
  return std::strtod(std::string(text).c_str(), nullptr);
}

inline std::string format_fixed4(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

}  // namespace mms

template <>
struct std::hash<mms::Time> {
  std::size_t operator()(mms::Time t) const noexcept {
    return std::hash<std::int64_t>{}(t.ticks());
  }
};
