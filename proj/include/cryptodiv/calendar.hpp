#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace cryptodiv {

/// A calendar day on the proleptic Gregorian calendar.
class Date {
public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  constexpr Date(int year, unsigned month, unsigned day)
      : days_(std::chrono::year{year} / std::chrono::month{month} /
              std::chrono::day{day}) {}

  /// Parses `YYYY-MM-DD`; throws std::invalid_argument on anything else.
  static Date parse(std::string_view text);

  [[nodiscard]] std::string iso() const;
  [[nodiscard]] int year() const;
  [[nodiscard]] constexpr long serial() const {
    return static_cast<long>(days_.time_since_epoch().count());
  }
  [[nodiscard]] constexpr std::chrono::sys_days sys_days() const { return days_; }

  [[nodiscard]] constexpr Date plus_days(long n) const {
    return Date{days_ + std::chrono::days{n}};
  }
  friend constexpr long operator-(Date a, Date b) {
    return (a.days_ - b.days_).count();
  }
  friend constexpr auto operator<=>(Date, Date) = default;
  friend constexpr bool operator==(Date, Date) = default;

private:
  std::chrono::sys_days days_{};
};

} // namespace cryptodiv
