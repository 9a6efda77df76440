// Copyright 2026 The graphfog Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace graphfog {

/// Simulated time (or duration) as an integer count of nanoseconds.
///
/// Integer arithmetic keeps replays bit-exact; conversions to and from
/// floating-point milliseconds/seconds happen only at the edges.
class SimTime {
 public:
  using rep = std::int64_t;

  constexpr SimTime() = default;

  static constexpr SimTime from_nanos(rep ns) {
    if (ns < 0) throw std::invalid_argument("SimTime: negative nanoseconds");
    return SimTime(ns);
  }
  static SimTime from_millis(double ms) { return from_real(ms * 1e6); }
  static SimTime from_seconds(double s) { return from_real(s * 1e9); }
  static constexpr SimTime max() { return SimTime(std::numeric_limits<rep>::max()); }

  constexpr rep nanos() const { return ns_; }
  constexpr double millis() const { return static_cast<double>(ns_) / 1e6; }
  constexpr double seconds() const { return static_cast<double>(ns_) / 1e9; }
  constexpr double minutes() const { return static_cast<double>(ns_) / 6e10; }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime& operator+=(SimTime o) {
    ns_ += o.ns_;
    return *this;
  }
  friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime(a.ns_ + b.ns_); }

  // Durations are non-negative; subtracting a later time is a logic error.
  friend constexpr SimTime operator-(SimTime a, SimTime b) {
    if (b.ns_ > a.ns_) throw std::logic_error("SimTime: negative difference");
    return SimTime(a.ns_ - b.ns_);
  }

  friend std::ostream& operator<<(std::ostream& os, SimTime t) { return os << t.ns_ << "ns"; }

 private:
  constexpr explicit SimTime(rep ns) : ns_(ns) {}

  static SimTime from_real(double ns) {
    if (!std::isfinite(ns) || ns < 0) throw std::invalid_argument("SimTime: invalid value");
    return SimTime(static_cast<rep>(std::llround(ns)));
  }

  rep ns_ = 0;
};

namespace literals {
constexpr SimTime operator""_ns(unsigned long long v) { return SimTime::from_nanos(static_cast<SimTime::rep>(v)); }
constexpr SimTime operator""_us(unsigned long long v) { return SimTime::from_nanos(static_cast<SimTime::rep>(v) * 1'000); }
constexpr SimTime operator""_ms(unsigned long long v) { return SimTime::from_nanos(static_cast<SimTime::rep>(v) * 1'000'000); }
constexpr SimTime operator""_s(unsigned long long v) { return SimTime::from_nanos(static_cast<SimTime::rep>(v) * 1'000'000'000); }
}  // namespace literals

}  // namespace graphfog
