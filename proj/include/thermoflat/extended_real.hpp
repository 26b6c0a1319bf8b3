#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace thermoflat {

/// Real number extended by +inf and -inf.
///
/// Infinities are carried as an explicit state rather than as IEEE
/// overflow, so that conjugates outside their effective domain can be
/// added and compared without producing NaN. Adding opposite infinities
/// is undefined and throws std::domain_error.
class ExtReal {
 public:
  enum class State { finite, pos_inf, neg_inf };

  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : value_(v) {  // NOLINT(google-explicit-constructor)
    if (v != v) throw std::domain_error("ExtReal: NaN");
    if (v == std::numeric_limits<double>::infinity()) {
      state_ = State::pos_inf;
      value_ = 0.0;
    } else if (v == -std::numeric_limits<double>::infinity()) {
      state_ = State::neg_inf;
      value_ = 0.0;
    }
  }

  static constexpr ExtReal pos_inf() { return ExtReal(State::pos_inf); }
  static constexpr ExtReal neg_inf() { return ExtReal(State::neg_inf); }

  constexpr State state() const { return state_; }
  constexpr bool is_finite() const { return state_ == State::finite; }
  constexpr bool is_pos_inf() const { return state_ == State::pos_inf; }
  constexpr bool is_neg_inf() const { return state_ == State::neg_inf; }

  /// Finite value; throws when infinite.
  double value() const {
    if (!is_finite()) throw std::domain_error("ExtReal: value() of an infinite quantity");
    return value_;
  }

  /// Lossy view for reporting: infinities become IEEE infinities.
  constexpr double to_double() const {
    switch (state_) {
      case State::pos_inf: return std::numeric_limits<double>::infinity();
      case State::neg_inf: return -std::numeric_limits<double>::infinity();
      default: return value_;
    }
  }

  constexpr ExtReal operator-() const {
    switch (state_) {
      case State::pos_inf: return neg_inf();
      case State::neg_inf: return pos_inf();
      default: return ExtReal(-value_);
    }
  }

  friend ExtReal operator+(ExtReal a, ExtReal b) {
    if (a.is_finite() && b.is_finite()) return ExtReal(a.value_ + b.value_);
    if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf()))
      throw std::domain_error("ExtReal: +inf + -inf is undefined");
    return a.is_finite() ? b : a;
  }
  friend ExtReal operator-(ExtReal a, ExtReal b) { return a + (-b); }
  /// Nonnegative scalar multiple, with 0 * inf = 0 (integration convention).
  friend ExtReal operator*(double w, ExtReal a) {
    if (w < 0) throw std::domain_error("ExtReal: negative scalar");
    if (w == 0.0) return ExtReal(0.0);
    return a.is_finite() ? ExtReal(w * a.value_) : a;
  }
  ExtReal& operator+=(ExtReal b) { return *this = *this + b; }
  ExtReal& operator-=(ExtReal b) { return *this = *this - b; }

  friend std::partial_ordering operator<=>(const ExtReal& a, const ExtReal& b) {
    auto rank = [](State s) { return s == State::neg_inf ? 0 : (s == State::finite ? 1 : 2); };
    if (a.state_ != b.state_) return rank(a.state_) <=> rank(b.state_);
    if (a.is_finite()) return a.value_ <=> b.value_;
    return std::partial_ordering::equivalent;
  }
  friend bool operator==(const ExtReal& a, const ExtReal& b) {
    return a.state_ == b.state_ && (!a.is_finite() || a.value_ == b.value_);
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtReal& x) {
    if (x.is_pos_inf()) return os << "+inf";
    if (x.is_neg_inf()) return os << "-inf";
    return os << x.value_;
  }

 private:
  constexpr explicit ExtReal(State s) : state_(s) {}

  double value_ = 0.0;
  State state_ = State::finite;
};

inline ExtReal max(ExtReal a, ExtReal b) { return a < b ? b : a; }
inline ExtReal min(ExtReal a, ExtReal b) { return b < a ? b : a; }

}  // namespace thermoflat
