#pragma once

#include <compare>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "cup/bigint.hpp"

namespace cup {

// Exact rational, always in lowest terms with a positive denominator, so
// equality is structural. Carries the infinite-precision values of incomes,
// prices and refunds before any rounding to whole cents.
class rational {
public:
    rational() : num_(0), den_(1) {}

    template <std::integral T>
    rational(T v) : num_(v), den_(1) {}

    rational(bigint num, bigint den) : num_(std::move(num)), den_(std::move(den)) { normalize(); }

    template <std::integral T, std::integral U>
    rational(T num, U den) : num_(num), den_(den) { normalize(); }

    // Accepts "n", "-n" or "n/d".
    static rational from_string(std::string_view s) {
        auto slash = s.find('/');
        if (slash == std::string_view::npos) return {bigint::from_string(s), bigint(1)};
        return {bigint::from_string(s.substr(0, slash)), bigint::from_string(s.substr(slash + 1))};
    }

    const bigint& num() const noexcept { return num_; }
    const bigint& den() const noexcept { return den_; }
    bool is_zero() const noexcept { return num_.is_zero(); }
    bool is_integer() const noexcept { return den_ == bigint(1); }
    int sign() const noexcept { return num_.sign(); }

    friend rational operator+(const rational& a, const rational& b) {
        if (a.den_ == b.den_) return {a.num_ + b.num_, a.den_};
        return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
    }

    friend rational operator-(const rational& a, const rational& b) {
        if (a.den_ == b.den_) return {a.num_ - b.num_, a.den_};
        return {a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_};
    }

    friend rational operator*(const rational& a, const rational& b) {
        return {a.num_ * b.num_, a.den_ * b.den_};
    }

    friend rational operator/(const rational& a, const rational& b) {
        if (b.is_zero()) throw std::domain_error("rational: division by zero");
        return {a.num_ * b.den_, a.den_ * b.num_};
    }

    rational operator-() const {
        rational r = *this;
        r.num_ = -r.num_;
        return r;
    }

    rational& operator+=(const rational& o) { return *this = *this + o; }
    rational& operator-=(const rational& o) { return *this = *this - o; }
    rational& operator*=(const rational& o) { return *this = *this * o; }
    rational& operator/=(const rational& o) { return *this = *this / o; }

    friend bool operator==(const rational& a, const rational& b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    friend std::strong_ordering operator<=>(const rational& a, const rational& b) {
        return a.num_ * b.den_ <=> b.num_ * a.den_;
    }

    bigint floor() const {
        auto [q, r] = bigint::divmod(num_, den_);
        if (!r.is_zero() && num_.negative()) q -= bigint(1);
        return q;
    }

    bigint ceil() const {
        auto [q, r] = bigint::divmod(num_, den_);
        if (!r.is_zero() && !num_.negative()) q += bigint(1);
        return q;
    }

    // Half-up: round(x) = floor(x + 1/2).
    bigint round_half_up() const {
        return rational(num_ * bigint(2) + den_, den_ * bigint(2)).floor();
    }

    std::string to_string() const {
        if (is_integer()) return num_.to_string();
        return num_.to_string() + "/" + den_.to_string();
    }

private:
    bigint num_;
    bigint den_;

    void normalize() {
        if (den_.is_zero()) throw std::domain_error("rational: zero denominator");
        if (den_.negative()) {
            num_ = -num_;
            den_ = -den_;
        }
        if (num_.is_zero()) {
            den_ = bigint(1);
            return;
        }
        bigint g = bigint::gcd(num_, den_);
        if (g != bigint(1)) {
            num_ /= g;
            den_ /= g;
        }
    }
};

}  // namespace cup
