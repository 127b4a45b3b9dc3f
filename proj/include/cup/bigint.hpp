#pragma once

#include <bit>
#include <compare>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cup {

// Arbitrary-precision signed integer. Little-endian base-2^32 magnitude;
// zero is the empty magnitude and is never negative.
class bigint {
public:
    bigint() = default;

    template <std::integral T>
    bigint(T v) {
        if constexpr (std::is_signed_v<T>) {
            neg_ = v < 0;
            std::uint64_t m = neg_ ? ~static_cast<std::uint64_t>(v) + 1 : static_cast<std::uint64_t>(v);
            set_u64(m);
        } else {
            set_u64(static_cast<std::uint64_t>(v));
        }
    }

    static bigint from_string(std::string_view s) {
        bigint r;
        bool neg = false;
        std::size_t i = 0;
        if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
            neg = s[i] == '-';
            ++i;
        }
        if (i == s.size()) throw std::invalid_argument("bigint: empty numeral");
        for (; i < s.size();) {
            std::uint32_t chunk = 0, scale = 1;
            for (int k = 0; k < 9 && i < s.size(); ++k, ++i) {
                char c = s[i];
                if (c < '0' || c > '9') throw std::invalid_argument("bigint: bad digit");
                chunk = chunk * 10 + static_cast<std::uint32_t>(c - '0');
                scale *= 10;
            }
            r.mul_small(scale);
            r.add_small(chunk);
        }
        r.neg_ = neg && !r.mag_.empty();
        return r;
    }

    bool is_zero() const noexcept { return mag_.empty(); }
    bool negative() const noexcept { return neg_; }
    int sign() const noexcept { return mag_.empty() ? 0 : (neg_ ? -1 : 1); }

    bool fits_i64() const noexcept {
        if (mag_.size() > 2) return false;
        std::uint64_t m = mag_u64();
        return neg_ ? m <= (1ull << 63) : m < (1ull << 63);
    }

    std::int64_t to_i64() const {
        if (!fits_i64()) throw std::overflow_error("bigint: value does not fit int64");
        std::uint64_t m = mag_u64();
        return neg_ ? -static_cast<std::int64_t>(m - 1) - 1 : static_cast<std::int64_t>(m);
    }

    bool fits_u64() const noexcept { return !neg_ && mag_.size() <= 2; }

    std::uint64_t to_u64() const {
        if (!fits_u64()) throw std::overflow_error("bigint: value does not fit uint64");
        return mag_u64();
    }

    friend bool operator==(const bigint& a, const bigint& b) noexcept {
        return a.neg_ == b.neg_ && a.mag_ == b.mag_;
    }

    friend std::strong_ordering operator<=>(const bigint& a, const bigint& b) noexcept {
        if (a.neg_ != b.neg_) return a.neg_ ? std::strong_ordering::less : std::strong_ordering::greater;
        int c = cmp_mag(a.mag_, b.mag_);
        if (a.neg_) c = -c;
        return c < 0 ? std::strong_ordering::less : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
    }

    bigint operator-() const {
        bigint r = *this;
        if (!r.mag_.empty()) r.neg_ = !r.neg_;
        return r;
    }

    bigint abs() const {
        bigint r = *this;
        r.neg_ = false;
        return r;
    }

    friend bigint operator+(const bigint& a, const bigint& b) {
        if (a.neg_ == b.neg_) return make(a.neg_, add_mag(a.mag_, b.mag_));
        int c = cmp_mag(a.mag_, b.mag_);
        if (c == 0) return bigint{};
        if (c > 0) return make(a.neg_, sub_mag(a.mag_, b.mag_));
        return make(b.neg_, sub_mag(b.mag_, a.mag_));
    }

    friend bigint operator-(const bigint& a, const bigint& b) { return a + (-b); }

    friend bigint operator*(const bigint& a, const bigint& b) {
        if (a.is_zero() || b.is_zero()) return bigint{};
        return make(a.neg_ != b.neg_, mul_mag(a.mag_, b.mag_));
    }

    // Truncated division: quotient rounds toward zero, remainder keeps the
    // dividend's sign, a == q*b + r.
    static std::pair<bigint, bigint> divmod(const bigint& a, const bigint& b) {
        if (b.is_zero()) throw std::domain_error("bigint: division by zero");
        std::vector<std::uint32_t> q, r;
        divmod_mag(a.mag_, b.mag_, q, r);
        return {make(a.neg_ != b.neg_, std::move(q)), make(a.neg_, std::move(r))};
    }

    friend bigint operator/(const bigint& a, const bigint& b) { return divmod(a, b).first; }
    friend bigint operator%(const bigint& a, const bigint& b) { return divmod(a, b).second; }

    bigint& operator+=(const bigint& o) { return *this = *this + o; }
    bigint& operator-=(const bigint& o) { return *this = *this - o; }
    bigint& operator*=(const bigint& o) { return *this = *this * o; }
    bigint& operator/=(const bigint& o) { return *this = *this / o; }

    static bigint gcd(bigint a, bigint b) {
        a.neg_ = false;
        b.neg_ = false;
        while (!b.is_zero()) {
            bigint r = a % b;
            a = std::move(b);
            b = std::move(r);
        }
        return a;
    }

    std::string to_string() const {
        if (mag_.empty()) return "0";
        std::vector<std::uint32_t> tmp = mag_;
        std::string out;
        while (!tmp.empty()) {
            std::uint64_t rem = 0;
            for (std::size_t i = tmp.size(); i-- > 0;) {
                std::uint64_t cur = (rem << 32) | tmp[i];
                tmp[i] = static_cast<std::uint32_t>(cur / 1000000000u);
                rem = cur % 1000000000u;
            }
            while (!tmp.empty() && tmp.back() == 0) tmp.pop_back();
            for (int k = 0; k < 9; ++k) {
                out.push_back(static_cast<char>('0' + rem % 10));
                rem /= 10;
            }
        }
        while (out.size() > 1 && out.back() == '0') out.pop_back();
        if (neg_) out.push_back('-');
        return {out.rbegin(), out.rend()};
    }

private:
    bool neg_ = false;
    std::vector<std::uint32_t> mag_;

    std::uint64_t mag_u64() const noexcept {
        std::uint64_t m = 0;
        if (mag_.size() > 1) m = static_cast<std::uint64_t>(mag_[1]) << 32;
        if (!mag_.empty()) m |= mag_[0];
        return m;
    }

    void set_u64(std::uint64_t m) {
        mag_.clear();
        if (m) mag_.push_back(static_cast<std::uint32_t>(m));
        if (m >> 32) mag_.push_back(static_cast<std::uint32_t>(m >> 32));
        if (mag_.empty()) neg_ = false;
    }

    void mul_small(std::uint32_t f) {
        std::uint64_t carry = 0;
        for (auto& limb : mag_) {
            std::uint64_t cur = static_cast<std::uint64_t>(limb) * f + carry;
            limb = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        if (carry) mag_.push_back(static_cast<std::uint32_t>(carry));
    }

    void add_small(std::uint32_t v) {
        std::uint64_t carry = v;
        for (std::size_t i = 0; carry && i < mag_.size(); ++i) {
            std::uint64_t cur = mag_[i] + carry;
            mag_[i] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        if (carry) mag_.push_back(static_cast<std::uint32_t>(carry));
    }

    static bigint make(bool neg, std::vector<std::uint32_t> mag) {
        bigint r;
        r.mag_ = std::move(mag);
        trim(r.mag_);
        r.neg_ = neg && !r.mag_.empty();
        return r;
    }

    static void trim(std::vector<std::uint32_t>& v) {
        while (!v.empty() && v.back() == 0) v.pop_back();
    }

    static int cmp_mag(const std::vector<std::uint32_t>& x, const std::vector<std::uint32_t>& y) noexcept {
        if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
        for (std::size_t i = x.size(); i-- > 0;)
            if (x[i] != y[i]) return x[i] < y[i] ? -1 : 1;
        return 0;
    }

    static std::vector<std::uint32_t> add_mag(const std::vector<std::uint32_t>& x, const std::vector<std::uint32_t>& y) {
        const auto& a = x.size() >= y.size() ? x : y;
        const auto& b = x.size() >= y.size() ? y : x;
        std::vector<std::uint32_t> r(a.size());
        std::uint64_t carry = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            std::uint64_t cur = static_cast<std::uint64_t>(a[i]) + (i < b.size() ? b[i] : 0) + carry;
            r[i] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        if (carry) r.push_back(static_cast<std::uint32_t>(carry));
        return r;
    }

    // requires |x| >= |y|
    static std::vector<std::uint32_t> sub_mag(const std::vector<std::uint32_t>& x, const std::vector<std::uint32_t>& y) {
        std::vector<std::uint32_t> r(x.size());
        std::int64_t borrow = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::int64_t cur = static_cast<std::int64_t>(x[i]) - (i < y.size() ? y[i] : 0) - borrow;
            borrow = cur < 0;
            if (cur < 0) cur += (1ll << 32);
            r[i] = static_cast<std::uint32_t>(cur);
        }
        trim(r);
        return r;
    }

    static std::vector<std::uint32_t> mul_mag(const std::vector<std::uint32_t>& x, const std::vector<std::uint32_t>& y) {
        std::vector<std::uint32_t> r(x.size() + y.size(), 0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::uint64_t carry = 0;
            for (std::size_t j = 0; j < y.size(); ++j) {
                std::uint64_t cur = static_cast<std::uint64_t>(x[i]) * y[j] + r[i + j] + carry;
                r[i + j] = static_cast<std::uint32_t>(cur);
                carry = cur >> 32;
            }
            r[i + y.size()] = static_cast<std::uint32_t>(carry);
        }
        trim(r);
        return r;
    }

    // Knuth algorithm D over base-2^32 limbs.
    static void divmod_mag(const std::vector<std::uint32_t>& u, const std::vector<std::uint32_t>& v,
                           std::vector<std::uint32_t>& q, std::vector<std::uint32_t>& r) {
        q.clear();
        r.clear();
        if (cmp_mag(u, v) < 0) {
            r = u;
            trim(r);
            return;
        }
        const std::size_t n = v.size(), m = u.size();
        if (n == 1) {
            std::uint64_t rem = 0;
            q.assign(m, 0);
            for (std::size_t i = m; i-- > 0;) {
                std::uint64_t cur = (rem << 32) | u[i];
                q[i] = static_cast<std::uint32_t>(cur / v[0]);
                rem = cur % v[0];
            }
            trim(q);
            if (rem) r.push_back(static_cast<std::uint32_t>(rem));
            return;
        }
        const int s = std::countl_zero(v[n - 1]);
        std::vector<std::uint32_t> vn(n), un(m + 1);
        for (std::size_t i = n; i-- > 1;)
            vn[i] = s ? (v[i] << s) | (v[i - 1] >> (32 - s)) : v[i];
        vn[0] = v[0] << s;
        un[m] = s ? u[m - 1] >> (32 - s) : 0;
        for (std::size_t i = m; i-- > 1;)
            un[i] = s ? (u[i] << s) | (u[i - 1] >> (32 - s)) : u[i];
        un[0] = u[0] << s;

        q.assign(m - n + 1, 0);
        for (std::size_t j = m - n + 1; j-- > 0;) {
            std::uint64_t num = (static_cast<std::uint64_t>(un[j + n]) << 32) | un[j + n - 1];
            std::uint64_t qhat = num / vn[n - 1];
            std::uint64_t rhat = num % vn[n - 1];
            while (qhat >= (1ull << 32) ||
                   qhat * vn[n - 2] > ((rhat << 32) | un[j + n - 2])) {
                --qhat;
                rhat += vn[n - 1];
                if (rhat >= (1ull << 32)) break;
            }
            std::int64_t t, k = 0;
            for (std::size_t i = 0; i < n; ++i) {
                std::uint64_t p = qhat * vn[i];
                t = static_cast<std::int64_t>(un[i + j]) - k - static_cast<std::int64_t>(p & 0xFFFFFFFFull);
                un[i + j] = static_cast<std::uint32_t>(t);
                k = static_cast<std::int64_t>(p >> 32) - (t >> 32);
            }
            t = static_cast<std::int64_t>(un[j + n]) - k;
            un[j + n] = static_cast<std::uint32_t>(t);
            q[j] = static_cast<std::uint32_t>(qhat);
            if (t < 0) {
                --q[j];
                std::uint64_t carry = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    std::uint64_t t2 = static_cast<std::uint64_t>(un[i + j]) + vn[i] + carry;
                    un[i + j] = static_cast<std::uint32_t>(t2);
                    carry = t2 >> 32;
                }
                un[j + n] += static_cast<std::uint32_t>(carry);
            }
        }
        trim(q);
        r.assign(n, 0);
        for (std::size_t i = 0; i < n - 1; ++i)
            r[i] = s ? static_cast<std::uint32_t>((un[i] >> s) | (static_cast<std::uint64_t>(un[i + 1]) << (32 - s)))
                     : un[i];
        r[n - 1] = un[n - 1] >> s;
        trim(r);
    }
};

}  // namespace cup
