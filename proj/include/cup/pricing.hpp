#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cup/errors.hpp"
#include "cup/rational.hpp"

namespace cup {

// Integer cup-cents. 1 cup == 100 cents; all materialized balances are cents.
using cents = std::int64_t;

// How exact prices become whole cents when a buyer is debited.
//   ceil_strict: new buyer pays the ceiling; escrow stays non-negative but the
//                price never falls below one cent.
//   nearest:     half-up rounding; late buyers eventually pay zero, at the
//                cost of a signed escrow.
enum class rounding : std::uint8_t { ceil_strict, nearest };

inline std::string_view rounding_name(rounding r) {
    return r == rounding::ceil_strict ? "ceil" : "nearest";
}

// The (P1, Iinf, xi) triple plus rounding mode that governs one listing's
// entire price/income series.
struct price_params {
    cents p1 = 0;          // first buyer's price, cents, >= 1
    cents i_inf = 0;       // seller's lifetime income cap, cents, >= p1
    rational xi;           // equilibrium coefficient in [0, 1]
    rounding mode = rounding::ceil_strict;

    static price_params make(cents p1, cents i_inf, rational xi,
                             rounding mode = rounding::ceil_strict) {
        if (p1 < 1) throw error(errc::invalid_params, "p1 must be at least one cent");
        if (i_inf < p1) throw error(errc::invalid_params, "i_inf must be >= p1");
        if (xi.sign() < 0 || xi > rational(1))
            throw error(errc::invalid_params, "xi must lie in [0, 1]");
        return {p1, i_inf, xi, mode};
    }

    bool operator==(const price_params&) const = default;
};

namespace detail {
inline void require(bool ok, const char* what) {
    if (!ok) throw error(errc::precondition, what);
}
}  // namespace detail

// Cumulative seller income after n purchases, in exact cups:
// min(P1 * (1 + xi*(n-1)), Iinf). Non-decreasing, income(1) == P1.
inline rational income(const price_params& p, std::uint64_t n) {
    detail::require(n >= 1, "income: n must be >= 1");
    // p1 and i_inf are cents; work scaled by 100.
    bigint grown = bigint(p.p1) * (p.xi.den() + p.xi.num() * bigint(n - 1));
    bigint capped = bigint(p.i_inf) * p.xi.den();
    if (grown > capped) grown = std::move(capped);
    return {std::move(grown), p.xi.den() * bigint(100)};
}

// Price paid (net, in the limit) by every buyer once n have bought: income(n)/n.
inline rational price(const price_params& p, std::uint64_t n) {
    detail::require(n >= 1, "price: n must be >= 1");
    return income(p, n) / rational(bigint(n), bigint(1));
}

// Income gained by the seller from purchase n alone. Zero once capped.
inline rational seller_delta(const price_params& p, std::uint64_t n) {
    detail::require(n >= 2, "seller_delta: n must be >= 2");
    return income(p, n) - income(p, n - 1);
}

// Amount refunded to each of the n-1 prior buyers by purchase n.
// The conservation-consistent form P(n-1) - P(n); equals
// (1-xi)*P1/(n*(n-1)) strictly before the cap.
inline rational refund_per_buyer(const price_params& p, std::uint64_t n) {
    detail::require(n >= 2, "refund_per_buyer: n must be >= 2");
    return price(p, n - 1) - price(p, n);
}

// Seller income over a batch of purchases, by telescoping. from_n == 0 means
// "before the first sale", so the result includes the initial P1.
inline rational seller_delta_batch(const price_params& p, std::uint64_t from_n, std::uint64_t to_n) {
    detail::require(from_n < to_n, "seller_delta_batch: empty interval");
    if (from_n == 0) return income(p, to_n);
    return income(p, to_n) - income(p, from_n);
}

// Total refund entitlement accrued by a buyer who joined at join_n while the
// count moved from from_n to to_n. from_n == to_n is allowed for balance
// queries and yields zero.
inline rational refund_batch(const price_params& p, std::uint64_t join_n,
                             std::uint64_t from_n, std::uint64_t to_n) {
    detail::require(join_n >= 1 && join_n <= from_n, "refund_batch: join_n must precede from_n");
    detail::require(from_n <= to_n, "refund_batch: interval must not run backwards");
    if (from_n == to_n) return {};
    return price(p, from_n) - price(p, to_n);
}

// Smallest n with income(n) == Iinf; nullopt when the cap is unreachable
// (xi == 0 with Iinf > P1).
inline std::optional<std::uint64_t> cap_index(const price_params& p) {
    if (p.i_inf == p.p1) return 1;
    if (p.xi.is_zero()) return std::nullopt;
    // smallest n >= 1 + (Iinf - P1) / (xi * P1)
    rational steps(bigint(p.i_inf - p.p1) * p.xi.den(), bigint(p.p1) * p.xi.num());
    bigint n = steps.ceil() + bigint(1);
    if (!n.fits_u64()) throw std::overflow_error("cap_index exceeds uint64 range");
    return n.to_u64();
}

}  // namespace cup
