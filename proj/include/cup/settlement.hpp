#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "cup/pricing.hpp"

namespace cup {

// Party index within a settlement plan: either an interned account index or
// the listing's own escrow account.
inline constexpr std::uint32_t escrow_party = 0xFFFFFFFFu;

struct plan_entry {
    std::uint32_t party = 0;  // account index, or escrow_party
    cents delta = 0;

    bool operator==(const plan_entry&) const = default;
};

// A closed transfer: the deltas of every plan sum to zero exactly. Nothing is
// minted or destroyed by a purchase or a batch settle.
struct settlement_plan {
    std::vector<plan_entry> entries;

    cents sum() const {
        cents s = 0;
        for (const auto& e : entries) s += e.delta;
        return s;
    }

    bool operator==(const settlement_plan&) const = default;
};

// What the n-th buyer is debited, in whole cents.
inline cents materialize_debit(const price_params& p, std::uint64_t n) {
    detail::require(n >= 1, "materialize_debit: n must be >= 1");
    rational in_cents = price(p, n) * rational(100);
    bigint c = p.mode == rounding::ceil_strict ? in_cents.ceil() : in_cents.round_half_up();
    return c.to_i64();
}

// Seller's cumulative materialized income through count n: floor of the exact
// income in cents, so the seller is never ahead of the exact series.
inline cents materialize_income(const price_params& p, std::uint64_t n) {
    if (n == 0) return 0;
    return (income(p, n) * rational(100)).floor().to_i64();
}

// Refund cents owed to a holder who joined at join_n, now that current_n have
// bought, beyond what was already credited. The cumulative entitlement is the
// holder's actual debit minus the live debit price, which floors the exact
// entitlement and keeps every net cost within one cent of the exact price.
inline cents holder_entitlement(const price_params& p, std::uint64_t join_n,
                                std::uint64_t current_n, cents already_materialized) {
    detail::require(join_n >= 1 && join_n <= current_n,
                    "holder_entitlement: join_n must not exceed current_n");
    cents total = materialize_debit(p, join_n) - materialize_debit(p, current_n);
    detail::require(already_materialized >= 0 && already_materialized <= total,
                    "holder_entitlement: already_materialized exceeds entitlement");
    return total - already_materialized;
}

// One holder's position as the plan builders need it: who they are and the
// purchase count their refunds are materialized through.
struct holder_ref {
    std::uint32_t account = 0;
    std::uint64_t synced_n = 0;
};

// Snapshot of the listing state a plan is computed from.
struct listing_view {
    price_params params;
    std::uint32_t seller = 0;
    std::span<const holder_ref> holders;  // join order
    std::uint64_t settled_n = 0;          // seller income materialized through this count
    std::uint64_t buyer_count = 0;
};

namespace detail {

class debit_table {
public:
    explicit debit_table(const price_params& p) : params_(p) {}

    cents at(std::uint64_t n) {
        auto it = cache_.find(n);
        if (it != cache_.end()) return it->second;
        cents d = materialize_debit(params_, n);
        cache_.emplace(n, d);
        return d;
    }

private:
    const price_params& params_;
    std::unordered_map<std::uint64_t, cents> cache_;
};

// Refund credits bringing every holder's materialization up to count to_n,
// plus the seller's income delta. Appends to plan; returns credited total.
inline cents append_distribution(settlement_plan& plan, const listing_view& v,
                                 std::uint64_t to_n, debit_table& debit) {
    cents credited = 0;
    cents seller_delta = materialize_income(v.params, to_n) - materialize_income(v.params, v.settled_n);
    if (seller_delta != 0) {
        plan.entries.push_back({v.seller, seller_delta});
        credited += seller_delta;
    }
    cents live = debit.at(to_n);
    for (const auto& h : v.holders) {
        if (h.synced_n >= to_n) continue;  // already current, or joined past to_n
        cents r = debit.at(h.synced_n) - live;
        if (r != 0) {
            plan.entries.push_back({h.account, r});
            credited += r;
        }
    }
    return credited;
}

}  // namespace detail

// Plan for one purchase. Immediate mode debits the new buyer, credits the
// seller and every prior holder, and lets the escrow absorb the sub-cent
// residual. Deferred mode parks the debit in escrow for a later batch settle.
inline settlement_plan plan_purchase(const listing_view& v, std::uint32_t buyer, bool deferred) {
    std::uint64_t n = v.buyer_count + 1;
    detail::debit_table debit(v.params);
    cents d = debit.at(n);

    settlement_plan plan;
    plan.entries.push_back({buyer, -d});
    if (deferred) {
        if (d != 0) plan.entries.push_back({escrow_party, d});
        return plan;
    }
    cents credited = detail::append_distribution(plan, v, n, debit);
    cents residual = d - credited;
    if (residual != 0) plan.entries.push_back({escrow_party, residual});
    return plan;
}

// Plan distributing, in one transfer, everything the deferred purchases since
// settled_n owe: seller income delta and every holder's refund accrual, all
// paid out of the escrow that collected the debits. The resulting state is
// identical, account by account, to having settled each purchase in turn.
inline settlement_plan plan_batch_settle(const listing_view& v, std::uint64_t to_n) {
    detail::require(v.settled_n <= to_n && to_n <= v.buyer_count,
                    "plan_batch_settle: interval out of range");
    settlement_plan plan;
    if (to_n == v.settled_n) return plan;  // nothing to move
    detail::debit_table debit(v.params);
    cents credited = detail::append_distribution(plan, v, to_n, debit);
    if (credited != 0) plan.entries.push_back({escrow_party, -credited});
    return plan;
}

}  // namespace cup
