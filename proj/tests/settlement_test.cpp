#include <doctest.h>

#include <map>
#include <random>

#include "cup/settlement.hpp"
#include "test_util.hpp"

using namespace cup;

namespace {

price_params ten_hundred(rational xi, rounding mode = rounding::ceil_strict) {
    return price_params::make(1000, 10000, xi, mode);
}

// Brute-force sequential materialization: applies the per-purchase plans one
// by one and tracks every account in plain integers. The oracle the lazy and
// batched paths are checked against.
struct naive_run {
    price_params params;
    std::uint32_t seller = 0;
    std::vector<holder_ref> holders;
    std::map<std::uint32_t, cents> balance;  // net position per account
    cents escrow = 0;
    std::uint64_t settled = 0;

    explicit naive_run(const price_params& p) : params(p) {}

    void buy(std::uint32_t buyer) {
        listing_view v{params, seller, holders, settled, holders.size()};
        settlement_plan plan = plan_purchase(v, buyer, false);
        REQUIRE(plan.sum() == 0);
        for (const auto& e : plan.entries) {
            if (e.party == escrow_party)
                escrow += e.delta;
            else
                balance[e.party] += e.delta;
        }
        std::uint64_t n = holders.size() + 1;
        for (auto& h : holders) h.synced_n = n;
        holders.push_back({buyer, n});
        settled = n;
    }
};

}  // namespace

TEST_CASE("materialize_debit: ceiling, exact, and the free tail") {
    CHECK(materialize_debit(ten_hundred(rational(1, 2)), 3) == 667);  // ceil of 666.67
    CHECK(materialize_debit(ten_hundred(rational(1, 2)), 1) == 1000);
    CHECK(materialize_debit(ten_hundred(rational(1, 2), rounding::nearest), 1) == 1000);
    // price 0.25 cents rounds to zero under nearest: late buyers acquire free
    CHECK(materialize_debit(ten_hundred(rational(0), rounding::nearest), 4000) == 0);
    // under ceil a one-cent floor persists
    CHECK(materialize_debit(ten_hundred(rational(0)), 4000) == 1);
}

TEST_CASE("materialize_debit is non-increasing") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        price_params p = cup_test::random_params(rng);
        cents prev = materialize_debit(p, 1);
        CHECK(prev == p.p1);  // P1 is exact in cents
        for (std::uint64_t n = 2; n <= 300; ++n) {
            cents d = materialize_debit(p, n);
            CHECK(d <= prev);
            CHECK(d >= 0);
            if (p.mode == rounding::ceil_strict) CHECK(d >= 1);
            prev = d;
        }
    }
}

TEST_CASE("holder entitlement from closed forms") {
    auto p = ten_hundred(rational(1, 2));
    CHECK(holder_entitlement(p, 1, 3, 0) == 333);
    CHECK(holder_entitlement(p, 1, 3, 250) == 83);
    CHECK(holder_entitlement(p, 5, 5, 0) == 0);
    CHECK(holder_entitlement(ten_hundred(rational(1)), 1, 10, 0) == 0);  // xi=1: nothing pre-cap
    CHECK_THROWS_AS(holder_entitlement(p, 3, 1, 0), error);
    CHECK_THROWS_AS(holder_entitlement(p, 1, 3, 999), error);
}

TEST_CASE("first purchase plan is exact and leaves no dust") {
    auto p = ten_hundred(rational(1, 2));
    std::vector<holder_ref> none;
    listing_view v{p, 0, none, 0, 0};
    settlement_plan plan = plan_purchase(v, 7, false);
    REQUIRE(plan.entries.size() == 2);
    CHECK(plan.entries[0] == plan_entry{7, -1000});
    CHECK(plan.entries[1] == plan_entry{0, 1000});
}

TEST_CASE("third purchase plan matches the hand trace") {
    // seller=0, buyers 1,2 already hold; buyer 3 arrives.
    auto p = ten_hundred(rational(1, 2));
    std::vector<holder_ref> holders{{1, 2}, {2, 2}};
    listing_view v{p, 0, holders, 2, 2};
    settlement_plan plan = plan_purchase(v, 3, false);
    REQUIRE(plan.entries.size() == 5);
    CHECK(plan.entries[0] == plan_entry{3, -667});
    CHECK(plan.entries[1] == plan_entry{0, 500});
    CHECK(plan.entries[2] == plan_entry{1, 83});
    CHECK(plan.entries[3] == plan_entry{2, 83});
    CHECK(plan.entries[4] == plan_entry{escrow_party, 1});
    CHECK(plan.sum() == 0);
}

TEST_CASE("three sequential purchases: nets, seller total, escrow") {
    naive_run run(ten_hundred(rational(1, 2)));
    run.buy(1);
    run.buy(2);
    run.buy(3);
    // all three buyers net the current price's ceiling
    CHECK(run.balance[1] == -667);
    CHECK(run.balance[2] == -667);
    CHECK(run.balance[3] == -667);
    CHECK(run.balance[0] == 2000);  // floor(cents(I3))
    CHECK(run.escrow == 1);
    // buyers paid 2001 against the seller's 2000: the cent sits in escrow
}

TEST_CASE("deferred purchases then one batch settle equals sequential") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 30; ++trial) {
        price_params p = cup_test::random_params(rng);
        std::uint64_t total = rng() % 120 + 2;

        naive_run sequential(p);
        for (std::uint64_t b = 1; b <= total; ++b) sequential.buy(100 + b);

        // deferred: escrow pools the debits, one plan distributes everything
        std::map<std::uint32_t, cents> balance;
        cents escrow = 0;
        std::vector<holder_ref> holders;
        for (std::uint64_t b = 1; b <= total; ++b) {
            listing_view v{p, 0, holders, 0, holders.size()};
            settlement_plan plan = plan_purchase(v, 100 + b, true);
            for (const auto& e : plan.entries)
                e.party == escrow_party ? escrow += e.delta : balance[e.party] += e.delta;
            holders.push_back({static_cast<std::uint32_t>(100 + b), b});
        }
        listing_view v{p, 0, holders, 0, holders.size()};
        settlement_plan settle = plan_batch_settle(v, total);
        CHECK(settle.sum() == 0);
        for (const auto& e : settle.entries)
            e.party == escrow_party ? escrow += e.delta : balance[e.party] += e.delta;

        CHECK(balance == sequential.balance);
        CHECK(escrow == sequential.escrow);
    }
}

TEST_CASE("settle in two random chunks equals one chunk") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        price_params p = cup_test::random_params(rng);
        std::uint64_t total = rng() % 100 + 3;
        std::uint64_t cut = rng() % (total - 1) + 1;

        naive_run sequential(p);
        for (std::uint64_t b = 1; b <= total; ++b) sequential.buy(100 + b);

        std::map<std::uint32_t, cents> balance;
        cents escrow = 0;
        std::vector<holder_ref> holders;
        std::uint64_t settled = 0;
        auto run_settle = [&](std::uint64_t to) {
            listing_view v{p, 0, holders, settled, holders.size()};
            settlement_plan plan = plan_batch_settle(v, to);
            CHECK(plan.sum() == 0);
            for (const auto& e : plan.entries)
                e.party == escrow_party ? escrow += e.delta : balance[e.party] += e.delta;
            for (auto& h : holders)
                if (h.synced_n < to) h.synced_n = to;
            settled = to;
        };
        for (std::uint64_t b = 1; b <= total; ++b) {
            listing_view v{p, 0, holders, settled, holders.size()};
            settlement_plan plan = plan_purchase(v, 100 + b, true);
            for (const auto& e : plan.entries)
                e.party == escrow_party ? escrow += e.delta : balance[e.party] += e.delta;
            holders.push_back({static_cast<std::uint32_t>(100 + b), b});
            if (b == cut) run_settle(cut);
        }
        run_settle(total);

        CHECK(balance == sequential.balance);
        CHECK(escrow == sequential.escrow);
    }
}

TEST_CASE("materialization drift bounds hold along full runs") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 25; ++trial) {
        price_params p = cup_test::random_params(rng);
        naive_run run(p);
        for (std::uint64_t b = 1; b <= 150; ++b) {
            run.buy(10 + b);
            std::uint64_t n = b;
            rational exact_price_cents = price(p, n) * rational(100);
            rational exact_income_cents = income(p, n) * rational(100);
            // every holder nets the same materialized amount
            cents net = -run.balance[10 + 1];
            for (std::uint64_t j = 1; j <= n; ++j) CHECK(-run.balance[10 + j] == net);
            rational drift = rational(net) - exact_price_cents;
            if (p.mode == rounding::ceil_strict) {
                CHECK(drift.sign() >= 0);
                CHECK(drift < rational(1));
                CHECK(run.escrow >= 0);
                CHECK(run.escrow <= static_cast<cents>(n));
            } else {
                CHECK(drift * drift <= rational(1, 4));
                CHECK(run.escrow >= -static_cast<cents>(n));
                CHECK(run.escrow <= static_cast<cents>(n));
            }
            // seller trails the exact series by under a cent
            rational seller_gap = exact_income_cents - rational(run.balance[0]);
            CHECK(seller_gap.sign() >= 0);
            CHECK(seller_gap < rational(1));
        }
    }
}

TEST_CASE("lazy entitlement equals the brute-force per-purchase sum") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 20; ++trial) {
        price_params p = cup_test::random_params(rng);
        std::uint64_t join = rng() % 40 + 1;
        std::uint64_t current = join + rng() % 160;
        cents brute = 0;
        for (std::uint64_t m = join + 1; m <= current; ++m)
            brute += materialize_debit(p, m - 1) - materialize_debit(p, m);
        CHECK(holder_entitlement(p, join, current, 0) == brute);
        // refunds accrue monotonically
        CHECK(brute >= 0);
    }
}

TEST_CASE("settle to the current mark is an empty plan") {
    auto p = ten_hundred(rational(1, 2));
    std::vector<holder_ref> holders{{1, 1}};
    listing_view v{p, 0, holders, 1, 1};
    CHECK(plan_batch_settle(v, 1).entries.empty());
    CHECK_THROWS_AS(plan_batch_settle(v, 2), error);  // beyond the buyer count
}
