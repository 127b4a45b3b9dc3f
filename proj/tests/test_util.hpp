#pragma once

#include <random>
#include <string>
#include <vector>

#include "cup/ledger.hpp"
#include "cup/pricing.hpp"

namespace cup_test {

// Random valid listing parameters across magnitudes, fraction shapes and
// both rounding modes.
inline cup::price_params random_params(std::mt19937_64& rng) {
    cup::cents p1 = static_cast<cup::cents>(rng() % 1000000 + 1);
    cup::cents i_inf = p1 + static_cast<cup::cents>(rng() % 100000000);
    std::int64_t den = static_cast<std::int64_t>(rng() % 9999 + 1);
    std::int64_t num = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(den + 1));
    auto mode = rng() % 2 ? cup::rounding::ceil_strict : cup::rounding::nearest;
    return cup::price_params::make(p1, i_inf, cup::rational(num, den), mode);
}

// The income recursion evaluated stepwise: I_1 = P1, I_n = I_{n-1} + xi*P1,
// clipped at Iinf. Independent of the closed form under test.
class income_recursion {
public:
    explicit income_recursion(const cup::price_params& p)
        : step_(p.xi * cup::rational(p.p1, 100)),
          cap_(cup::rational(p.i_inf, 100)),
          value_(cup::rational(p.p1, 100)) {}

    const cup::rational& value() const { return value_; }

    void advance() {
        value_ += step_;
        if (value_ > cap_) value_ = cap_;
    }

private:
    cup::rational step_;
    cup::rational cap_;
    cup::rational value_;
};

// Deterministic mixed-operation fixture: accounts, listings in both rounding
// modes, immediate and deferred purchases, batch settles, rate changes, mints
// and redemptions. Same seed, same log, same digest.
inline std::vector<cup::ledger_event> build_fixture(cup::ledger& l, std::size_t target_events,
                                                    std::uint64_t seed) {
    using namespace cup;
    std::mt19937_64 rng(seed);
    std::vector<ledger_event> events;
    auto push = [&](ledger_event e) { events.push_back(std::move(e)); };

    std::string date = "2012-10-18";
    std::uint64_t day = 0;
    auto ts = [&]() { return date; };

    push(l.create_account("gov", role::authority, ts()));
    push(l.create_account("bank", role::bank, ts()));
    push(l.set_rates("gov", rational(1), rational(19, 20), ts()));

    std::vector<std::string> people;
    std::uint64_t person_seq = 0;
    auto new_person = [&]() {
        std::string id = "p" + std::to_string(++person_seq);
        push(l.create_account(id, role::person, ts()));
        people.push_back(id);
        return id;
    };
    for (int i = 0; i < 4; ++i) new_person();

    struct fixture_listing {
        std::string id;
        std::string seller;
        price_params params;
    };
    std::vector<fixture_listing> listings;
    std::uint64_t listing_seq = 0;
    auto new_listing = [&]() {
        fixture_listing fl;
        fl.id = "ig" + std::to_string(++listing_seq);
        fl.seller = people[rng() % people.size()];
        cents p1 = static_cast<cents>(rng() % 5000 + 1);
        cents i_inf = p1 + static_cast<cents>(rng() % 100000);
        std::int64_t den = static_cast<std::int64_t>(rng() % 16 + 1);
        std::int64_t num = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(den + 1));
        fl.params = price_params::make(
            p1, i_inf, rational(num, den),
            rng() % 2 ? rounding::ceil_strict : rounding::nearest);
        push(l.create_listing(fl.seller, fl.id, fl.params, ts(), ts()));
        listings.push_back(fl);
    };
    for (int i = 0; i < 3; ++i) new_listing();

    auto fund = [&](const std::string& who, cents needed) {
        cents have = l.balance_of(who, "gov");
        if (have >= needed) return;
        // buy rate is 1/1 throughout the fixture
        push(l.mint("bank", who, needed - have, ts()));
    };

    while (events.size() < target_events) {
        if (target_events - events.size() < 3) {  // land exactly on target
            new_person();
            continue;
        }
        switch (rng() % 10) {
        case 0: {  // a fresh face
            new_person();
            break;
        }
        case 1: {  // a new listing now and then
            if (listings.size() < 12) new_listing();
            break;
        }
        case 2: {  // settle whatever a listing has pending
            const auto& fl = listings[rng() % listings.size()];
            const listing* li = l.find_listing(fl.id);
            if (li->settled_n < li->buyer_count()) push(l.settle_batch(fl.id, ts()));
            break;
        }
        case 3: {  // redeem part of someone's balance
            const std::string& who = people[rng() % people.size()];
            cents have = l.balance_of(who, "gov");
            if (have > 0)
                push(l.redeem("bank", who,
                              static_cast<cents>(rng() % static_cast<std::uint64_t>(have)) + 1,
                              ts()));
            break;
        }
        case 4: {  // time passes
            day += rng() % 3 + 1;
            date = date_add_days("2012-10-18", static_cast<std::int64_t>(day));
            break;
        }
        default: {  // purchases carry the load
            const auto& fl = listings[rng() % listings.size()];
            std::string buyer;
            for (int tries = 0; tries < 4; ++tries) {
                const std::string& cand = people[rng() % people.size()];
                const listing* li = l.find_listing(fl.id);
                bool holds = false;
                for (const auto& h : li->holders)
                    if (l.account_name(h.account) == cand) holds = true;
                if (!holds && cand != fl.seller) {
                    buyer = cand;
                    break;
                }
            }
            if (buyer.empty()) buyer = new_person();
            cents debit = materialize_debit(fl.params, l.find_listing(fl.id)->buyer_count() + 1);
            fund(buyer, debit);
            push(l.purchase(fl.id, buyer, ts(), rng() % 3 == 0));
            break;
        }
        }
    }
    return events;
}

}  // namespace cup_test
