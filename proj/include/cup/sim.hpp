#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cup/dates.hpp"
#include "cup/errors.hpp"
#include "cup/ledger.hpp"

namespace cup {

// A deterministic purchase schedule: at each tick (days after the listing's
// birth date) a number of buyers purchase. Buyer identities derive from the
// seed, so the same scenario always produces the same log, CSV and digest.
struct schedule_item {
    std::uint64_t tick = 0;
    std::uint64_t purchases = 0;
};

struct scenario {
    price_params params;
    std::string birth_date = "2012-10-18";
    std::vector<schedule_item> schedule;
    std::uint64_t seed = 0;
    bool batch = false;  // defer purchases within a tick, settle at tick end

    void validate() const {
        price_params::make(params.p1, params.i_inf, params.xi, params.mode);
        if (!valid_date(birth_date))
            throw error(errc::bad_scenario, "birth_date must be an ISO date");
        std::uint64_t prev_tick = 0;
        bool first = true;
        for (const auto& item : schedule) {
            if (item.purchases < 1)
                throw error(errc::bad_scenario, "schedule purchase counts must be >= 1");
            if (!first && item.tick <= prev_tick)
                throw error(errc::bad_scenario, "schedule ticks must be strictly increasing");
            prev_tick = item.tick;
            first = false;
        }
    }
};

inline scenario scenario_from_json(const json& j) {
    scenario s;
    try {
        s.params = detail::params_from_json(j, detail::need_int(j, "p1"),
                                            detail::need_int(j, "i_inf"));
        if (j.contains("birth_date")) s.birth_date = detail::need_date(j, "birth_date");
        if (j.contains("seed")) s.seed = detail::need_u64(j, "seed");
        if (j.contains("batch")) s.batch = detail::need_bool(j, "batch");
        const json& sched = detail::need(j, "schedule");
        if (!sched.is_array()) throw error(errc::bad_scenario, "schedule must be an array");
        for (const json& item : sched) {
            if (!item.is_object())
                throw error(errc::bad_scenario, "schedule items must be objects");
            s.schedule.push_back(
                {detail::need_u64(item, "tick"), detail::need_u64(item, "purchases")});
        }
    } catch (const error& e) {
        if (e.code() == errc::bad_scenario) throw;
        throw error(errc::bad_scenario, e.what());
    }
    s.validate();
    return s;
}

inline json scenario_to_json(const scenario& s) {
    json sched = json::array();
    for (const auto& item : s.schedule)
        sched.push_back({{"purchases", item.purchases}, {"tick", item.tick}});
    json j = detail::params_to_json(s.params);
    j["birth_date"] = s.birth_date;
    j["schedule"] = std::move(sched);
    j["seed"] = s.seed;
    j["batch"] = s.batch;
    return j;
}

// One CSV row per purchase. The exact columns are cups as reduced ratios; the
// cent columns are the materialized series; escrow is the listing's live
// escrow after the purchase.
struct curve_row {
    std::uint64_t n = 0;
    rational income_exact;
    rational price_exact;
    cents income_cents = 0;
    cents price_cents = 0;
    cents seller_delta_cents = 0;
    cents escrow_cents = 0;
};

struct sim_result {
    std::vector<curve_row> rows;
    std::vector<ledger_event> events;
};

namespace detail {

struct splitmix64 {
    std::uint64_t state;

    explicit splitmix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::string hex_id(const char* prefix) {
        static constexpr char digits[] = "0123456789abcdef";
        std::uint64_t v = next();
        std::string out(prefix);
        for (int i = 60; i >= 0; i -= 4) out.push_back(digits[(v >> i) & 0xF]);
        return out;
    }
};

}  // namespace detail

// Standing parties of a simulation run; created on the ledger when missing.
inline constexpr const char* sim_authority = "authority";
inline constexpr const char* sim_bank = "bank";
inline constexpr const char* sim_seller = "seller";
inline constexpr const char* sim_listing = "sim";

// Runs the scenario against the given ledger (typically fresh). Buyers are
// funded by exact-amount mints at a 1/1 rate before each purchase.
inline sim_result run_scenario(const scenario& s, ledger& l) {
    s.validate();
    sim_result out;
    auto push = [&out](ledger_event e) { out.events.push_back(std::move(e)); };

    const std::string& ts0 = s.birth_date;
    if (!l.has_account(sim_authority))
        push(l.create_account(sim_authority, role::authority, ts0));
    if (!l.has_account(sim_bank)) push(l.create_account(sim_bank, role::bank, ts0));
    if (!l.has_account(sim_seller)) push(l.create_account(sim_seller, role::person, ts0));
    if (!l.rates()) push(l.set_rates(sim_authority, rational(1), rational(1), ts0));
    if (l.find_listing(sim_listing))
        throw error(errc::bad_scenario, "ledger already contains a simulation listing");
    push(l.create_listing(sim_seller, sim_listing, s.params, s.birth_date, ts0));

    detail::splitmix64 rng(s.seed);
    std::uint64_t n = 0;
    for (const auto& item : s.schedule) {
        std::string ts = date_add_days(s.birth_date, static_cast<std::int64_t>(item.tick));
        for (std::uint64_t i = 0; i < item.purchases; ++i) {
            ++n;
            std::string buyer = rng.hex_id("b");
            while (l.has_account(buyer)) buyer = rng.hex_id("b");
            push(l.create_account(buyer, role::person, ts));
            cents debit = materialize_debit(s.params, n);
            if (debit > 0) push(l.mint(sim_bank, buyer, debit, ts));
            push(l.purchase(sim_listing, buyer, ts, s.batch));
            out.rows.push_back({n, income(s.params, n), price(s.params, n),
                                materialize_income(s.params, n), debit,
                                materialize_income(s.params, n) - materialize_income(s.params, n - 1),
                                l.find_listing(sim_listing)->escrow});
        }
        if (s.batch && l.find_listing(sim_listing)->settled_n < n)
            push(l.settle_batch(sim_listing, ts));
    }
    return out;
}

inline void write_curve_csv(std::ostream& os, std::span<const curve_row> rows) {
    os << "n,income_exact,price_exact,income_cents,price_cents,seller_delta_cents,escrow_cents\n";
    for (const auto& r : rows)
        os << r.n << ',' << r.income_exact.to_string() << ',' << r.price_exact.to_string() << ','
           << r.income_cents << ',' << r.price_cents << ',' << r.seller_delta_cents << ','
           << r.escrow_cents << '\n';
}

}  // namespace cup
