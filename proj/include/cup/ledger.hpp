#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cup/dates.hpp"
#include "cup/errors.hpp"
#include "cup/exchange.hpp"
#include "cup/pricetag.hpp"
#include "cup/pricing.hpp"
#include "cup/settlement.hpp"
#include "cup/sha256.hpp"

namespace cup {

enum class role : std::uint8_t { person, bank, authority };

inline std::string_view role_name(role r) {
    switch (r) {
    case role::person: return "person";
    case role::bank: return "bank";
    case role::authority: return "authority";
    }
    return "person";
}

inline role parse_role(std::string_view s) {
    if (s == "person") return role::person;
    if (s == "bank") return role::bank;
    if (s == "authority") return role::authority;
    throw error(errc::corrupt_log, "unknown role '" + std::string(s) + "'");
}

struct account {
    role account_role = role::person;
    cents balance = 0;
};

// One buyer's position in one listing. refunds are materialized through
// synced_n; net cost so far is gross_debit - refunds.
struct holding {
    std::uint32_t account = 0;
    std::uint64_t join_index = 0;
    std::string join_date;
    std::uint64_t join_seq = 0;
    cents gross_debit = 0;
    cents refunds = 0;
    std::uint64_t synced_n = 0;
};

struct listing {
    std::string id;
    std::uint32_t seller = 0;
    price_params params;
    std::string birth_date;
    std::vector<holding> holders;  // join order
    std::unordered_map<std::uint32_t, std::uint32_t> holder_pos;
    std::uint64_t settled_n = 0;   // seller income and refunds materialized through here
    cents escrow = 0;

    std::uint64_t buyer_count() const { return holders.size(); }
};

// ---------------------------------------------------------------------------
// Events. Plans are serialized with party names; the reserved name "~escrow"
// is the listing's own escrow account.

inline constexpr std::string_view escrow_party_name = "~escrow";

using named_plan = std::vector<std::pair<std::string, cents>>;

struct ev_account_created {
    std::string id;
    role account_role = role::person;
};

struct ev_listing_created {
    std::string id;
    std::string seller;
    price_params params;
    std::string birth_date;
};

struct ev_purchase {
    std::string listing;
    std::string buyer;
    std::uint64_t join_index = 0;
    bool deferred = false;
    named_plan plan;
};

struct ev_batch_settle {
    std::string listing;
    std::uint64_t from_n = 0;
    std::uint64_t to_n = 0;
    named_plan plan;
};

struct ev_mint {
    std::string bank;
    std::string person;
    cents fiat_cents = 0;
    cents credited_cup = 0;
};

struct ev_redeem {
    std::string bank;
    std::string person;
    cents cup_cents = 0;
    cents fiat_cents = 0;
    voucher cheque;
};

struct ev_rate_set {
    std::string authority;
    rational buy;
    rational sell;
};

// Append-only, replayable record. Replaying a log from genesis reproduces the
// ledger state bit for bit (same snapshot digest).
struct ledger_event {
    std::uint64_t seq = 0;
    std::string ts;  // ISO date, non-decreasing along the log
    std::variant<ev_account_created, ev_listing_created, ev_purchase, ev_batch_settle,
                 ev_mint, ev_redeem, ev_rate_set>
        payload;
};

// ---------------------------------------------------------------------------
// Canonical JSON codec. One event per line; object keys are lexicographically
// sorted by construction; amounts are integer cents; ratios are "num/den";
// dates are ISO-8601. The encoding is bit-exact so digests travel.

using json = nlohmann::json;

inline std::string rational_str(const rational& r) {
    return r.num().to_string() + "/" + r.den().to_string();
}

namespace detail {

inline bool valid_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

[[noreturn]] inline void bad_event(const std::string& what) {
    throw error(errc::corrupt_log, what);
}

inline const json& need(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) bad_event(std::string("missing field '") + key + "'");
    return *it;
}

inline std::string need_str(const json& j, const char* key) {
    const json& v = need(j, key);
    if (!v.is_string()) bad_event(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

inline std::string need_id(const json& j, const char* key) {
    std::string s = need_str(j, key);
    if (!valid_id(s)) bad_event(std::string("field '") + key + "' is not a valid id");
    return s;
}

inline std::string need_date(const json& j, const char* key) {
    std::string s = need_str(j, key);
    if (!valid_date(s)) bad_event(std::string("field '") + key + "' is not an ISO date");
    return s;
}

inline std::int64_t need_int(const json& j, const char* key) {
    const json& v = need(j, key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        bad_event(std::string("field '") + key + "' must be an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
        bad_event(std::string("field '") + key + "' is out of range");
    return v.get<std::int64_t>();
}

inline std::uint64_t need_u64(const json& j, const char* key) {
    std::int64_t v = need_int(j, key);
    if (v < 0) bad_event(std::string("field '") + key + "' must be non-negative");
    return static_cast<std::uint64_t>(v);
}

inline bool need_bool(const json& j, const char* key) {
    const json& v = need(j, key);
    if (!v.is_boolean()) bad_event(std::string("field '") + key + "' must be a boolean");
    return v.get<bool>();
}

inline rational need_rational(const json& j, const char* key) {
    std::string s = need_str(j, key);
    rational r;
    try {
        r = rational::from_string(s);
    } catch (const std::exception&) {
        bad_event(std::string("field '") + key + "' is not a ratio");
    }
    if (rational_str(r) != s)
        bad_event(std::string("field '") + key + "' is not in canonical num/den form");
    return r;
}

inline void expect_size(const json& j, std::size_t n) {
    if (!j.is_object() || j.size() != n) bad_event("unexpected fields in record");
}

inline json plan_to_json(const named_plan& plan) {
    json arr = json::array();
    for (const auto& [party, delta] : plan) arr.push_back(json::array({party, delta}));
    return arr;
}

inline named_plan plan_from_json(const json& j) {
    if (!j.is_array()) bad_event("plan must be an array");
    named_plan plan;
    plan.reserve(j.size());
    for (const json& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_string() ||
            !(e[1].is_number_integer() || e[1].is_number_unsigned()))
            bad_event("plan entries must be [party, delta] pairs");
        std::string party = e[0].get<std::string>();
        if (party != escrow_party_name && !valid_id(party)) bad_event("invalid plan party");
        plan.emplace_back(std::move(party), e[1].get<cents>());
    }
    return plan;
}

inline json params_to_json(const price_params& p) {
    return {{"i_inf", p.i_inf}, {"mode", std::string(rounding_name(p.mode))},
            {"p1", p.p1},       {"xi", rational_str(p.xi)}};
}

inline price_params params_from_json(const json& j, cents p1, cents i_inf) {
    std::string mode = need_str(j, "mode");
    if (mode != "ceil" && mode != "nearest") bad_event("unknown rounding mode");
    try {
        return price_params::make(p1, i_inf, need_rational(j, "xi"),
                                  mode == "ceil" ? rounding::ceil_strict : rounding::nearest);
    } catch (const error& e) {
        bad_event(e.what());
    }
}

inline voucher voucher_from_json(const json& j) {
    expect_size(j, 8);
    voucher v;
    v.id = need_id(j, "id");
    v.payee = need_id(j, "payee");
    v.fiat_cents = need_int(j, "fiat");
    v.cup_cents = need_int(j, "cup");
    v.sell_rate = need_str(j, "rate");
    v.seq = need_u64(j, "seq");
    v.prev_digest = need_str(j, "prev");
    v.digest = need_str(j, "digest");
    return v;
}

}  // namespace detail

inline std::string_view event_type_name(const ledger_event& e) {
    struct namer {
        std::string_view operator()(const ev_account_created&) { return "account_created"; }
        std::string_view operator()(const ev_listing_created&) { return "listing_created"; }
        std::string_view operator()(const ev_purchase&) { return "purchase"; }
        std::string_view operator()(const ev_batch_settle&) { return "batch_settle"; }
        std::string_view operator()(const ev_mint&) { return "mint"; }
        std::string_view operator()(const ev_redeem&) { return "redeem"; }
        std::string_view operator()(const ev_rate_set&) { return "rate_set"; }
    };
    return std::visit(namer{}, e.payload);
}

inline json event_to_json(const ledger_event& e) {
    struct encoder {
        json operator()(const ev_account_created& p) {
            return {{"id", p.id}, {"role", std::string(role_name(p.account_role))}};
        }
        json operator()(const ev_listing_created& p) {
            json j = detail::params_to_json(p.params);
            j["id"] = p.id;
            j["seller"] = p.seller;
            j["birth_date"] = p.birth_date;
            return j;
        }
        json operator()(const ev_purchase& p) {
            return {{"buyer", p.buyer},
                    {"deferred", p.deferred},
                    {"join_index", p.join_index},
                    {"listing", p.listing},
                    {"plan", detail::plan_to_json(p.plan)}};
        }
        json operator()(const ev_batch_settle& p) {
            return {{"from_n", p.from_n},
                    {"listing", p.listing},
                    {"plan", detail::plan_to_json(p.plan)},
                    {"to_n", p.to_n}};
        }
        json operator()(const ev_mint& p) {
            return {{"bank", p.bank},
                    {"credited_cup", p.credited_cup},
                    {"fiat", p.fiat_cents},
                    {"person", p.person}};
        }
        json operator()(const ev_redeem& p) {
            return {{"bank", p.bank},
                    {"cup", p.cup_cents},
                    {"fiat", p.fiat_cents},
                    {"person", p.person},
                    {"voucher", voucher_to_json(p.cheque)}};
        }
        json operator()(const ev_rate_set& p) {
            return {{"authority", p.authority},
                    {"buy", rational_str(p.buy)},
                    {"sell", rational_str(p.sell)}};
        }
    };
    return {{"payload", std::visit(encoder{}, e.payload)},
            {"seq", e.seq},
            {"ts", e.ts},
            {"type", std::string(event_type_name(e))}};
}

inline ledger_event event_from_json(const json& j) {
    using namespace detail;
    expect_size(j, 4);
    ledger_event e;
    e.seq = need_u64(j, "seq");
    e.ts = need_date(j, "ts");
    std::string type = need_str(j, "type");
    const json& p = need(j, "payload");
    if (!p.is_object()) bad_event("payload must be an object");

    if (type == "account_created") {
        expect_size(p, 2);
        e.payload = ev_account_created{need_id(p, "id"), parse_role(need_str(p, "role"))};
    } else if (type == "listing_created") {
        expect_size(p, 7);
        ev_listing_created v;
        v.id = need_id(p, "id");
        v.seller = need_id(p, "seller");
        v.birth_date = need_date(p, "birth_date");
        v.params = params_from_json(p, need_int(p, "p1"), need_int(p, "i_inf"));
        e.payload = std::move(v);
    } else if (type == "purchase") {
        expect_size(p, 5);
        ev_purchase v;
        v.buyer = need_id(p, "buyer");
        v.deferred = need_bool(p, "deferred");
        v.join_index = need_u64(p, "join_index");
        v.listing = need_id(p, "listing");
        v.plan = plan_from_json(need(p, "plan"));
        e.payload = std::move(v);
    } else if (type == "batch_settle") {
        expect_size(p, 4);
        ev_batch_settle v;
        v.listing = need_id(p, "listing");
        v.from_n = need_u64(p, "from_n");
        v.to_n = need_u64(p, "to_n");
        v.plan = plan_from_json(need(p, "plan"));
        e.payload = std::move(v);
    } else if (type == "mint") {
        expect_size(p, 4);
        e.payload = ev_mint{need_id(p, "bank"), need_id(p, "person"), need_int(p, "fiat"),
                            need_int(p, "credited_cup")};
    } else if (type == "redeem") {
        expect_size(p, 5);
        ev_redeem v;
        v.bank = need_id(p, "bank");
        v.person = need_id(p, "person");
        v.cup_cents = need_int(p, "cup");
        v.fiat_cents = need_int(p, "fiat");
        v.cheque = voucher_from_json(need(p, "voucher"));
        e.payload = std::move(v);
    } else if (type == "rate_set") {
        expect_size(p, 3);
        e.payload = ev_rate_set{need_id(p, "authority"), need_rational(p, "buy"),
                                need_rational(p, "sell")};
    } else {
        bad_event("unknown event type '" + type + "'");
    }
    return e;
}

inline std::string encode_event(const ledger_event& e) { return event_to_json(e).dump(); }

inline ledger_event decode_event(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) detail::bad_event("line is not valid JSON");
    return event_from_json(j);
}

// ---------------------------------------------------------------------------

struct history_row {
    std::string listing;
    std::uint64_t join_index = 0;
    std::string join_date;
    cents net_cost = 0;  // gross debit minus refunds materialized so far
};

struct buyer_row {
    std::string buyer;
    std::string join_date;
};

// Event-sourced system of record. All mutation flows through apply(), which
// fully re-validates each event (including recomputing its settlement plan),
// so a replayed log and a live command sequence land on the same state.
// Writers must be serialized; reads are safe on a quiescent ledger.
class ledger {
public:
    // ----- commands: build an event, apply it, hand it back for the log -----

    ledger_event create_account(const std::string& id, role r, const std::string& ts) {
        return commit(ev_account_created{id, r}, ts);
    }

    ledger_event create_listing(const std::string& seller, const std::string& id,
                                const price_params& params, const std::string& birth_date,
                                const std::string& ts) {
        return commit(ev_listing_created{id, seller, params, birth_date}, ts);
    }

    ledger_event purchase(const std::string& listing_id, const std::string& buyer,
                          const std::string& ts, bool deferred = false) {
        const listing& l = listing_ref(listing_id);
        std::uint32_t b = account_index(buyer);
        ev_purchase p{listing_id, buyer, l.buyer_count() + 1, deferred,
                      to_named(build_purchase_plan(l, b, deferred))};
        return commit(std::move(p), ts);
    }

    ledger_event settle_batch(const std::string& listing_id, const std::string& ts) {
        const listing& l = listing_ref(listing_id);
        if (l.settled_n == l.buyer_count())
            throw error(errc::precondition, "nothing to settle for listing '" + listing_id + "'");
        ev_batch_settle p{listing_id, l.settled_n, l.buyer_count(),
                          to_named(build_settle_plan(l, l.buyer_count()))};
        return commit(std::move(p), ts);
    }

    ledger_event set_rates(const std::string& authority, const rational& buy, const rational& sell,
                           const std::string& ts) {
        return commit(ev_rate_set{authority, buy, sell}, ts);
    }

    ledger_event mint(const std::string& bank, const std::string& person, cents fiat_cents,
                      const std::string& ts) {
        if (!rates_) throw error(errc::no_rates_set, "no exchange rates in force");
        auto out = mint_arithmetic(*rates_, fiat_cents);
        return commit(ev_mint{bank, person, fiat_cents, out.credited_cup}, ts);
    }

    ledger_event redeem(const std::string& bank, const std::string& person, cents cup_cents,
                        const std::string& ts) {
        if (!rates_) throw error(errc::no_rates_set, "no exchange rates in force");
        auto out = redeem_arithmetic(*rates_, cup_cents);
        ev_redeem p{bank, person, cup_cents, out.fiat_paid,
                    expected_voucher(person, cup_cents, out.fiat_paid, next_seq())};
        return commit(std::move(p), ts);
    }

    // ----- replay -----

    void apply(const ledger_event& e) {
        if (e.seq != last_seq_ + 1)
            throw error(errc::corrupt_log,
                        "sequence gap: expected " + std::to_string(last_seq_ + 1) + ", got " +
                            std::to_string(e.seq),
                        e.seq);
        if (!valid_date(e.ts))
            throw error(errc::corrupt_log, "bad timestamp '" + e.ts + "'", e.seq);
        if (!last_ts_.empty() && e.ts < last_ts_)
            throw error(errc::corrupt_log, "timestamps must be non-decreasing", e.seq);
        std::visit([&](const auto& p) { apply_payload(e, p); }, e.payload);
        last_seq_ = e.seq;
        last_ts_ = e.ts;
    }

    static ledger replay(std::span<const ledger_event> events) {
        ledger l;
        for (const auto& e : events) {
            try {
                l.apply(e);
            } catch (const error& err) {
                if (err.code() == errc::corrupt_log) throw;
                throw error(errc::corrupt_log, err.what(), e.seq)
                    .against(err.invariant().empty() ? "plan-consistency" : err.invariant());
            } catch (const std::exception& ex) {
                throw error(errc::corrupt_log, ex.what(), e.seq).against("plan-consistency");
            }
        }
        return l;
    }

    // ----- access-scoped queries -----

    cents balance_of(const std::string& account_id, const std::string& requester) const {
        // gate before resolving the target, so strangers cannot probe whether
        // an account exists
        require_access(requester, account_id, "balance");
        return accounts_[account_index(account_id)].balance;
    }

    std::vector<history_row> purchase_history(const std::string& buyer,
                                              const std::string& requester) const {
        require_access(requester, buyer, "purchase history");
        std::uint32_t b = account_index(buyer);
        std::vector<std::pair<std::uint64_t, history_row>> rows;
        for (const auto& [id, l] : listings_) {
            auto it = l.holder_pos.find(b);
            if (it == l.holder_pos.end()) continue;
            const holding& h = l.holders[it->second];
            rows.push_back({h.join_seq,
                            {id, h.join_index, h.join_date, h.gross_debit - h.refunds}});
        }
        std::sort(rows.begin(), rows.end(),
                  [](const auto& x, const auto& y) { return x.first < y.first; });
        std::vector<history_row> out;
        out.reserve(rows.size());
        for (auto& [seq, row] : rows) out.push_back(std::move(row));
        return out;
    }

    std::vector<buyer_row> buyer_list(const std::string& listing_id,
                                      const std::string& requester) const {
        const listing& l = listing_ref(listing_id);
        std::uint32_t r = account_index(requester);
        if (r != l.seller && accounts_[r].account_role != role::authority)
            throw error(errc::access_denied,
                        "only the seller or an authority may list buyers of '" + listing_id + "'");
        std::vector<buyer_row> out;
        out.reserve(l.holders.size());
        for (const auto& h : l.holders) out.push_back({account_ids_[h.account], h.join_date});
        return out;
    }

    tax_report get_tax_report(const std::string& requester) const {
        std::uint32_t r = account_index(requester);
        if (accounts_[r].account_role != role::authority)
            throw error(errc::access_denied, "tax reports are authority-only");
        tax_report t = tax_;
        t.up_to_seq = last_seq_;
        return t;
    }

    price_tag live_tag(const std::string& listing_id) const {
        const listing& l = listing_ref(listing_id);
        return make_live_tag(l.params, l.buyer_count(), l.birth_date);
    }

    // ----- audit surface -----

    std::uint64_t last_seq() const { return last_seq_; }
    const std::string& last_ts() const { return last_ts_; }
    cents supply() const { return supply_; }
    const std::optional<rate_table>& rates() const { return rates_; }
    const std::vector<voucher>& vouchers() const { return vouchers_; }

    bool has_account(const std::string& id) const { return account_idx_.count(id) != 0; }

    role account_role(const std::string& id) const {
        return accounts_[account_index(id)].account_role;
    }

    const listing* find_listing(const std::string& id) const {
        auto it = listings_.find(id);
        return it == listings_.end() ? nullptr : &it->second;
    }

    const std::string& account_name(std::uint32_t idx) const { return account_ids_[idx]; }

    // Person balances plus every listing escrow; equals supply() on a clean ledger.
    cents circulating_total() const {
        cents total = 0;
        for (const auto& a : accounts_) total += a.balance;
        for (const auto& [id, l] : listings_) total += l.escrow;
        return total;
    }

    // Full-state invariant scan; returns one message per violation.
    std::vector<std::string> scan_invariants() const {
        std::vector<std::string> bad;
        if (circulating_total() != supply_)
            bad.push_back("conservation: balances+escrows diverge from minted supply");
        for (std::size_t i = 0; i < accounts_.size(); ++i) {
            if (accounts_[i].balance < 0)
                bad.push_back("no-overdraft: account '" + account_ids_[i] + "' is negative");
            if (accounts_[i].account_role != role::person && accounts_[i].balance != 0)
                bad.push_back("exchange-neutrality: non-person account '" + account_ids_[i] +
                              "' holds cups");
        }
        for (const auto& [id, l] : listings_) scan_listing(l, bad);
        if (!verify_voucher_chain(vouchers_)) bad.push_back("voucher-chain: chain does not verify");
        return bad;
    }

    void scan_listing(const listing& l, std::vector<std::string>& bad) const {
        bool settled = l.settled_n == l.buyer_count();
        cents n = static_cast<cents>(l.buyer_count());
        if (l.params.mode == rounding::ceil_strict && l.escrow < 0)
            bad.push_back("escrow-bounds: listing '" + l.id + "' escrow is negative");
        if (settled) {
            bool in_range = l.params.mode == rounding::ceil_strict
                                ? l.escrow >= 0 && l.escrow <= n
                                : l.escrow >= -n && l.escrow <= n;
            if (!in_range)
                bad.push_back("escrow-bounds: listing '" + l.id + "' escrow outside bounds");
        }
        for (const auto& h : l.holders) {
            if (h.refunds < 0 || h.refunds > h.gross_debit) {
                bad.push_back("equal-net-cost: holder refunds out of range in '" + l.id + "'");
                continue;
            }
            // net cost must sit within one cent of the exact price at the
            // holder's sync point
            rational exact_cents = price(l.params, h.synced_n) * rational(100);
            rational net(h.gross_debit - h.refunds);
            rational drift = net - exact_cents;
            bool ok = l.params.mode == rounding::ceil_strict
                          ? drift.sign() >= 0 && drift < rational(1)
                          : drift * drift <= rational(1, 4);
            if (!ok)
                bad.push_back("equal-net-cost: holder '" + account_ids_[h.account] +
                              "' drifts a cent or more in '" + l.id + "'");
        }
    }

    json state_json() const {
        json accounts = json::object();
        for (std::size_t i = 0; i < accounts_.size(); ++i)
            accounts[account_ids_[i]] = {{"balance", accounts_[i].balance},
                                         {"role", std::string(role_name(accounts_[i].account_role))}};
        json listings = json::object();
        for (const auto& [id, l] : listings_) {
            json holders = json::object();
            for (const auto& h : l.holders)
                holders[account_ids_[h.account]] = {{"gross_debit", h.gross_debit},
                                                    {"join_date", h.join_date},
                                                    {"join_index", h.join_index},
                                                    {"refunds", h.refunds},
                                                    {"synced_n", h.synced_n}};
            listings[id] = {{"birth_date", l.birth_date},
                            {"buyer_count", l.buyer_count()},
                            {"escrow", l.escrow},
                            {"holders", std::move(holders)},
                            {"params", detail::params_to_json(l.params)},
                            {"seller", account_ids_[l.seller]},
                            {"settled_n", l.settled_n}};
        }
        json rates = nullptr;
        if (rates_)
            rates = {{"buy", rational_str(rates_->buy)},
                     {"sell", rational_str(rates_->sell)},
                     {"set_by", rates_->set_by}};
        json vouchers = json::array();
        for (const auto& v : vouchers_) vouchers.push_back(voucher_to_json(v));
        return {{"accounts", std::move(accounts)},
                {"listings", std::move(listings)},
                {"rates", std::move(rates)},
                {"supply", supply_},
                {"tax",
                 {{"mint_residue_cup", rational_str(tax_.mint_residue_cup)},
                  {"minted_cup", tax_.minted_cup},
                  {"redeem_residue_fiat", rational_str(tax_.redeem_residue_fiat)},
                  {"redeemed_cup", tax_.redeemed_cup},
                  {"spread_fiat", rational_str(tax_.spread_fiat)}}},
                {"vouchers", std::move(vouchers)}};
    }

    // SHA-256 over the canonical serialization of the sorted state. Covers
    // economic state only (balances, holdings, escrows, rates, tax, vouchers),
    // so any two logs that settle to the same money land on the same digest;
    // history integrity is the log chain's job.
    std::string digest() const { return sha256::hex(state_json().dump()); }

private:
    std::vector<std::string> account_ids_;
    std::vector<account> accounts_;
    std::unordered_map<std::string, std::uint32_t> account_idx_;
    std::map<std::string, listing> listings_;
    std::optional<rate_table> rates_;
    cents supply_ = 0;
    tax_report tax_;
    std::vector<voucher> vouchers_;
    std::uint64_t last_seq_ = 0;
    std::string last_ts_;

    std::uint64_t next_seq() const { return last_seq_ + 1; }

    template <class Payload>
    ledger_event commit(Payload&& p, const std::string& ts) {
        ledger_event e{next_seq(), ts, std::forward<Payload>(p)};
        apply(e);
        return e;
    }

    std::uint32_t account_index(const std::string& id) const {
        auto it = account_idx_.find(id);
        if (it == account_idx_.end())
            throw error(errc::unknown_account, "no account '" + id + "'");
        return it->second;
    }

    const listing& listing_ref(const std::string& id) const {
        auto it = listings_.find(id);
        if (it == listings_.end()) throw error(errc::unknown_listing, "no listing '" + id + "'");
        return it->second;
    }

    listing& listing_mut(const std::string& id) {
        auto it = listings_.find(id);
        if (it == listings_.end()) throw error(errc::unknown_listing, "no listing '" + id + "'");
        return it->second;
    }

    void require_access(const std::string& requester, const std::string& owner,
                        const char* what) const {
        std::uint32_t r = account_index(requester);
        if (requester == owner) return;
        if (accounts_[r].account_role == role::authority) return;
        throw error(errc::access_denied, std::string(what) + " of '" + owner +
                                             "' is visible only to the owner or an authority");
    }

    settlement_plan build_purchase_plan(const listing& l, std::uint32_t buyer,
                                        bool deferred) const {
        std::vector<holder_ref> refs = holder_refs(l, !deferred);
        listing_view v{l.params, l.seller, refs, l.settled_n, l.buyer_count()};
        return plan_purchase(v, buyer, deferred);
    }

    settlement_plan build_settle_plan(const listing& l, std::uint64_t to_n) const {
        std::vector<holder_ref> refs = holder_refs(l, true);
        listing_view v{l.params, l.seller, refs, l.settled_n, l.buyer_count()};
        return plan_batch_settle(v, to_n);
    }

    static std::vector<holder_ref> holder_refs(const listing& l, bool needed) {
        std::vector<holder_ref> refs;
        if (!needed) return refs;
        refs.reserve(l.holders.size());
        for (const auto& h : l.holders) refs.push_back({h.account, h.synced_n});
        return refs;
    }

    named_plan to_named(const settlement_plan& plan) const {
        named_plan out;
        out.reserve(plan.entries.size());
        for (const auto& e : plan.entries)
            out.emplace_back(e.party == escrow_party
                                 ? std::string(escrow_party_name)
                                 : account_ids_[e.party],
                             e.delta);
        return out;
    }

    // Applies a recomputed-and-matched plan to balances and the escrow.
    void apply_plan(listing& l, const settlement_plan& plan, std::uint64_t seq) {
        cents sum = plan.sum();
        if (sum != 0)
            throw error(errc::corrupt_log, "plan does not sum to zero", seq)
                .against("conservation");
        for (const auto& e : plan.entries) {
            if (e.party == escrow_party) {
                l.escrow += e.delta;
                continue;
            }
            account& a = accounts_[e.party];
            if (a.account_role != role::person)
                throw error(errc::corrupt_log, "plan touches a non-person account", seq)
                    .against("exchange-neutrality");
            a.balance += e.delta;
            if (a.balance < 0)
                throw error(errc::insufficient_funds,
                            "account '" + account_ids_[e.party] + "' would go negative")
                    .against("no-overdraft");
        }
    }

    void match_plan(const settlement_plan& computed, const named_plan& recorded,
                    std::uint64_t seq) const {
        cents recorded_sum = 0;
        for (const auto& [party, delta] : recorded) recorded_sum += delta;
        if (recorded_sum != 0)
            throw error(errc::corrupt_log, "recorded plan does not sum to zero", seq)
                .against("conservation");
        named_plan expected = to_named(computed);
        if (expected != recorded)
            throw error(errc::corrupt_log, "recorded plan differs from recomputation", seq)
                .against("plan-consistency");
    }

    voucher expected_voucher(const std::string& payee, cents cup_cents, cents fiat,
                             std::uint64_t seq) const {
        voucher v;
        v.id = "v" + std::to_string(vouchers_.size() + 1);
        v.payee = payee;
        v.fiat_cents = fiat;
        v.cup_cents = cup_cents;
        v.sell_rate = rational_str(rates_->sell);
        v.seq = seq;
        v.prev_digest = vouchers_.empty() ? std::string(voucher_chain_genesis)
                                          : vouchers_.back().digest;
        v.digest = voucher_chain_digest(v);
        return v;
    }

    // ----- per-event application -----

    void apply_payload(const ledger_event&, const ev_account_created& p) {
        if (!detail::valid_id(p.id))
            throw error(errc::invalid_params, "account id '" + p.id + "' is not a valid id");
        if (account_idx_.count(p.id))
            throw error(errc::duplicate_account, "account '" + p.id + "' already exists");
        account_idx_.emplace(p.id, static_cast<std::uint32_t>(accounts_.size()));
        account_ids_.push_back(p.id);
        accounts_.push_back({p.account_role, 0});
    }

    void apply_payload(const ledger_event&, const ev_listing_created& p) {
        if (!detail::valid_id(p.id))
            throw error(errc::invalid_params, "listing id '" + p.id + "' is not a valid id");
        if (listings_.count(p.id))
            throw error(errc::duplicate_listing, "listing '" + p.id + "' already exists");
        std::uint32_t seller = account_index(p.seller);
        if (accounts_[seller].account_role != role::person)
            throw error(errc::invalid_params, "seller must be a person");
        if (!valid_date(p.birth_date))
            throw error(errc::invalid_params, "birth date must be an ISO date");
        price_params::make(p.params.p1, p.params.i_inf, p.params.xi, p.params.mode);
        listing l;
        l.id = p.id;
        l.seller = seller;
        l.params = p.params;
        l.birth_date = p.birth_date;
        listings_.emplace(p.id, std::move(l));
    }

    void apply_payload(const ledger_event& e, const ev_purchase& p) {
        listing& l = listing_mut(p.listing);
        std::uint32_t buyer = account_index(p.buyer);
        if (accounts_[buyer].account_role != role::person)
            throw error(errc::precondition, "only persons may buy");
        if (buyer == l.seller)
            throw error(errc::self_purchase, "'" + p.buyer + "' cannot buy their own listing");
        if (l.holder_pos.count(buyer))
            throw error(errc::duplicate_holder,
                        "'" + p.buyer + "' already holds '" + p.listing + "'");
        std::uint64_t n = l.buyer_count() + 1;
        if (p.join_index != n)
            throw error(errc::corrupt_log, "join index out of order", e.seq)
                .against("plan-consistency");
        settlement_plan plan = build_purchase_plan(l, buyer, p.deferred);
        match_plan(plan, p.plan, e.seq);
        cents debit = -plan.entries.front().delta;
        if (accounts_[buyer].balance < debit)
            throw error(errc::insufficient_funds,
                        "'" + p.buyer + "' holds less than the " + std::to_string(debit) +
                            " cents this purchase debits");
        apply_plan(l, plan, e.seq);
        if (!p.deferred) sync_holders(l, n);
        l.holder_pos.emplace(buyer, static_cast<std::uint32_t>(l.holders.size()));
        holding h;
        h.account = buyer;
        h.join_index = n;
        h.join_date = e.ts;
        h.join_seq = e.seq;
        h.gross_debit = debit;
        h.synced_n = n;
        l.holders.push_back(std::move(h));
        if (!p.deferred) l.settled_n = n;
    }

    void apply_payload(const ledger_event& e, const ev_batch_settle& p) {
        listing& l = listing_mut(p.listing);
        if (p.from_n != l.settled_n)
            throw error(errc::corrupt_log, "settle does not start at the settled mark", e.seq)
                .against("plan-consistency");
        if (p.to_n <= p.from_n || p.to_n > l.buyer_count())
            throw error(errc::corrupt_log, "settle interval out of range", e.seq)
                .against("plan-consistency");
        settlement_plan plan = build_settle_plan(l, p.to_n);
        match_plan(plan, p.plan, e.seq);
        apply_plan(l, plan, e.seq);
        sync_holders(l, p.to_n);
        l.settled_n = p.to_n;
    }

    void sync_holders(listing& l, std::uint64_t to_n) {
        detail::debit_table debit(l.params);
        for (auto& h : l.holders) {
            if (h.synced_n >= to_n) continue;
            h.refunds += debit.at(h.synced_n) - debit.at(to_n);
            h.synced_n = to_n;
        }
    }

    void apply_payload(const ledger_event& e, const ev_mint& p) {
        std::uint32_t bank = account_index(p.bank);
        if (accounts_[bank].account_role != role::bank)
            throw error(errc::access_denied, "only banks mint cups");
        std::uint32_t person = account_index(p.person);
        if (accounts_[person].account_role != role::person)
            throw error(errc::unknown_account, "mint target must be a person");
        if (!rates_) throw error(errc::no_rates_set, "no exchange rates in force");
        if (p.fiat_cents <= 0) throw error(errc::precondition, "mint amount must be positive");
        auto out = mint_arithmetic(*rates_, p.fiat_cents);
        if (out.credited_cup != p.credited_cup)
            throw error(errc::corrupt_log, "recorded mint does not match the rate in force", e.seq)
                .against("plan-consistency");
        if (out.credited_cup > INT64_MAX - supply_)
            throw error(errc::precondition, "mint would overflow the cup supply");
        accounts_[person].balance += out.credited_cup;
        supply_ += out.credited_cup;
        tax_.minted_cup += out.credited_cup;
        tax_.mint_residue_cup += out.residue_cup;
    }

    void apply_payload(const ledger_event& e, const ev_redeem& p) {
        std::uint32_t bank = account_index(p.bank);
        if (accounts_[bank].account_role != role::bank)
            throw error(errc::access_denied, "only banks redeem cups");
        std::uint32_t person = account_index(p.person);
        if (accounts_[person].account_role != role::person)
            throw error(errc::unknown_account, "redeem source must be a person");
        if (!rates_) throw error(errc::no_rates_set, "no exchange rates in force");
        if (p.cup_cents <= 0) throw error(errc::precondition, "redeem amount must be positive");
        if (accounts_[person].balance < p.cup_cents)
            throw error(errc::insufficient_funds,
                        "'" + p.person + "' holds fewer than " + std::to_string(p.cup_cents) +
                            " cup-cents");
        auto out = redeem_arithmetic(*rates_, p.cup_cents);
        voucher expected = expected_voucher(p.person, p.cup_cents, out.fiat_paid, e.seq);
        if (out.fiat_paid != p.fiat_cents || !(expected == p.cheque))
            throw error(errc::corrupt_log, "recorded voucher does not match the rate in force",
                        e.seq)
                .against("voucher-chain");
        accounts_[person].balance -= p.cup_cents;
        supply_ -= p.cup_cents;
        tax_.redeemed_cup += p.cup_cents;
        tax_.spread_fiat += out.spread_fiat;
        tax_.redeem_residue_fiat += out.residue_fiat;
        vouchers_.push_back(p.cheque);
    }

    void apply_payload(const ledger_event& e, const ev_rate_set& p) {
        std::uint32_t authority = account_index(p.authority);
        if (accounts_[authority].account_role != role::authority)
            throw error(errc::access_denied, "rates are set by the authority, never by banks");
        validate_rates(p.buy, p.sell);
        rates_ = rate_table{p.buy, p.sell, p.authority, e.seq};
    }
};

// Tax totals as they stood after a given event sequence, reproducible from
// replay alone.
inline tax_report tax_report_at(std::span<const ledger_event> events, const std::string& requester,
                                std::uint64_t up_to_seq) {
    std::size_t count = 0;
    while (count < events.size() && events[count].seq <= up_to_seq) ++count;
    ledger prefix = ledger::replay(events.subspan(0, count));
    return prefix.get_tax_report(requester);
}

// ---------------------------------------------------------------------------
// Log file helpers: newline-delimited canonical JSON.

// Running hash over the canonical event lines: chain = H(prev || line). Pins
// the recorded history itself, byte for byte, complementing the state digest.
inline std::string log_chain_digest(std::span<const ledger_event> events) {
    std::string chain{voucher_chain_genesis};
    for (const auto& e : events) chain = sha256::hex(chain + encode_event(e));
    return chain;
}

inline std::vector<ledger_event> read_event_log(std::istream& in) {
    std::vector<ledger_event> events;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            events.push_back(decode_event(line));
        } catch (const error& e) {
            throw error(errc::corrupt_log,
                        "line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
    }
    return events;
}

inline void write_event_line(std::ostream& out, const ledger_event& e) {
    out << encode_event(e) << '\n';
}

}  // namespace cup
