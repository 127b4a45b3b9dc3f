#pragma once

#include <istream>
#include <span>
#include <string>
#include <vector>

#include "cup/ledger.hpp"

namespace cup {

struct invariant_status {
    std::string name;
    bool ok = true;
    std::uint64_t fail_seq = 0;
    std::string detail;
};

// Outcome of auditing a log: every named invariant with pass/fail and the
// first counterexample event, plus the state reached.
struct audit_report {
    std::vector<invariant_status> invariants;
    std::uint64_t events_applied = 0;
    bool ok = true;
    std::string log_chain{voucher_chain_genesis};  // hash chain over the raw lines
    ledger state;
};

inline const std::vector<std::string>& audit_invariant_names() {
    static const std::vector<std::string> names = {
        "log-well-formed",     // contiguous sequence, valid records, monotone dates
        "conservation",        // plans sum to zero; supply == balances + escrows
        "plan-consistency",    // recorded plans/amounts match recomputation
        "no-overdraft",        // person balances never negative
        "escrow-bounds",       // settled escrow within [0,n] (ceil) or [-n,n] (nearest)
        "equal-net-cost",      // every settled net cost within one cent of the exact price
        "exchange-neutrality", // banks and authorities never hold cups
        "voucher-chain",       // redemption records chain and verify
    };
    return names;
}

namespace detail {

class auditor {
public:
    auditor() {
        for (const auto& n : audit_invariant_names())
            report_.invariants.push_back({n, true, 0, {}});
    }

    void fail(const std::string& name, std::uint64_t seq, std::string detail) {
        report_.ok = false;
        for (auto& inv : report_.invariants) {
            if (inv.name != name || !inv.ok) continue;
            inv.ok = false;
            inv.fail_seq = seq;
            inv.detail = std::move(detail);
            return;
        }
    }

    // Applies one event with granular failure attribution. Returns false when
    // the log cannot be applied further.
    bool step(const ledger_event& e, std::string_view raw_line = {}) {
        report_.log_chain = sha256::hex(report_.log_chain +
                                        (raw_line.empty() ? encode_event(e) : std::string(raw_line)));
        try {
            working_.apply(e);
        } catch (const error& err) {
            fail(attribute(err), e.seq, err.what());
            return false;
        } catch (const std::exception& ex) {
            fail("log-well-formed", e.seq, ex.what());
            return false;
        }
        ++report_.events_applied;
        post_checks(e);
        return true;
    }

    void fail_decode(std::uint64_t line_no, std::string detail) {
        fail("log-well-formed", line_no, std::move(detail));
    }

    audit_report finish() {
        for (const auto& msg : working_.scan_invariants()) {
            auto colon = msg.find(':');
            fail(msg.substr(0, colon), working_.last_seq(), msg);
        }
        report_.state = std::move(working_);
        return std::move(report_);
    }

private:
    ledger working_;
    audit_report report_;
    cents expected_supply_ = 0;

    static std::string attribute(const error& err) {
        if (!err.invariant().empty()) return err.invariant();
        if (err.code() == errc::insufficient_funds) return "no-overdraft";
        if (err.code() == errc::corrupt_log) return "log-well-formed";
        return "plan-consistency";
    }

    void post_checks(const ledger_event& e) {
        if (const auto* m = std::get_if<ev_mint>(&e.payload)) expected_supply_ += m->credited_cup;
        if (const auto* r = std::get_if<ev_redeem>(&e.payload)) expected_supply_ -= r->cup_cents;
        if (working_.supply() != expected_supply_)
            fail("conservation", e.seq, "supply diverges from minted minus redeemed");

        const std::string* listing_id = nullptr;
        std::uint64_t synced_to = 0;
        if (const auto* p = std::get_if<ev_purchase>(&e.payload)) {
            listing_id = &p->listing;
            synced_to = p->deferred ? 0 : p->join_index;
        } else if (const auto* s = std::get_if<ev_batch_settle>(&e.payload)) {
            listing_id = &s->listing;
            synced_to = s->to_n;
        }
        if (!listing_id) return;
        const listing* l = working_.find_listing(*listing_id);
        if (!l) return;

        bool settled = l->settled_n == l->buyer_count();
        cents n = static_cast<cents>(l->buyer_count());
        if (l->params.mode == rounding::ceil_strict && l->escrow < 0)
            fail("escrow-bounds", e.seq, "escrow negative on '" + *listing_id + "'");
        if (settled && !(l->escrow >= -n && l->escrow <= n))
            fail("escrow-bounds", e.seq, "settled escrow outside [-n, n] on '" + *listing_id + "'");

        if (synced_to > 0) {
            // every holder synced by this event now nets materialize_debit(synced_to)
            rational exact_cents = price(l->params, synced_to) * rational(100);
            rational net(materialize_debit(l->params, synced_to));
            rational drift = net - exact_cents;
            bool within = l->params.mode == rounding::ceil_strict
                              ? drift.sign() >= 0 && drift < rational(1)
                              : drift * drift <= rational(1, 4);
            if (!within)
                fail("equal-net-cost", e.seq,
                     "net cost drifts a cent or more on '" + *listing_id + "'");
        }
    }
};

}  // namespace detail

inline audit_report audit_events(std::span<const ledger_event> events) {
    detail::auditor a;
    for (const auto& e : events)
        if (!a.step(e)) break;
    return a.finish();
}

inline audit_report audit_log(std::istream& in) {
    detail::auditor a;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ledger_event e;
        try {
            e = decode_event(line);
        } catch (const error& err) {
            a.fail_decode(line_no, err.what());
            break;
        }
        if (!a.step(e, line)) break;
    }
    return a.finish();
}

}  // namespace cup
