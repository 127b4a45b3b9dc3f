#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cup/errors.hpp"
#include "cup/pricing.hpp"
#include "cup/sha256.hpp"

namespace cup {

// Exchange rates between a local fiat currency and cups. Asymmetric on
// purpose: the spread is how tax is collected. Only an authority may set
// them; banks take no commission.
struct rate_table {
    rational buy;   // cup-cents granted per fiat-cent on mint
    rational sell;  // fiat-cents paid per cup-cent on redeem
    std::string set_by;
    std::uint64_t set_seq = 0;
};

inline void validate_rates(const rational& buy, const rational& sell) {
    if (buy.sign() <= 0) throw error(errc::invalid_rate, "buy rate must be positive");
    if (sell.sign() <= 0) throw error(errc::invalid_rate, "sell rate must be positive");
}

struct mint_outcome {
    cents credited_cup = 0;    // floor(fiat * buy_rate)
    rational residue_cup;      // sub-cent remainder, recorded for the tax pool
};

inline mint_outcome mint_arithmetic(const rate_table& rates, cents fiat_cents) {
    rational exact = rational(fiat_cents) * rates.buy;
    cents credited = exact.floor().to_i64();
    return {credited, exact - rational(credited)};
}

struct redeem_outcome {
    cents fiat_paid = 0;       // floor(cup * sell_rate), the voucher amount
    rational residue_fiat;     // flooring remainder, to the tax pool
    rational spread_fiat;      // cup value at the buy reference minus exact sell value
};

inline redeem_outcome redeem_arithmetic(const rate_table& rates, cents cup_cents) {
    rational exact = rational(cup_cents) * rates.sell;
    cents paid = exact.floor().to_i64();
    rational at_buy_reference = rational(cup_cents) / rates.buy;
    return {paid, exact - rational(paid), at_buy_reference - exact};
}

// The canonical record standing in for a bank cheque on redemption. Vouchers
// chain by digest so any alteration of a past record is detectable.
struct voucher {
    std::string id;
    std::string payee;
    cents fiat_cents = 0;
    cents cup_cents = 0;
    std::string sell_rate;  // "num/den" in force at issue
    std::uint64_t seq = 0;
    std::string prev_digest;
    std::string digest;

    bool operator==(const voucher&) const = default;
};

inline constexpr std::string_view voucher_chain_genesis =
    "0000000000000000000000000000000000000000000000000000000000000000";

inline nlohmann::json voucher_body_json(const voucher& v) {
    return {{"cup", v.cup_cents}, {"fiat", v.fiat_cents}, {"id", v.id},
            {"payee", v.payee},   {"rate", v.sell_rate},  {"seq", v.seq}};
}

inline std::string voucher_chain_digest(const voucher& v) {
    return sha256::hex(v.prev_digest + voucher_body_json(v).dump());
}

inline nlohmann::json voucher_to_json(const voucher& v) {
    nlohmann::json j = voucher_body_json(v);
    j["prev"] = v.prev_digest;
    j["digest"] = v.digest;
    return j;
}

// True iff every record links to its predecessor and carries its own digest.
inline bool verify_voucher_chain(std::span<const voucher> chain) {
    std::string prev{voucher_chain_genesis};
    for (const auto& v : chain) {
        if (v.prev_digest != prev || v.digest != voucher_chain_digest(v)) return false;
        prev = v.digest;
    }
    return true;
}

// Authority-side view of everything the exchange spread has collected.
struct tax_report {
    std::uint64_t up_to_seq = 0;
    cents minted_cup = 0;
    cents redeemed_cup = 0;
    rational mint_residue_cup;    // cup-cents lost to flooring on mint
    rational spread_fiat;         // exact rate spread over all redemptions
    rational redeem_residue_fiat; // fiat-cents lost to flooring on redeem

    // Everything the fiat side owes the administration.
    rational pool_fiat() const { return spread_fiat + redeem_residue_fiat; }
};

}  // namespace cup
