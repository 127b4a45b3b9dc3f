#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cup {

enum class errc {
    precondition,        // caller violated an operation precondition
    invalid_params,      // listing parameters outside the valid domain
    invalid_rate,        // exchange rate not strictly positive
    insufficient_funds,  // would leave a person account negative
    duplicate_holder,    // buyer already holds the listing
    self_purchase,       // seller buying their own listing
    unknown_account,
    unknown_listing,
    duplicate_account,
    duplicate_listing,
    access_denied,
    no_rates_set,
    corrupt_log,         // replay failure; seq() names the offending event
    syntax_error,        // price-tag parse failure; offset() is the byte position
    precision_error,     // more fraction digits than a cent can carry
    bad_scenario,
    io_failure,
};

inline std::string_view errc_name(errc c) {
    switch (c) {
    case errc::precondition: return "Precondition";
    case errc::invalid_params: return "InvalidParams";
    case errc::invalid_rate: return "InvalidRate";
    case errc::insufficient_funds: return "InsufficientFunds";
    case errc::duplicate_holder: return "DuplicateHolder";
    case errc::self_purchase: return "SelfPurchase";
    case errc::unknown_account: return "UnknownAccount";
    case errc::unknown_listing: return "UnknownListing";
    case errc::duplicate_account: return "DuplicateAccount";
    case errc::duplicate_listing: return "DuplicateListing";
    case errc::access_denied: return "AccessDenied";
    case errc::no_rates_set: return "NoRatesSet";
    case errc::corrupt_log: return "CorruptLog";
    case errc::syntax_error: return "SyntaxError";
    case errc::precision_error: return "PrecisionError";
    case errc::bad_scenario: return "BadScenario";
    case errc::io_failure: return "IoFailure";
    }
    return "Unknown";
}

class error : public std::runtime_error {
public:
    error(errc code, std::string message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    error(errc code, std::string message, std::uint64_t seq)
        : error(code, message + " (seq " + std::to_string(seq) + ")") {
        seq_ = seq;
    }

    errc code() const noexcept { return code_; }

    // Event sequence number for corrupt_log errors, 0 otherwise.
    std::uint64_t seq() const noexcept { return seq_; }

    // Byte offset into the source text for parse errors.
    std::size_t offset() const noexcept { return offset_; }

    static error at_offset(errc code, std::string message, std::size_t offset) {
        error e(code, message + " at offset " + std::to_string(offset));
        e.offset_ = offset;
        return e;
    }

    // Which audited invariant this failure counts against (empty when it is a
    // plain input error).
    const std::string& invariant() const noexcept { return invariant_; }

    error&& against(std::string invariant) && {
        invariant_ = std::move(invariant);
        return std::move(*this);
    }

private:
    errc code_;
    std::uint64_t seq_ = 0;
    std::size_t offset_ = 0;
    std::string invariant_;
};

}  // namespace cup
