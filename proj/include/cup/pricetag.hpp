#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "cup/dates.hpp"
#include "cup/errors.hpp"
#include "cup/pricing.hpp"
#include "cup/settlement.hpp"

namespace cup {

// ASCII form of the two-number price notation:
//
//   PRICE "cup" [ "^" IINF ] [ "@" DATE ] [ "#" COUNT ]
//
// e.g. "1.2cup^18000@2012-10-18#345". PRICE and IINF are decimal cups with at
// most two fraction digits (prices below a cent are unrepresentable). A zero
// buyer count means "no buyers yet" and is elided when formatting, so it
// normalizes to an absent count.
struct price_tag {
    cents current_price = 0;
    std::optional<cents> i_inf;
    std::optional<std::string> birth_date;
    std::optional<std::uint64_t> buyer_count;

    bool operator==(const price_tag&) const = default;
};

enum class tag_verbosity { full, no_count, short_form };

// "1.2" for 120 cents; trailing zeros trimmed, never "1.20".
inline std::string format_cup_amount(cents c) {
    std::string out = std::to_string(c / 100);
    cents frac = c % 100;
    if (frac == 0) return out;
    out.push_back('.');
    out.push_back(static_cast<char>('0' + frac / 10));
    if (frac % 10 != 0) out.push_back(static_cast<char>('0' + frac % 10));
    return out;
}

namespace detail {

class tag_scanner {
public:
    explicit tag_scanner(std::string_view text) : text_(text) {}

    bool done() const { return pos_ >= text_.size(); }
    std::size_t pos() const { return pos_; }

    bool eat(char c) {
        if (done() || text_[pos_] != c) return false;
        ++pos_;
        return true;
    }

    void expect_keyword(std::string_view kw) {
        if (text_.substr(pos_).substr(0, kw.size()) != kw)
            throw error::at_offset(errc::syntax_error, "expected 'cup'", pos_);
        pos_ += kw.size();
    }

    cents cup_amount() {
        std::size_t start = pos_;
        std::uint64_t whole = 0;
        bool any = false;
        while (!done() && is_digit(text_[pos_])) {
            any = true;
            whole = whole * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
            if (whole > max_cup_whole)
                throw error::at_offset(errc::syntax_error, "amount too large", start);
            ++pos_;
        }
        if (!any) throw error::at_offset(errc::syntax_error, "expected a cup amount", pos_);
        std::uint64_t frac = 0;
        if (eat('.')) {
            std::size_t digits = 0;
            while (!done() && is_digit(text_[pos_])) {
                if (digits == 2)
                    throw error::at_offset(errc::precision_error,
                                           "cup amounts carry at most two fraction digits", pos_);
                frac = frac * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
                ++digits;
                ++pos_;
            }
            if (digits == 0)
                throw error::at_offset(errc::syntax_error, "expected fraction digits after '.'", pos_);
            if (digits == 1) frac *= 10;
        }
        return static_cast<cents>(whole * 100 + frac);
    }

    std::uint64_t count() {
        std::size_t start = pos_;
        std::uint64_t v = 0;
        bool any = false;
        while (!done() && is_digit(text_[pos_])) {
            any = true;
            if (v > (UINT64_MAX - 9) / 10)
                throw error::at_offset(errc::syntax_error, "count too large", start);
            v = v * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
            ++pos_;
        }
        if (!any) throw error::at_offset(errc::syntax_error, "expected a buyer count", pos_);
        return v;
    }

    std::string date() {
        if (text_.size() - pos_ < 10 || !valid_date(text_.substr(pos_, 10)))
            throw error::at_offset(errc::syntax_error, "expected an ISO date (YYYY-MM-DD)", pos_);
        std::string d(text_.substr(pos_, 10));
        pos_ += 10;
        return d;
    }

private:
    static constexpr std::uint64_t max_cup_whole = (INT64_MAX - 99) / 100;
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace detail

// A bare decimal cup amount, e.g. "10" or "6.67", to cents.
inline cents parse_cup_amount(std::string_view text) {
    detail::tag_scanner in(text);
    cents c = in.cup_amount();
    if (!in.done())
        throw error::at_offset(errc::syntax_error, "unexpected trailing input", in.pos());
    return c;
}

inline price_tag parse_tag(std::string_view text) {
    detail::tag_scanner in(text);
    price_tag tag;
    tag.current_price = in.cup_amount();
    in.expect_keyword("cup");
    if (in.eat('^')) tag.i_inf = in.cup_amount();
    if (in.eat('@')) tag.birth_date = in.date();
    if (in.eat('#')) {
        std::uint64_t n = in.count();
        if (n > 0) tag.buyer_count = n;  // zero means "no buyers yet"
    }
    if (!in.done())
        throw error::at_offset(errc::syntax_error, "unexpected trailing input", in.pos());
    return tag;
}

inline std::string format_tag(const price_tag& tag, tag_verbosity v = tag_verbosity::full) {
    std::string out = format_cup_amount(tag.current_price) + "cup";
    if (v == tag_verbosity::short_form) return out;
    if (tag.i_inf) out += "^" + format_cup_amount(*tag.i_inf);
    if (tag.birth_date) out += "@" + *tag.birth_date;
    if (v == tag_verbosity::full && tag.buyer_count && *tag.buyer_count > 0)
        out += "#" + std::to_string(*tag.buyer_count);
    return out;
}

// The tag a listing displays right now: the price the next buyer would pay.
inline price_tag make_live_tag(const price_params& params, std::uint64_t buyer_count,
                               std::string birth_date) {
    price_tag tag;
    tag.current_price = materialize_debit(params, buyer_count + 1);
    tag.i_inf = params.i_inf;
    tag.birth_date = std::move(birth_date);
    if (buyer_count > 0) tag.buyer_count = buyer_count;
    return tag;
}

}  // namespace cup
