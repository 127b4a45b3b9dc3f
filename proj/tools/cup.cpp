// Command-line surface over the cup ledger: operate a log file, run scenario
// simulations, export price/income curves, and audit invariants.
//
// Exit codes: 0 success, 1 domain or invariant failure, 2 environment/IO.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cup/ledger.hpp"
#include "cup/pricetag.hpp"
#include "cup/sim.hpp"
#include "cup/verify.hpp"

namespace {

using namespace cup;

// Advisory lock held for the lifetime of a command touching one ledger file.
class ledger_lock {
public:
    explicit ledger_lock(const std::string& path) {
        fd_ = ::open(path.c_str(), O_RDONLY);
        if (fd_ >= 0) ::flock(fd_, LOCK_EX);
    }
    ~ledger_lock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    ledger_lock(const ledger_lock&) = delete;
    ledger_lock& operator=(const ledger_lock&) = delete;

private:
    int fd_ = -1;
};

struct open_ledger {
    ledger state;
    std::vector<ledger_event> events;
    std::string path;
    ledger_lock lock;

    open_ledger(const std::string& p) : path(p), lock(p) {
        std::ifstream in(path);
        if (!in) throw error(errc::io_failure, "cannot open ledger '" + path + "'");
        events = read_event_log(in);
        state = ledger::replay(events);
    }

    std::string default_date() const {
        return state.last_ts().empty() ? "2012-10-18" : state.last_ts();
    }

    void append(const ledger_event& e) {
        std::ofstream out(path, std::ios::app);
        if (!out) throw error(errc::io_failure, "cannot append to '" + path + "'");
        write_event_line(out, e);
        if (!out) throw error(errc::io_failure, "write to '" + path + "' failed");
    }
};

bool g_human = false;

void emit(const json& machine, const std::string& human) {
    if (g_human)
        std::cout << human << "\n";
    else
        std::cout << machine.dump() << "\n";
}

role parse_role_flag(const std::string& s) {
    try {
        return parse_role(s);
    } catch (const error&) {
        throw error(errc::precondition, "role must be person, bank or authority");
    }
}

rounding parse_mode_flag(const std::string& s) {
    if (s == "ceil") return rounding::ceil_strict;
    if (s == "nearest") return rounding::nearest;
    throw error(errc::precondition, "mode must be ceil or nearest");
}

rational parse_ratio_flag(const std::string& s) {
    try {
        return rational::from_string(s);
    } catch (const std::exception&) {
        throw error(errc::precondition, "ratio must look like 19/20");
    }
}

int cmd_verify(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error(errc::io_failure, "cannot open ledger '" + path + "'");
    ledger_lock lock(path);
    audit_report report = audit_log(in);
    for (const auto& inv : report.invariants) {
        if (g_human) {
            if (inv.ok)
                std::cout << "PASS " << inv.name << "\n";
            else
                std::cout << "FAIL " << inv.name << " at seq " << inv.fail_seq << ": "
                          << inv.detail << "\n";
        } else {
            json j{{"invariant", inv.name}, {"ok", inv.ok}};
            if (!inv.ok) {
                j["seq"] = inv.fail_seq;
                j["detail"] = inv.detail;
            }
            std::cout << j.dump() << "\n";
        }
    }
    emit(json{{"digest", report.state.digest()},
              {"events", report.events_applied},
              {"log_chain", report.log_chain},
              {"ok", report.ok}},
         std::string(report.ok ? "OK" : "CORRUPT") + " after " +
             std::to_string(report.events_applied) + " events, state " +
             report.state.digest().substr(0, 16) + "...");
    return report.ok ? 0 : 1;
}

std::string tabulate(const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ostringstream os;
    for (const auto& [k, v] : kv) os << k << ": " << v << "\n";
    std::string s = os.str();
    if (!s.empty()) s.pop_back();
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cup: bounded-income settlement ledger for intangible goods"};
    app.require_subcommand(1);

    std::string ledger_path, date, id, seller, buyer, listing_id, account_id, as_id, bank, person,
        authority, p1_text, iinf_text, xi_text = "1/2", mode_text = "ceil", birth, scenario_path,
        out_path;
    cents fiat = 0, cup_amount = 0;
    bool defer = false;

    auto* init = app.add_subcommand("init", "create an empty ledger file");
    init->add_option("--ledger", ledger_path)->required();

    auto* account = app.add_subcommand("account", "register an account");
    account->add_option("--ledger", ledger_path)->required();
    account->add_option("--id", id)->required();
    std::string role_text = "person";
    account->add_option("--role", role_text, "person|bank|authority");
    account->add_option("--date", date);

    auto* list_ig = app.add_subcommand("list-ig", "put an intangible good up for sale");
    list_ig->add_option("--ledger", ledger_path)->required();
    list_ig->add_option("--id", id)->required();
    list_ig->add_option("--seller", seller)->required();
    list_ig->add_option("--p1", p1_text, "first-buyer price in cups, e.g. 10 or 15.7")->required();
    list_ig->add_option("--i-inf", iinf_text, "lifetime income cap in cups")->required();
    list_ig->add_option("--xi", xi_text, "equilibrium coefficient as num/den");
    list_ig->add_option("--mode", mode_text, "rounding: ceil|nearest");
    list_ig->add_option("--birth", birth, "listing birth date (defaults to --date)");
    list_ig->add_option("--date", date);

    auto* buy = app.add_subcommand("buy", "purchase a listing");
    buy->add_option("--ledger", ledger_path)->required();
    buy->add_option("--listing", listing_id)->required();
    buy->add_option("--buyer", buyer)->required();
    buy->add_flag("--defer", defer, "park the debit in escrow for a later settle-batch");
    buy->add_option("--date", date);

    auto* settle = app.add_subcommand("settle-batch", "distribute everything pending on a listing");
    settle->add_option("--ledger", ledger_path)->required();
    settle->add_option("--listing", listing_id)->required();
    settle->add_option("--date", date);

    auto* balance = app.add_subcommand("balance", "query an account balance");
    balance->add_option("--ledger", ledger_path)->required();
    balance->add_option("--account", account_id)->required();
    balance->add_option("--as", as_id, "requesting identity (defaults to the owner)");

    auto* history = app.add_subcommand("history", "query a buyer's purchase history");
    history->add_option("--ledger", ledger_path)->required();
    history->add_option("--buyer", buyer)->required();
    history->add_option("--as", as_id)->required(false);

    auto* mint_cmd = app.add_subcommand("mint", "bank mints cups against fiat");
    mint_cmd->add_option("--ledger", ledger_path)->required();
    mint_cmd->add_option("--bank", bank)->required();
    mint_cmd->add_option("--person", person)->required();
    mint_cmd->add_option("--fiat", fiat, "fiat cents to convert")->required();
    mint_cmd->add_option("--date", date);

    auto* redeem_cmd = app.add_subcommand("redeem", "bank redeems cups for a fiat voucher");
    redeem_cmd->add_option("--ledger", ledger_path)->required();
    redeem_cmd->add_option("--bank", bank)->required();
    redeem_cmd->add_option("--person", person)->required();
    redeem_cmd->add_option("--cup", cup_amount, "cup cents to redeem")->required();
    redeem_cmd->add_option("--out", out_path, "append the voucher record to this file");
    redeem_cmd->add_option("--date", date);

    auto* rates = app.add_subcommand("set-rates", "authority sets the exchange rates");
    rates->add_option("--ledger", ledger_path)->required();
    rates->add_option("--authority", authority)->required();
    std::string buy_rate_text, sell_rate_text;
    rates->add_option("--buy", buy_rate_text, "cup-cents per fiat-cent, num/den")->required();
    rates->add_option("--sell", sell_rate_text, "fiat-cents per cup-cent, num/den")->required();
    rates->add_option("--date", date);

    auto* tag = app.add_subcommand("tag", "print a listing's live price tag");
    tag->add_option("--ledger", ledger_path)->required();
    tag->add_option("--listing", listing_id)->required();

    auto* simulate = app.add_subcommand("simulate", "run a purchase scenario, export the curves");
    simulate->add_option("--scenario", scenario_path)->required();
    simulate->add_option("--out", out_path, "CSV output path")->required();
    simulate->add_option("--ledger", ledger_path, "run against this ledger and persist the events");
    std::string mode_override;
    simulate->add_option("--mode", mode_override, "override the scenario's rounding mode");
    std::optional<std::uint64_t> seed_override;
    simulate->add_option("--seed", seed_override, "override the scenario's seed");

    auto* verify = app.add_subcommand("verify", "replay a ledger and audit every invariant");
    verify->add_option("--ledger", ledger_path)->required();

    app.add_flag("--human", g_human, "tabular output instead of JSON lines");
    for (auto* sub : app.get_subcommands({})) sub->add_flag("--human", g_human);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(init)) {
            if (std::ifstream(ledger_path))
                throw error(errc::io_failure, "'" + ledger_path + "' already exists");
            std::ofstream out(ledger_path);
            if (!out) throw error(errc::io_failure, "cannot create '" + ledger_path + "'");
            emit(json{{"ledger", ledger_path}, {"ok", true}}, "created " + ledger_path);
            return 0;
        }
        if (app.got_subcommand(verify)) return cmd_verify(ledger_path);

        if (app.got_subcommand(simulate)) {
            std::ifstream in(scenario_path);
            if (!in) throw error(errc::io_failure, "cannot open scenario '" + scenario_path + "'");
            json sj = json::parse(in, nullptr, false);
            if (sj.is_discarded()) throw error(errc::bad_scenario, "scenario is not valid JSON");
            scenario s = scenario_from_json(sj);
            if (!mode_override.empty()) s.params.mode = parse_mode_flag(mode_override);
            if (seed_override) s.seed = *seed_override;

            sim_result result;
            std::string digest;
            if (!ledger_path.empty()) {
                open_ledger led(ledger_path);
                result = run_scenario(s, led.state);
                for (const auto& e : result.events) led.append(e);
                digest = led.state.digest();
            } else {
                ledger fresh;
                result = run_scenario(s, fresh);
                digest = fresh.digest();
            }
            std::ofstream out(out_path);
            if (!out) throw error(errc::io_failure, "cannot write '" + out_path + "'");
            write_curve_csv(out, result.rows);
            if (!out) throw error(errc::io_failure, "write to '" + out_path + "' failed");
            emit(json{{"csv", out_path},
                      {"digest", digest},
                      {"events", result.events.size()},
                      {"rows", result.rows.size()}},
                 "wrote " + std::to_string(result.rows.size()) + " rows to " + out_path +
                     "\nfinal digest " + digest);
            return 0;
        }

        open_ledger led(ledger_path);
        if (date.empty()) date = led.default_date();

        if (app.got_subcommand(account)) {
            led.append(led.state.create_account(id, parse_role_flag(role_text), date));
            emit(json{{"account", id}, {"role", role_text}}, "registered " + id);
        } else if (app.got_subcommand(list_ig)) {
            price_params params = price_params::make(parse_cup_amount(p1_text),
                                                     parse_cup_amount(iinf_text),
                                                     parse_ratio_flag(xi_text),
                                                     parse_mode_flag(mode_text));
            if (birth.empty()) birth = date;
            led.append(led.state.create_listing(seller, id, params, birth, date));
            emit(json{{"listing", id}, {"tag", format_tag(led.state.live_tag(id))}},
                 "listed " + id + " at " + format_tag(led.state.live_tag(id)));
        } else if (app.got_subcommand(buy)) {
            ledger_event e = led.state.purchase(listing_id, buyer, date, defer);
            led.append(e);
            const auto& p = std::get<ev_purchase>(e.payload);
            emit(event_to_json(e), buyer + " is buyer #" + std::to_string(p.join_index) + " of " +
                                       listing_id + (defer ? " (deferred)" : ""));
        } else if (app.got_subcommand(settle)) {
            ledger_event e = led.state.settle_batch(listing_id, date);
            led.append(e);
            const auto& p = std::get<ev_batch_settle>(e.payload);
            emit(event_to_json(e), "settled " + listing_id + " from " + std::to_string(p.from_n) +
                                       " to " + std::to_string(p.to_n));
        } else if (app.got_subcommand(balance)) {
            if (as_id.empty()) as_id = account_id;
            cents b = led.state.balance_of(account_id, as_id);
            emit(json{{"account", account_id}, {"balance", b}},
                 account_id + ": " + std::to_string(b) + " cents (" + format_cup_amount(b) +
                     " cups)");
        } else if (app.got_subcommand(history)) {
            if (as_id.empty()) as_id = buyer;
            for (const auto& row : led.state.purchase_history(buyer, as_id))
                emit(json{{"join_date", row.join_date},
                          {"join_index", row.join_index},
                          {"listing", row.listing},
                          {"net_cost", row.net_cost}},
                     tabulate({{"listing", row.listing},
                               {"join_index", std::to_string(row.join_index)},
                               {"join_date", row.join_date},
                               {"net_cost", std::to_string(row.net_cost) + " cents"}}));
        } else if (app.got_subcommand(mint_cmd)) {
            ledger_event e = led.state.mint(bank, person, fiat, date);
            led.append(e);
            emit(event_to_json(e),
                 "minted " + std::to_string(std::get<ev_mint>(e.payload).credited_cup) +
                     " cup-cents to " + person);
        } else if (app.got_subcommand(redeem_cmd)) {
            ledger_event e = led.state.redeem(bank, person, cup_amount, date);
            led.append(e);
            const voucher& v = std::get<ev_redeem>(e.payload).cheque;
            if (!out_path.empty()) {
                std::ofstream vout(out_path, std::ios::app);
                if (!vout) throw error(errc::io_failure, "cannot write '" + out_path + "'");
                vout << voucher_to_json(v).dump() << "\n";
            }
            emit(voucher_to_json(v), "voucher " + v.id + ": " + std::to_string(v.fiat_cents) +
                                         " fiat-cents to " + v.payee);
        } else if (app.got_subcommand(rates)) {
            ledger_event e = led.state.set_rates(authority, parse_ratio_flag(buy_rate_text),
                                                 parse_ratio_flag(sell_rate_text), date);
            led.append(e);
            emit(event_to_json(e), "rates set: buy " + buy_rate_text + ", sell " + sell_rate_text);
        } else if (app.got_subcommand(tag)) {
            std::cout << format_tag(led.state.live_tag(listing_id)) << "\n";
        }
        return 0;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == errc::io_failure ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
