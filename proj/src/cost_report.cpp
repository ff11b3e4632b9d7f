#include "trating/cost_report.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

namespace trating::cost {

using ledger::Function;
using nlohmann::json;

namespace {

constexpr Function kCostFunctions[] = {Function::SetRate, Function::GetRate, Function::GiveRightToRate,
                                       Function::CreateProduct};

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(sep, pos);
        std::string cell(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(std::move(cell));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

std::uint64_t parse_count(const std::string& s) {
    if (s.empty() || s.size() > 19 || s.find_first_not_of("0123456789") != std::string::npos) {
        bad("count '" + s + "' must be a non-negative integer");
    }
    return std::stoull(s);
}

double parse_price(const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        bad("ether price '" + s + "' is not a number");
    }
    if (used != s.size()) bad("ether price '" + s + "' is not a number");
    return v;
}

}  // namespace

double wei_to_ether(Wei wei) {
    const Wei unit = Wei{1000000000000000000ULL};
    return static_cast<double>(static_cast<long double>(wei / unit) +
                               static_cast<long double>(wei % unit) / static_cast<long double>(unit));
}

void CostReportInput::validate() const {
    const std::size_t n = gas_price_wei.size();
    if (ether_price.size() != n) {
        bad("ether_price has " + std::to_string(ether_price.size()) + " entries but gas_price_wei has " +
            std::to_string(n));
    }
    for (const auto& [f, series] : counts) {
        if (f == Function::Mint) bad("Mint transactions carry no fee and cannot appear in a cost report");
        if (series.size() != n) {
            bad(std::string(ledger::to_string(f)) + " has " + std::to_string(series.size()) +
                " entries but gas_price_wei has " + std::to_string(n));
        }
    }
    for (double p : ether_price)
        if (!std::isfinite(p) || p < 0) bad("ether prices must be finite and non-negative");
}

CostReport cost_report(const CostReportInput& input, const ledger::GasSchedule& schedule) {
    input.validate();
    CostReport out;
    for (std::size_t d = 0; d < input.days(); ++d) {
        DayCost day;
        day.day = d + 1;
        day.gas_price_wei = input.gas_price_wei[d];
        for (Function f : kCostFunctions) {
            auto it = input.counts.find(f);
            const std::uint64_t n = it == input.counts.end() ? 0 : it->second[d];
            day.counts[f] = n;
            const Wei gas = checked_mul(Wei{n}, Wei{schedule.intrinsic(f)});
            day.fee_wei = checked_add(day.fee_wei, checked_mul(gas, day.gas_price_wei));
            if (gas > std::numeric_limits<Gas>::max() - day.gas) throw Error(ErrorCode::Overflow, "gas total overflow");
            day.gas += static_cast<Gas>(gas);
        }
        day.fee_ether = wei_to_ether(day.fee_wei);
        day.fee_currency = day.fee_ether * input.ether_price[d];
        if (day.gas > std::numeric_limits<Gas>::max() - out.total_gas) throw Error(ErrorCode::Overflow, "gas total overflow");
        out.total_gas += day.gas;
        out.total_wei = checked_add(out.total_wei, day.fee_wei);
        out.total_currency += day.fee_currency;
        out.days.push_back(std::move(day));
    }
    out.total_ether = wei_to_ether(out.total_wei);
    return out;
}

json CostReport::to_json() const {
    json j;
    json day = json::array(), gas = json::array(), price = json::array(), wei = json::array(), ether = json::array(),
         currency = json::array();
    json counts = json::object();
    for (Function f : kCostFunctions) counts[std::string(ledger::to_string(f))] = json::array();
    for (const auto& d : days) {
        day.push_back(d.day);
        gas.push_back(d.gas);
        price.push_back(wei_to_string(d.gas_price_wei));
        wei.push_back(wei_to_string(d.fee_wei));
        ether.push_back(d.fee_ether);
        currency.push_back(d.fee_currency);
        for (const auto& [f, n] : d.counts) counts[std::string(ledger::to_string(f))].push_back(n);
    }
    j["day"] = day;
    j["counts"] = counts;
    j["gas"] = gas;
    j["gas_price_wei"] = price;
    j["fee_wei"] = wei;
    j["fee_ether"] = ether;
    j["fee_currency"] = currency;
    j["total"] = {{"gas", total_gas},
                  {"fee_wei", wei_to_string(total_wei)},
                  {"fee_ether", total_ether},
                  {"fee_currency", total_currency}};
    return j;
}

std::string CostReport::to_csv() const {
    std::ostringstream os;
    os << "day,SetRate,GetRate,GiveRightToRate,CreateProduct,gas,gas_price_wei,fee_wei,fee_ether,fee_currency\n";
    for (const auto& d : days) {
        os << d.day;
        for (Function f : kCostFunctions) os << ',' << d.counts.at(f);
        os << ',' << d.gas << ',' << wei_to_string(d.gas_price_wei) << ',' << wei_to_string(d.fee_wei) << ','
           << fixed(d.fee_ether, 18) << ',' << fixed(d.fee_currency, 6) << '\n';
    }
    os << "total,,,,," << total_gas << ",," << wei_to_string(total_wei) << ',' << fixed(total_ether, 18) << ','
       << fixed(total_currency, 6) << '\n';
    return os.str();
}

std::string CostReport::to_table() const {
    std::ostringstream os;
    os << std::left << std::setw(6) << "day" << std::right << std::setw(12) << "gas" << std::setw(16) << "gas price"
       << std::setw(26) << "fee (wei)" << std::setw(22) << "fee (ether)" << std::setw(16) << "cost" << '\n';
    for (const auto& d : days) {
        os << std::left << std::setw(6) << d.day << std::right << std::setw(12) << d.gas << std::setw(16)
           << wei_to_string(d.gas_price_wei) << std::setw(26) << wei_to_string(d.fee_wei) << std::setw(22)
           << fixed(d.fee_ether, 9) << std::setw(16) << fixed(d.fee_currency, 4) << '\n';
    }
    os << std::left << std::setw(6) << "total" << std::right << std::setw(12) << total_gas << std::setw(16) << ""
       << std::setw(26) << wei_to_string(total_wei) << std::setw(22) << fixed(total_ether, 9) << std::setw(16)
       << fixed(total_currency, 4) << '\n';
    return os.str();
}

CostReportInput cost_input_from_json(const json& j) {
    if (!j.is_object()) bad("cost input must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "counts" && key != "gas_price_wei" && key != "ether_price") bad("unknown field '" + key + "'");
    }
    if (!j.contains("gas_price_wei") || !j.contains("ether_price")) bad("gas_price_wei and ether_price are required");
    CostReportInput in;
    try {
        for (const json& p : j.at("gas_price_wei")) {
            if (p.is_string()) {
                in.gas_price_wei.push_back(wei_from_string(p.get<std::string>()));
            } else if (p.is_number_unsigned()) {
                in.gas_price_wei.push_back(p.get<std::uint64_t>());
            } else {
                bad("gas prices must be non-negative integers or decimal strings");
            }
        }
        for (const json& p : j.at("ether_price")) {
            if (!p.is_number()) bad("ether prices must be numbers");
            in.ether_price.push_back(p.get<double>());
        }
        if (j.contains("counts")) {
            for (const auto& [name, series] : j.at("counts").items()) {
                auto f = ledger::function_from_string(name);
                if (!f) bad("unknown function '" + name + "'");
                auto& out = in.counts[*f];
                for (const json& c : series) {
                    if (!c.is_number_unsigned()) bad("counts must be non-negative integers");
                    out.push_back(c.get<std::uint64_t>());
                }
            }
        }
    } catch (const json::exception& e) {
        bad(std::string("cost input: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) throw;
        bad(e.what());
    }
    in.validate();
    return in;
}

CostReportInput cost_input_from_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        if (line.find_first_not_of(" \r\t") == std::string_view::npos) continue;
        rows.push_back(split(line, ','));
    }
    if (rows.empty()) bad("CSV input is empty");
    const auto& header = rows.front();
    CostReportInput in;
    std::optional<std::size_t> price_col, ether_col;
    std::vector<std::pair<std::size_t, Function>> count_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& h = header[c];
        if (h == "gas_price_wei") {
            price_col = c;
        } else if (h == "ether_price") {
            ether_col = c;
        } else if (h == "day") {
            continue;
        } else if (auto f = ledger::function_from_string(h)) {
            count_cols.emplace_back(c, *f);
            in.counts[*f];
        } else {
            bad("unknown CSV column '" + h + "'");
        }
    }
    if (!price_col || !ether_col) bad("CSV needs gas_price_wei and ether_price columns");
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) bad("CSV row " + std::to_string(r + 1) + " has the wrong number of cells");
        try {
            in.gas_price_wei.push_back(wei_from_string(row[*price_col]));
        } catch (const Error&) {
            bad("CSV row " + std::to_string(r + 1) + ": gas_price_wei must be a non-negative integer");
        }
        in.ether_price.push_back(parse_price(row[*ether_col]));
        for (const auto& [c, f] : count_cols) in.counts[f].push_back(parse_count(row[c]));
    }
    in.validate();
    return in;
}

}  // namespace trating::cost
