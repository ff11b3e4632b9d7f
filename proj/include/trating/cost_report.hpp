#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trating/ledger.hpp"

namespace trating::cost {

/// Daily series; every series has one entry per day.
struct CostReportInput {
    std::map<ledger::Function, std::vector<std::uint64_t>> counts;
    std::vector<Wei> gas_price_wei;
    /// Currency units per ether.
    std::vector<double> ether_price;

    std::size_t days() const { return gas_price_wei.size(); }
    /// Throws Error(InvalidArgument) on length mismatch, negative or non-finite prices, or Mint counts.
    void validate() const;
};

struct DayCost {
    std::size_t day = 0;
    std::map<ledger::Function, std::uint64_t> counts;
    Gas gas = 0;
    Wei gas_price_wei = 0;
    Wei fee_wei = 0;
    double fee_ether = 0;
    double fee_currency = 0;
};

struct CostReport {
    std::vector<DayCost> days;
    Gas total_gas = 0;
    Wei total_wei = 0;
    double total_ether = 0;
    double total_currency = 0;

    nlohmann::json to_json() const;
    /// One row per day plus a total row; ready for plotting.
    std::string to_csv() const;
    std::string to_table() const;
};

/// day fee = sum over functions of count * gas * gas_price, in exact wei.
CostReport cost_report(const CostReportInput& input, const ledger::GasSchedule& schedule);

/// {"counts": {"SetRate": [...], ...}, "gas_price_wei": [...], "ether_price": [...]}
CostReportInput cost_input_from_json(const nlohmann::json& j);
/// Header row names the columns: SetRate, GetRate, GiveRightToRate, CreateProduct, gas_price_wei,
/// ether_price, and an optional day column.
CostReportInput cost_input_from_csv(std::string_view text);

double wei_to_ether(Wei wei);

}  // namespace trating::cost
