#include <doctest.h>

#include <random>

#include "support.hpp"
#include "trating/cost_report.hpp"

using namespace trating;
using namespace trating::cost;
using ledger::Function;

namespace {

/// Adds one transaction's fee at a time.
Wei brute_force_day(const CostReportInput& in, std::size_t d, const ledger::GasSchedule& s) {
    Wei total = 0;
    for (const auto& [f, series] : in.counts)
        for (std::uint64_t k = 0; k < series[d]; ++k) total += Wei{s.intrinsic(f)} * in.gas_price_wei[d];
    return total;
}

}  // namespace

TEST_CASE("ten SetRate at one wei") {
    CostReportInput in;
    in.counts[Function::SetRate] = {10};
    in.gas_price_wei = {1};
    in.ether_price = {1};
    CostReport r = cost_report(in, {});
    CHECK(r.total_wei == 514560);
    CHECK(r.total_gas == 514560);
    REQUIRE(r.days.size() == 1);
    CHECK(r.days[0].fee_wei == 514560);
}

TEST_CASE("zero transactions cost nothing") {
    CostReportInput in;
    in.counts[Function::SetRate] = {0, 0};
    in.gas_price_wei = {2000000000, 1};
    in.ether_price = {300, 300};
    CostReport r = cost_report(in, {});
    CHECK(r.total_wei == 0);
    CHECK(r.total_currency == 0);
}

TEST_CASE("random inputs match a per-transaction oracle") {
    std::mt19937_64 rng(1234);
    ledger::GasSchedule s;
    for (int round = 0; round < 100; ++round) {
        CostReportInput in;
        std::size_t days = 1 + rng() % 20;
        for (Function f : {Function::SetRate, Function::GetRate, Function::GiveRightToRate, Function::CreateProduct}) {
            if (rng() % 4 == 0) continue;
            for (std::size_t d = 0; d < days; ++d) in.counts[f].push_back(rng() % 60);
        }
        for (std::size_t d = 0; d < days; ++d) {
            in.gas_price_wei.push_back(rng() % 3 == 0 ? Wei{rng()} * 1000 : Wei{rng() % 100000000000ULL});
            in.ether_price.push_back(static_cast<double>(rng() % 5000));
        }
        CostReport r = cost_report(in, s);
        Wei total = 0;
        for (std::size_t d = 0; d < days; ++d) {
            Wei expect = brute_force_day(in, d, s);
            CHECK(r.days[d].fee_wei == expect);
            total += expect;
        }
        CHECK(r.total_wei == total);
    }
}

TEST_CASE("16-day fixture matches the independent recomputation") {
    CostReportInput in = cost_input_from_json(testing::read_json(testing::fixture("cost_16day.json")));
    auto expected = testing::read_json(testing::fixture("cost_16day.expected.json"));
    CostReport r = cost_report(in, {});
    REQUIRE(r.days.size() == 16);
    for (std::size_t d = 0; d < 16; ++d) {
        const auto& row = expected.at("days").at(d);
        CHECK(r.days[d].gas == row.at("gas").get<std::uint64_t>());
        CHECK(wei_to_string(r.days[d].fee_wei) == row.at("fee_wei").get<std::string>());
        CHECK(r.days[d].fee_currency == doctest::Approx(row.at("fee_currency").get<double>()).epsilon(1e-12));
    }
    CHECK(wei_to_string(r.total_wei) == expected.at("total_wei").get<std::string>());
    CHECK(r.total_gas == expected.at("total_gas").get<std::uint64_t>());
    CHECK(r.total_currency == doctest::Approx(expected.at("total_currency").get<double>()).epsilon(1e-12));
}

TEST_CASE("csv input and output") {
    std::string csv =
        "day,SetRate,GetRate,gas_price_wei,ether_price\n"
        "1,10,0,1,1\n"
        "2,1,1,2000000000,2500.5\n";
    CostReportInput in = cost_input_from_csv(csv);
    CostReport r = cost_report(in, {});
    CHECK(r.days[0].fee_wei == 514560);
    CHECK(r.days[1].fee_wei == Wei{51456 + 42689} * 2000000000);
    std::string out = r.to_csv();
    CHECK(out.rfind("day,SetRate,GetRate,GiveRightToRate,CreateProduct,gas,gas_price_wei,fee_wei", 0) == 0);
    CHECK(out.find("\n1,10,0,0,0,514560,1,514560,") != std::string::npos);
    CHECK(out.find("\ntotal,") != std::string::npos);
    CHECK(r.to_table().find("514560") != std::string::npos);
    auto j = r.to_json();
    CHECK(j.at("fee_wei").at(0) == "514560");
    CHECK(j.at("total").at("gas") == 514560 + 51456 + 42689);

    CHECK_THROWS_AS(cost_input_from_csv("SetRate,gas_price_wei\n1,1\n"), Error);
    CHECK_THROWS_AS(cost_input_from_csv("SetRate,gas_price_wei,ether_price\n1,1\n"), Error);
    CHECK_THROWS_AS(cost_input_from_csv("Bogus,gas_price_wei,ether_price\n1,1,1\n"), Error);
    CHECK_THROWS_AS(cost_input_from_csv("SetRate,gas_price_wei,ether_price\n-1,1,1\n"), Error);
}

TEST_CASE("input validation") {
    using nlohmann::json;
    CHECK_THROWS_AS(cost_input_from_json(json{{"gas_price_wei", {1, 2}}, {"ether_price", {1}}}), Error);
    CHECK_THROWS_AS(cost_input_from_json(json{{"gas_price_wei", {1}}, {"ether_price", {-1}}}), Error);
    CHECK_THROWS_AS(
        cost_input_from_json(json{{"counts", {{"Mint", {1}}}}, {"gas_price_wei", {1}}, {"ether_price", {1}}}), Error);
    CHECK_THROWS_AS(
        cost_input_from_json(json{{"counts", {{"SetRate", {1, 2}}}}, {"gas_price_wei", {1}}, {"ether_price", {1}}}),
        Error);
    CHECK_THROWS_AS(cost_input_from_json(json{{"gas_price_wei", {1}}, {"ether_price", {1}}, {"x", 1}}), Error);
    CostReportInput big;
    big.counts[Function::SetRate] = {~std::uint64_t{0}};
    big.gas_price_wei = {~Wei{0}};
    big.ether_price = {1};
    CHECK_THROWS_AS(cost_report(big, {}), Error);
}

TEST_CASE("wei to ether") {
    CHECK(wei_to_ether(testing::kEther) == 1.0);
    CHECK(wei_to_ether(testing::kEther / 2) == 0.5);
    CHECK(wei_to_ether(0) == 0.0);
}
