#include <doctest.h>

#include "support.hpp"
#include "trating/netsim.hpp"

using namespace trating;
using namespace trating::netsim;

namespace {

SimConfig load(const std::string& name) { return SimConfig::from_json(testing::read_json(testing::fixture(name))); }

void check_common(const SimReport& r, std::uint32_t validators) {
    CHECK_FALSE(r.timed_out);
    CHECK(r.converged);
    CHECK(r.conservation_ok);
    CHECK(r.balance_sum == r.genesis_total + r.minted);
    CHECK(r.adversarial_blocks_accepted == 0);
    REQUIRE(r.nodes.size() == validators);
    for (const auto& n : r.nodes) {
        CHECK(n.head_hash == r.nodes[0].head_hash);
        CHECK(n.state_digest == r.nodes[0].state_digest);
        CHECK(n.block_log_digest == r.nodes[0].block_log_digest);
        CHECK(n.replay_matches);
        CHECK(n.conservation_ok);
    }
}

SimConfig small(std::uint64_t seed, std::uint32_t txs) {
    SimConfig c;
    c.seed = seed;
    c.validators = 4;
    c.workload.transactions = txs;
    c.workload.raters = 10;
    return c;
}

}  // namespace

TEST_CASE("fixture runs reproduce their committed reports") {
    for (const char* name : {"fault_free_4v", "partition_4v", "adversaries_4v", "single_1v"}) {
        CAPTURE(name);
        SimReport r = run_simulation(load(std::string(name) + ".json"));
        auto golden = testing::read_json(testing::fixture(std::string("golden/") + name + ".report.json"));
        CHECK(r.to_json() == golden);
        check_common(r, r.nodes.size() == 1 ? 1 : 4);
    }
}

TEST_CASE("fault-free run converges and is deterministic") {
    SimConfig c = load("fault_free_4v.json");
    SimReport a = run_simulation(c);
    SimReport b = run_simulation(c);
    check_common(a, 4);
    CHECK(a.to_json().dump() == b.to_json().dump());
    CHECK(a.transactions_committed == 100);
    CHECK(a.max_height > 0);
    c.seed = 43;
    CHECK(run_simulation(c).to_json().dump() != a.to_json().dump());
}

TEST_CASE("a single validator with one transaction") {
    SimReport r = run_simulation(load("single_1v.json"));
    check_common(r, 1);
    CHECK(r.max_height == 1);
    CHECK(r.nodes[0].height == 1);
    CHECK(r.transactions_committed == 1);
    CHECK(r.receipts_success == 1);
}

TEST_CASE("isolating a validator forces out-of-turn blocks and the chain keeps growing") {
    SimConfig c = small(21, 160);
    c.partitions.push_back({2000, 30000, {1}});
    SimConfig control = small(21, 160);
    SimReport r = run_simulation(c);
    check_common(r, 4);
    std::uint64_t oot = 0;
    for (const auto& n : r.nodes) oot = std::max(oot, n.out_of_turn_blocks);
    CHECK(oot > 0);
    CHECK(r.transactions_committed == 160);
    CHECK(r.max_height >= run_simulation(control).max_height / 2);
}

TEST_CASE("partition and heal converge") {
    SimConfig c = small(5, 200);
    c.partitions.push_back({3000, 15000, {0, 1}});
    SimReport r = run_simulation(c);
    check_common(r, 4);
    CHECK(r.messages_dropped > 0);
    CHECK(r.transactions_committed == 200);
}

TEST_CASE("a zero-duration partition changes nothing") {
    SimConfig c = small(8, 60);
    SimConfig z = c;
    z.partitions.push_back({1000, 0, {0, 1}});
    CHECK(run_simulation(c).to_json() == run_simulation(z).to_json());
}

TEST_CASE("non-authority proposer blocks are all rejected") {
    SimConfig c = small(13, 40);
    c.adversaries.push_back({AdversaryBehavior::NonAuthorityProposer, 1000, 300, 10});
    SimReport r = run_simulation(c);
    check_common(r, 4);
    CHECK(r.adversary_blocks_sent == 10);
    for (const auto& n : r.nodes) CHECK(n.rejected_blocks.at("UnauthorizedProposer") == 10);
}

TEST_CASE("tampered relays are rejected on every receiver") {
    SimConfig c = small(17, 40);
    c.adversaries.push_back({AdversaryBehavior::TamperedBlockRelay, 0, 0, 0});
    SimReport r = run_simulation(c);
    check_common(r, 4);
    CHECK(r.tampered_relays > 0);
    for (const auto& n : r.nodes) {
        REQUIRE(n.rejected_blocks.contains("HashMismatch"));
        CHECK(n.rejected_blocks.at("HashMismatch") > 0);
    }
}

TEST_CASE("a double-rate spammer lands exactly one rating") {
    SimConfig c = small(19, 20);
    c.adversaries.push_back({AdversaryBehavior::DoubleRateSpammer, 1000, 100, 50});
    SimReport r = run_simulation(c);
    check_common(r, 4);
    CHECK(r.spammer_success == 1);
    CHECK(r.spammer_already_rated == 49);
}

TEST_CASE("message loss is survivable and still deterministic") {
    SimConfig c = small(23, 80);
    c.drop_rate = 0.1;
    SimReport a = run_simulation(c);
    check_common(a, 4);
    CHECK(a.messages_dropped > 0);
    CHECK(a.to_json() == run_simulation(c).to_json());
}

TEST_CASE("faucet mints are accounted for") {
    SimConfig c = small(29, 60);
    c.workload.faucet_mints = 4;
    SimReport r = run_simulation(c);
    check_common(r, 4);
    CHECK(r.minted == testing::kEther * 4);
    CHECK(r.receipts_by_function.at("Mint") == 4);
}

TEST_CASE("paper-literal mode runs with the same machinery") {
    SimConfig c = small(31, 80);
    c.averaging_mode = ledger::AveragingMode::PaperLiteral;
    check_common(run_simulation(c), 4);
}

TEST_CASE("config validation") {
    auto bad = [](nlohmann::json j) { CHECK_THROWS_AS(SimConfig::from_json(j), Error); };
    bad({{"validators", 0}});
    bad({{"bogus", 1}});
    bad({{"latency_ms", {{"min", 50}, {"max", 5}}}});
    bad({{"partitions", {{{"start_ms", 0}, {"duration_ms", 10}, {"group", {7}}}}}});
    bad({{"partitions", {{{"start_ms", 0}, {"duration_ms", 100}, {"group", {0}}},
                         {{"start_ms", 50}, {"duration_ms", 100}, {"group", {1}}}}}});
    bad({{"workload", {{"transactions", 1}, {"extra", 2}}}});
    bad({{"adversaries", {{{"behavior", "Sybil"}}}}});
    bad({{"drop_rate", 1.5}});

    SimConfig c = load("partition_4v.json");
    CHECK(SimConfig::from_json(c.to_json()).to_json() == c.to_json());

    Simulation sim(small(1, 10));
    sim.inject_partition({100, 100, {0}});
    CHECK_THROWS_AS(sim.inject_partition({150, 100, {1}}), Error);
    CHECK(sim.genesis().authorities.size() == 4);
}

TEST_CASE("summary text names the outcome") {
    SimReport r = run_simulation(load("single_1v.json"));
    std::string s = r.summary();
    CHECK(s.find("converged") != std::string::npos);
    CHECK(s.find("conservation ok") != std::string::npos);
}
