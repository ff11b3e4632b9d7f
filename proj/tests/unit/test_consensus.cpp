#include <doctest.h>

#include <algorithm>
#include <random>

#include "support.hpp"
#include "trating/consensus.hpp"

using namespace trating;
using namespace trating::consensus;
using ledger::Violation;
using testing::World;

TEST_CASE("expected proposer is round robin") {
    World w;
    const auto& set = w.genesis.authorities;
    CHECK(expected_proposer(14, set) == set.members()[2]);
    for (std::uint64_t h = 0; h < 8; ++h) CHECK(expected_proposer(h, set) == set.members()[h % 4]);
    World one(1);
    for (std::uint64_t h : {0ull, 1ull, 77ull, 1000001ull})
        CHECK(expected_proposer(h, one.genesis.authorities) == one.genesis.authorities.members()[0]);
}

TEST_CASE("authority set rules") {
    CHECK_THROWS_AS(AuthoritySet(std::vector<Address>{}), Error);
    Address a = testing::address_for("a");
    CHECK_THROWS_AS(AuthoritySet({a, a}), Error);
    World w;
    const auto& set = w.genesis.authorities;
    CHECK(set.rank(5, set.members()[1]) == 0);
    CHECK(set.rank(5, set.members()[2]) == 1);
    CHECK(set.rank(5, set.members()[0]) == 3);
    CHECK_THROWS_AS(set.rank(5, a), Error);
    CHECK(set.final_depth() == 3);
    CHECK(World(1).genesis.authorities.final_depth() == 2);
    CHECK(World(5).genesis.authorities.final_depth() == 4);
}

TEST_CASE("seal_block packing") {
    World w;
    ledger::Chain chain(w.genesis);
    const auto head = chain.head();
    const KeyPair& me = w.validator_for(1);

    SUBCASE("one transaction") {
        auto r = seal_block(std::vector{w.grant(0, w.raters[0].address())}, head, chain.state(), w.genesis, me,
                            head.timestamp + 1);
        REQUIRE(r.block);
        CHECK(r.block->transactions.size() == 1);
        CHECK(r.block->gas_used == 47800);
        CHECK(r.block->number == 1);
        CHECK_FALSE(r.block->out_of_turn);
        CHECK(chain.append(*r.block).ok());
    }
    SUBCASE("nothing pending") {
        CHECK_FALSE(seal_block({}, head, chain.state(), w.genesis, me, head.timestamp + 1).block);
    }
    SUBCASE("gas limit") {
        World small;
        small.genesis.gas_limit = 47800 * 3 + 10;
        ledger::Chain c(small.genesis);
        std::vector<ledger::Transaction> txs;
        for (std::uint64_t n = 0; n < 5; ++n) txs.push_back(small.grant(n, small.raters[n].address()));
        auto r = seal_block(txs, c.head(), c.state(), small.genesis, small.validator_for(1), 2000);
        REQUIRE(r.block);
        CHECK(r.block->transactions.size() == 3);
        CHECK(r.block->gas_used == 47800 * 3);
        REQUIRE(c.append(*r.block).ok());
        std::vector<ledger::Transaction> rest(txs.begin() + 3, txs.end());
        auto next = seal_block(rest, c.head(), c.state(), small.genesis, small.validator_for(2), 2001);
        REQUIRE(next.block);
        CHECK(next.block->transactions.size() == 2);
    }
    SUBCASE("nonce gaps are filled in later passes and stale txs are dropped") {
        std::vector<ledger::Transaction> txs{w.grant(1, w.raters[1].address()), w.grant(0, w.raters[0].address()),
                                             w.grant(5, w.raters[2].address())};
        auto r = seal_block(txs, head, chain.state(), w.genesis, me, head.timestamp + 1);
        REQUIRE(r.block);
        CHECK(r.block->transactions.size() == 2);
        CHECK(r.block->transactions[0].nonce == 0);
        CHECK(r.dropped.empty());
        REQUIRE(chain.append(*r.block).ok());
        auto again = seal_block(std::vector{w.grant(0, w.raters[0].address())}, chain.head(), chain.state(),
                                w.genesis, w.validator_for(2), chain.head().timestamp + 1);
        CHECK_FALSE(again.block);
        REQUIRE(again.dropped.size() == 1);
        CHECK(again.dropped[0].second == ledger::TxError::BadNonce);
    }
    SUBCASE("non-authority refuses") {
        CHECK_THROWS_AS(seal_block({}, head, chain.state(), w.genesis, testing::key_for("x"), 0), Error);
    }
}

TEST_CASE("accept_block") {
    World w;
    testing::ChainBuilder cb(w);
    cb.grow(2);
    const auto& chain = cb.chain;
    const auto head = chain.head();
    auto make = [&](const KeyPair& k, std::uint64_t ts) {
        auto r = seal_block(std::vector{w.grant(1, w.raters[3].address())}, head, chain.state(), w.genesis, k, ts);
        REQUIRE(r.block);
        return *r.block;
    };

    Block in_turn = make(w.validator_for(3), head.timestamp + 1);
    auto d = accept_block(chain, in_turn, head.timestamp + 1);
    CHECK(d.placement == Placement::Extends);
    CHECK_FALSE(d.violation);

    CHECK(accept_block(chain, *chain.block_at(2), head.timestamp).placement == Placement::Duplicate);

    Block early = make(w.validator_for(4), head.timestamp + 2);
    early.timestamp = head.timestamp + 1;
    early.seal_with(w.validator_for(4));
    CHECK(accept_block(chain, early, head.timestamp + 5).violation == Violation::PrematureOutOfTurn);
    Block late = make(w.validator_for(4), head.timestamp + 2);
    CHECK(accept_block(chain, late, head.timestamp + 2).placement == Placement::Extends);
    Block laterer = make(w.validator_for(5), head.timestamp + 4);
    CHECK(laterer.out_of_turn);
    CHECK(accept_block(chain, laterer, head.timestamp + 4).placement == Placement::Extends);

    Block intruder = in_turn;
    intruder.seal_with(testing::key_for("intruder"));
    CHECK(accept_block(chain, intruder, head.timestamp + 1).violation == Violation::UnauthorizedProposer);

    CHECK(accept_block(chain, in_turn, head.timestamp - 1).violation == Violation::FutureTimestamp);

    Block tampered = in_turn;
    tampered.transactions[0].signature.bytes[0] ^= 1;
    CHECK(accept_block(chain, tampered, head.timestamp + 1).violation == Violation::HashMismatch);

    Block orphan = in_turn;
    orphan.parent_hash = hash32("unknown");
    orphan.seal_with(w.validator_for(3));
    CHECK(accept_block(chain, orphan, head.timestamp + 1).placement == Placement::Orphan);

    const Block* b1 = chain.block_at(1);
    auto fork = seal_block(std::vector{w.grant(1, w.raters[4].address())}, ledger::ChainHead::of(*b1),
                           chain.state_at(1), w.genesis, w.validator_for(2), b1->timestamp + 50);
    REQUIRE(fork.block);
    auto fd = accept_block(chain, *fork.block, b1->timestamp + 50);
    CHECK(fd.placement == Placement::Fork);
    CHECK(fd.parent_height == 1);
}

TEST_CASE("fork choice examples") {
    Digest g = hash32("g");
    ChainSummary ten{g, 10, 0, hash32("a")};
    ChainSummary nine{g, 9, 0, hash32("b")};
    CHECK(fork_choice(ten, nine) == ForkWinner::First);
    CHECK(fork_choice(nine, ten) == ForkWinner::Second);
    ChainSummary ten_oot{g, 10, 1, hash32("c")};
    CHECK(fork_choice(ten, ten_oot) == ForkWinner::First);
    CHECK(fork_choice(ten_oot, ten) == ForkWinner::Second);
    ChainSummary x{g, 10, 0, hash32("x")};
    ChainSummary y{g, 10, 0, hash32("y")};
    const bool x_lower = x.head_hash < y.head_hash;
    CHECK(fork_choice(x, y) == (x_lower ? ForkWinner::First : ForkWinner::Second));
    CHECK(fork_choice(y, x) == (x_lower ? ForkWinner::Second : ForkWinner::First));
    ChainSummary other{hash32("h"), 50, 0, hash32("z")};
    CHECK(fork_choice(ten, other) == ForkWinner::Irreconcilable);
    CHECK_FALSE(prefer(ten, ten));
    CHECK(prefer(ten, nine));
    CHECK_FALSE(prefer(nine, ten));
}

TEST_CASE("fork choice is a strict total order") {
    std::mt19937_64 rng(3);
    Digest g = hash32("g");
    std::vector<ChainSummary> all;
    for (int i = 0; i < 60; ++i) {
        all.push_back({g, rng() % 4, rng() % 3, hash32("h" + std::to_string(rng() % 20))});
    }
    for (const auto& a : all) {
        CHECK_FALSE(prefer(a, a));
        for (const auto& b : all) {
            if (a == b) continue;
            CHECK(prefer(a, b) != prefer(b, a));
            CHECK(fork_choice(a, b) != fork_choice(b, a));
            for (const auto& c : all) {
                if (prefer(a, b) && prefer(b, c)) CHECK(prefer(a, c));
            }
        }
    }
    auto best = *std::max_element(all.begin(), all.end(), [](const auto& l, const auto& r) { return prefer(r, l); });
    std::shuffle(all.begin(), all.end(), rng);
    auto best2 = *std::max_element(all.begin(), all.end(), [](const auto& l, const auto& r) { return prefer(r, l); });
    CHECK(best == best2);
}
