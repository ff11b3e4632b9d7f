#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trating/consensus.hpp"
#include "trating/ledger.hpp"

namespace testing {

using namespace trating;
using ledger::Block;
using ledger::Genesis;
using ledger::Transaction;

inline const Wei kEther = Wei{1000000000000000000ULL};

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(TRATING_FIXTURE_DIR) / name;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(read_file(p)); }

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "trating-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline KeyPair key_for(const std::string& label) {
    Digest d = hash32("test-key/" + label);
    return KeyPair::from_seed(d.bytes);
}

inline Address address_for(const std::string& label) {
    Digest d = hash32("test-address/" + label);
    Address a;
    std::copy(d.bytes.end() - 20, d.bytes.end(), a.bytes.begin());
    return a;
}

inline const char* const kRestaurants[] = {"Kaza Restaurant", "4 Season Restaurant", "Ming Restaurant", "House Cafe"};

/// Validators, an owner, raters and the four restaurants, all with deterministic keys.
struct World {
    std::vector<KeyPair> validators;
    KeyPair owner = key_for("owner");
    std::vector<KeyPair> raters;
    std::vector<Address> products;
    Genesis genesis;

    explicit World(std::size_t n_validators = 4, std::size_t n_raters = 8, Wei gas_price = 1) {
        std::vector<Address> auth;
        for (std::size_t i = 0; i < n_validators; ++i) {
            validators.push_back(key_for("validator/" + std::to_string(i)));
            auth.push_back(validators.back().address());
        }
        genesis.authorities = consensus::AuthoritySet(auth);
        genesis.owner = owner.address();
        genesis.contract_address = ledger::default_contract_address(genesis.owner);
        genesis.gas_price_suggestion = gas_price;
        genesis.timestamp = 1000;
        genesis.balances[owner.address()] = kEther * 100;
        for (std::size_t i = 0; i < n_raters; ++i) {
            raters.push_back(key_for("rater/" + std::to_string(i)));
            genesis.balances[raters.back().address()] = kEther;
        }
        for (const char* name : kRestaurants) {
            products.push_back(address_for(std::string("product/") + name));
            genesis.products.push_back({products.back(), name});
        }
    }

    const KeyPair& validator_for(std::uint64_t height) const {
        return validators[height % validators.size()];
    }

    Transaction tx(const KeyPair& from, std::uint64_t nonce, ledger::CallPayload call, Wei gas_price = 1,
                   Wei value = 0) const {
        Transaction t;
        t.nonce = nonce;
        t.to = genesis.contract_address;
        t.call = std::move(call);
        t.value = value;
        t.gas_limit = 100000;
        t.gas_price = gas_price;
        t.sign_with(from);
        return t;
    }

    Transaction grant(std::uint64_t nonce, const Address& rater, Wei gas_price = 1) const {
        return tx(owner, nonce, ledger::GiveRightToRateArgs{rater}, gas_price);
    }

    Transaction rate(const KeyPair& rater, std::uint64_t nonce, std::size_t product, std::uint8_t value,
                     Wei gas_price = 1) const {
        return tx(rater, nonce, ledger::SetRateArgs{products.at(product), value}, gas_price);
    }

    Transaction mint(const KeyPair& validator, std::uint64_t nonce, const Address& to) const {
        Transaction t;
        t.nonce = nonce;
        t.to = to;
        t.call = ledger::MintArgs{};
        t.value = genesis.faucet_grant_wei;
        t.gas_limit = 0;
        t.sign_with(validator);
        return t;
    }
};

/// Seals one in-turn block per call on top of a chain.
struct ChainBuilder {
    const World& world;
    ledger::Chain chain;
    std::uint64_t clock;

    explicit ChainBuilder(const World& w) : world(w), chain(w.genesis), clock(w.genesis.timestamp) {}

    Block seal(const std::vector<Transaction>& txs) {
        const std::uint64_t h = chain.height() + 1;
        clock += 1;
        auto r = consensus::seal_block(txs, chain.head(), chain.state(), world.genesis, world.validator_for(h), clock);
        if (!r.block) throw std::runtime_error("nothing sealed");
        auto check = chain.append(*r.block);
        if (!check.ok()) throw std::runtime_error("append failed: " + check.describe());
        return *r.block;
    }

    /// n blocks, one SetRate or grant per block.
    std::vector<Block> grow(std::size_t n) {
        std::vector<Block> out;
        std::size_t owner_nonce = chain.state().nonce(world.owner.address());
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = i / 2 % world.raters.size();
            if (i % 2 == 0) {
                out.push_back(seal({world.grant(owner_nonce++, world.raters[r].address())}));
            } else {
                const KeyPair& k = world.raters[r];
                std::uint64_t nonce = chain.state().nonce(k.address());
                out.push_back(seal({world.rate(k, nonce, (i / 2 / world.raters.size()) % 4,
                                               static_cast<std::uint8_t>((i * 37) % 101))}));
            }
        }
        return out;
    }
};

// Independent oracles, implemented without touching the contract code.

/// floor(sum / n) with exact integers.
inline std::uint64_t oracle_mean(const std::vector<std::uint32_t>& values) {
    if (values.empty()) return 0;
    std::uint64_t sum = 0;
    for (auto v : values) sum += v;
    return sum / values.size();
}

/// Literal recurrence: r <- floor((r + v) / (n + 1)).
inline std::uint64_t oracle_literal(const std::vector<std::uint32_t>& values) {
    std::uint64_t r = 0;
    std::uint64_t n = 0;
    for (auto v : values) {
        r = (r + v) / (n + 1);
        ++n;
    }
    return r;
}

}  // namespace testing
