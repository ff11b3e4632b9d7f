#include "trating/json_codec.hpp"

#include <algorithm>

namespace trating::codec {

using ledger::Function;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::Parse, what); }

void expect_keys(const json& j, std::initializer_list<std::string_view> required,
                 std::initializer_list<std::string_view> optional, const char* where) {
    if (!j.is_object()) fail(std::string(where) + " must be an object");
    for (auto key : required) {
        if (!j.contains(std::string(key))) fail(std::string(where) + " is missing '" + std::string(key) + "'");
    }
    for (const auto& [key, _] : j.items()) {
        bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                     std::find(optional.begin(), optional.end(), key) != optional.end();
        if (!known) fail(std::string(where) + " has unknown field '" + key + "'");
    }
}

const json& field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) fail(std::string("missing '") + key + "'");
    return *it;
}

std::uint64_t u64(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number_unsigned()) fail(std::string("'") + key + "' must be an unsigned integer");
    return v.get<std::uint64_t>();
}

bool boolean(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_boolean()) fail(std::string("'") + key + "' must be a boolean");
    return v.get<bool>();
}

std::string str(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_string()) fail(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

Wei wei(const json& j, const char* key) {
    const json& v = field(j, key);
    if (v.is_string()) return wei_from_string(v.get<std::string>());
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    fail(std::string("'") + key + "' must be a decimal string");
}

template <typename T>
T hex(const json& j, const char* key) {
    return T::from_hex(str(j, key));
}

template <typename T>
T hex_value(const json& v) {
    if (!v.is_string()) fail("expected a hex string");
    return T::from_hex(v.get<std::string>());
}

}  // namespace

json call_to_json(const ledger::CallPayload& call) {
    return std::visit(
        [](const auto& a) -> json {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ledger::GiveRightToRateArgs>) {
                return {{"rater", a.rater.hex()}};
            } else if constexpr (std::is_same_v<T, ledger::SetRateArgs>) {
                return {{"product", a.product.hex()}, {"value", a.value}};
            } else if constexpr (std::is_same_v<T, ledger::GetRateArgs>) {
                return {{"product", a.product.hex()}};
            } else if constexpr (std::is_same_v<T, ledger::CreateProductArgs>) {
                return {{"product", a.product.hex()}, {"name", a.name}};
            } else {
                return json::object();
            }
        },
        call);
}

ledger::CallPayload call_from_json(Function f, const json& args) {
    switch (f) {
        case Function::GiveRightToRate:
            expect_keys(args, {"rater"}, {}, "args");
            return ledger::GiveRightToRateArgs{hex<Address>(args, "rater")};
        case Function::SetRate: {
            expect_keys(args, {"product", "value"}, {}, "args");
            std::uint64_t v = u64(args, "value");
            if (v > 255) fail("rating value must fit in one byte");
            return ledger::SetRateArgs{hex<Address>(args, "product"), static_cast<std::uint8_t>(v)};
        }
        case Function::GetRate:
            expect_keys(args, {"product"}, {}, "args");
            return ledger::GetRateArgs{hex<Address>(args, "product")};
        case Function::CreateProduct:
            expect_keys(args, {"product", "name"}, {}, "args");
            return ledger::CreateProductArgs{hex<Address>(args, "product"), str(args, "name")};
        case Function::Mint:
            expect_keys(args, {}, {}, "args");
            return ledger::MintArgs{};
    }
    fail("unknown function");
}

json tx_to_json(const ledger::Transaction& tx) {
    return {{"nonce", tx.nonce},
            {"from", tx.from.hex()},
            {"to", tx.to.hex()},
            {"function", std::string(ledger::to_string(tx.function()))},
            {"args", call_to_json(tx.call)},
            {"value", wei_to_string(tx.value)},
            {"gas_limit", tx.gas_limit},
            {"gas_price", wei_to_string(tx.gas_price)},
            {"public_key", tx.public_key.hex()},
            {"signature", tx.signature.hex()},
            {"hash", tx.hash().hex()}};
}

ledger::Transaction tx_from_json(const json& j) {
    try {
        expect_keys(j, {"nonce", "from", "to", "function", "args", "value", "gas_limit", "gas_price", "public_key",
                        "signature"},
                    {"hash"}, "transaction");
        ledger::Transaction tx;
        tx.nonce = u64(j, "nonce");
        tx.from = hex<Address>(j, "from");
        tx.to = hex<Address>(j, "to");
        auto f = ledger::function_from_string(str(j, "function"));
        if (!f) fail("unknown function '" + str(j, "function") + "'");
        tx.call = call_from_json(*f, field(j, "args"));
        tx.value = wei(j, "value");
        tx.gas_limit = u64(j, "gas_limit");
        tx.gas_price = wei(j, "gas_price");
        tx.public_key = hex<PublicKey>(j, "public_key");
        tx.signature = hex<Signature>(j, "signature");
        if (j.contains("hash") && hex<Digest>(j, "hash") != tx.hash()) fail("transaction hash does not match its fields");
        return tx;
    } catch (const json::exception& e) {
        fail(std::string("transaction: ") + e.what());
    }
}

json block_to_json(const ledger::Block& b) {
    json txs = json::array();
    for (const auto& tx : b.transactions) txs.push_back(tx_to_json(tx));
    return {{"number", b.number},
            {"parent_hash", b.parent_hash.hex()},
            {"timestamp", b.timestamp},
            {"proposer", b.proposer.hex()},
            {"out_of_turn", b.out_of_turn},
            {"gas_used", b.gas_used},
            {"gas_limit", b.gas_limit},
            {"transactions", std::move(txs)},
            {"block_hash", b.block_hash.hex()},
            {"proposer_key", b.proposer_key.hex()},
            {"proposer_signature", b.proposer_signature.hex()}};
}

ledger::Block block_from_json(const json& j) {
    try {
        expect_keys(j, {"number", "parent_hash", "timestamp", "proposer", "out_of_turn", "gas_used", "gas_limit",
                        "transactions", "block_hash", "proposer_key", "proposer_signature"},
                    {}, "block");
        ledger::Block b;
        b.number = u64(j, "number");
        b.parent_hash = hex<Digest>(j, "parent_hash");
        b.timestamp = u64(j, "timestamp");
        b.proposer = hex<Address>(j, "proposer");
        b.out_of_turn = boolean(j, "out_of_turn");
        b.gas_used = u64(j, "gas_used");
        b.gas_limit = u64(j, "gas_limit");
        const json& txs = field(j, "transactions");
        if (!txs.is_array()) fail("'transactions' must be an array");
        for (const json& t : txs) b.transactions.push_back(tx_from_json(t));
        b.block_hash = hex<Digest>(j, "block_hash");
        b.proposer_key = hex<PublicKey>(j, "proposer_key");
        b.proposer_signature = hex<Signature>(j, "proposer_signature");
        return b;
    } catch (const json::exception& e) {
        fail(std::string("block: ") + e.what());
    }
}

json genesis_to_json(const ledger::Genesis& g) {
    json authorities = json::array();
    for (const auto& a : g.authorities.members()) authorities.push_back(a.hex());
    json balances = json::object();
    for (const auto& [a, v] : g.balances) balances[a.hex()] = wei_to_string(v);
    json products = json::array();
    for (const auto& p : g.products) products.push_back({{"address", p.address.hex()}, {"name", p.name}});
    json raters = json::array();
    for (const auto& r : g.raters) raters.push_back(r.hex());
    return {{"chain_id", g.chain_id},
            {"gas_limit", g.gas_limit},
            {"timestamp", g.timestamp},
            {"slot_deadline_seconds", g.slot_deadline_seconds},
            {"authorities", std::move(authorities)},
            {"owner", g.owner.hex()},
            {"contract_address", g.contract_address.hex()},
            {"averaging_mode", std::string(contract::to_string(g.averaging_mode))},
            {"rating_scope", std::string(contract::to_string(g.rating_scope))},
            {"faucet_enabled", g.faucet_enabled},
            {"faucet_grant_wei", wei_to_string(g.faucet_grant_wei)},
            {"faucet_window_blocks", g.faucet_window_blocks},
            {"gas_price_suggestion", wei_to_string(g.gas_price_suggestion)},
            {"gas_schedule",
             {{"SetRate", g.gas_schedule.set_rate},
              {"GetRate", g.gas_schedule.get_rate},
              {"GiveRightToRate", g.gas_schedule.give_right_to_rate},
              {"CreateProduct", g.gas_schedule.create_product}}},
            {"balances", std::move(balances)},
            {"products", std::move(products)},
            {"raters", std::move(raters)}};
}

ledger::Genesis genesis_from_json(const json& j) {
    try {
        expect_keys(j, {"authorities", "owner"},
                    {"chain_id", "gas_limit", "timestamp", "slot_deadline_seconds", "contract_address",
                     "averaging_mode", "rating_scope", "faucet_enabled", "faucet_grant_wei", "faucet_window_blocks",
                     "gas_price_suggestion", "gas_schedule", "balances", "products", "raters"},
                    "genesis");
        ledger::Genesis g;
        if (j.contains("chain_id")) g.chain_id = u64(j, "chain_id");
        if (j.contains("gas_limit")) g.gas_limit = u64(j, "gas_limit");
        if (j.contains("timestamp")) g.timestamp = u64(j, "timestamp");
        if (j.contains("slot_deadline_seconds")) g.slot_deadline_seconds = u64(j, "slot_deadline_seconds");
        std::vector<Address> authorities;
        const json& a = field(j, "authorities");
        if (!a.is_array()) fail("'authorities' must be an array");
        for (const json& v : a) authorities.push_back(hex_value<Address>(v));
        try {
            g.authorities = consensus::AuthoritySet(std::move(authorities));
        } catch (const Error& e) {
            fail(e.what());
        }
        g.owner = hex<Address>(j, "owner");
        g.contract_address =
            j.contains("contract_address") ? hex<Address>(j, "contract_address") : ledger::default_contract_address(g.owner);
        if (j.contains("averaging_mode")) g.averaging_mode = contract::averaging_mode_from_string(str(j, "averaging_mode"));
        if (j.contains("rating_scope")) g.rating_scope = contract::rating_scope_from_string(str(j, "rating_scope"));
        if (j.contains("faucet_enabled")) g.faucet_enabled = boolean(j, "faucet_enabled");
        if (j.contains("faucet_grant_wei")) g.faucet_grant_wei = wei(j, "faucet_grant_wei");
        if (j.contains("faucet_window_blocks")) g.faucet_window_blocks = u64(j, "faucet_window_blocks");
        if (j.contains("gas_price_suggestion")) g.gas_price_suggestion = wei(j, "gas_price_suggestion");
        if (j.contains("gas_schedule")) {
            const json& s = j.at("gas_schedule");
            expect_keys(s, {}, {"SetRate", "GetRate", "GiveRightToRate", "CreateProduct"}, "gas_schedule");
            if (s.contains("SetRate")) g.gas_schedule.set_rate = u64(s, "SetRate");
            if (s.contains("GetRate")) g.gas_schedule.get_rate = u64(s, "GetRate");
            if (s.contains("GiveRightToRate")) g.gas_schedule.give_right_to_rate = u64(s, "GiveRightToRate");
            if (s.contains("CreateProduct")) g.gas_schedule.create_product = u64(s, "CreateProduct");
        }
        if (j.contains("balances")) {
            const json& b = j.at("balances");
            if (!b.is_object()) fail("'balances' must be an object");
            for (const auto& [addr, v] : b.items()) {
                Address key = Address::from_hex(addr);
                if (g.balances.contains(key)) fail("duplicate balance for " + addr);
                if (!v.is_string()) fail("balance must be a decimal string");
                g.balances[key] = wei_from_string(v.get<std::string>());
            }
        }
        if (j.contains("products")) {
            for (const json& p : j.at("products")) {
                expect_keys(p, {"address", "name"}, {}, "product");
                g.products.push_back({hex<Address>(p, "address"), str(p, "name")});
            }
        }
        if (j.contains("raters")) {
            for (const json& r : j.at("raters")) g.raters.push_back(hex_value<Address>(r));
        }
        // Rejects seeds the contract would refuse (bad names, duplicates).
        (void)ledger::LedgerState::from_genesis(g);
        return g;
    } catch (const json::exception& e) {
        fail(std::string("genesis: ") + e.what());
    }
}

json receipt_to_json(const ledger::Receipt& r) {
    json j = {{"tx_hash", r.tx_hash.hex()},
              {"block_number", r.block_number},
              {"index", r.index},
              {"function", std::string(ledger::to_string(r.function))},
              {"from", r.from.hex()},
              {"status", r.success() ? "Success" : "Reverted"},
              {"revert_reason", r.success() ? json(nullptr) : json(r.revert_reason)},
              {"gas_used", r.gas_used},
              {"gas_price", wei_to_string(r.gas_price)},
              {"fee_wei", wei_to_string(r.fee_wei)},
              {"return_value", r.return_value ? json(*r.return_value) : json(nullptr)}};
    return j;
}

json keypair_to_json(const KeyPair& key) {
    return {{"secret_hex", to_hex(key.secret_key())},
            {"public_hex", to_hex(key.public_key().bytes)},
            {"address", key.address().hex()}};
}

KeyPair keypair_from_json(const json& j) {
    expect_keys(j, {"secret_hex"}, {"public_hex", "address"}, "keypair");
    KeyPair key = KeyPair::from_seed(fixed_from_hex<32>(str(j, "secret_hex")));
    if (j.contains("public_hex") && hex<PublicKey>(j, "public_hex") != key.public_key()) {
        fail("keypair public_hex does not match secret_hex");
    }
    if (j.contains("address") && hex<Address>(j, "address") != key.address()) {
        fail("keypair address does not match secret_hex");
    }
    return key;
}

std::string canonical_dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::strict); }

}  // namespace trating::codec
