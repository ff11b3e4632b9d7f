#include "trating/trating.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "trating/blocklog.hpp"
#include "trating/cost_report.hpp"
#include "trating/json_codec.hpp"
#include "trating/netsim.hpp"
#include "trating/node.hpp"

using namespace trating;
using nlohmann::json;

struct tr_keypair {
    KeyPair key;
};

struct tr_node {
    std::unique_ptr<node::Node> node;
};

namespace {

thread_local std::string g_last_error;

tr_status status_of(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidArgument: return TR_ERR_INVALID_ARGUMENT;
        case ErrorCode::Parse: return TR_ERR_PARSE;
        case ErrorCode::Crypto: return TR_ERR_CRYPTO;
        case ErrorCode::Io: return TR_ERR_IO;
        case ErrorCode::Overflow: return TR_ERR_OVERFLOW;
        case ErrorCode::Config: return TR_ERR_CONFIG;
        case ErrorCode::Internal: return TR_ERR_INTERNAL;
    }
    return TR_ERR_INTERNAL;
}

template <typename F>
tr_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return TR_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const json::exception& e) {
        g_last_error = e.what();
        return TR_ERR_PARSE;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TR_ERR_INTERNAL;
    }
}

void require(const void* p, const char* name) {
    if (!p) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

json parse(const char* text, const char* what) {
    require(text, what);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string(what) + " is not valid JSON: " + e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

extern "C" {

const char* tr_last_error(void) { return g_last_error.c_str(); }

const char* tr_status_name(tr_status status) {
    switch (status) {
        case TR_OK: return "ok";
        case TR_ERR_INVALID_ARGUMENT: return "invalid argument";
        case TR_ERR_PARSE: return "parse error";
        case TR_ERR_CRYPTO: return "crypto error";
        case TR_ERR_IO: return "i/o error";
        case TR_ERR_OVERFLOW: return "overflow";
        case TR_ERR_CONFIG: return "configuration error";
        case TR_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* tr_version(void) { return "0.1.0"; }

void tr_string_free(char* s) { std::free(s); }

tr_status tr_keypair_generate(tr_keypair** out) {
    return guarded([&] {
        require(out, "out");
        *out = new tr_keypair{KeyPair::random()};
    });
}

tr_status tr_keypair_from_secret_hex(const char* secret_hex, tr_keypair** out) {
    return guarded([&] {
        require(secret_hex, "secret_hex");
        require(out, "out");
        *out = new tr_keypair{KeyPair::from_seed(fixed_from_hex<32>(secret_hex))};
    });
}

tr_status tr_keypair_load(const char* path, tr_keypair** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new tr_keypair{node::load_keypair_file(path)};
    });
}

tr_status tr_keypair_save(const tr_keypair* key, const char* path) {
    return guarded([&] {
        require(key, "key");
        require(path, "path");
        node::save_keypair_file(path, key->key);
    });
}

tr_status tr_keypair_address(const tr_keypair* key, char** out_hex) {
    return guarded([&] {
        require(key, "key");
        require(out_hex, "out_hex");
        *out_hex = dup(key->key.address().hex());
    });
}

tr_status tr_keypair_to_json(const tr_keypair* key, char** out_json) {
    return guarded([&] {
        require(key, "key");
        require(out_json, "out_json");
        *out_json = dup(codec::keypair_to_json(key->key).dump(2));
    });
}

void tr_keypair_free(tr_keypair* key) { delete key; }

tr_status tr_tx_build(const tr_keypair* key, const char* request_json, char** out_tx_json) {
    return guarded([&] {
        require(key, "key");
        require(out_tx_json, "out_tx_json");
        json r = parse(request_json, "request");
        if (!r.is_object()) throw Error(ErrorCode::Parse, "request must be an object");
        for (const auto& [k, _] : r.items()) {
            if (k != "nonce" && k != "to" && k != "function" && k != "args" && k != "value" && k != "gas_limit" &&
                k != "gas_price") {
                throw Error(ErrorCode::Parse, "unknown request field '" + k + "'");
            }
        }
        auto f = ledger::function_from_string(r.at("function").get<std::string>());
        if (!f) throw Error(ErrorCode::Parse, "unknown function");
        ledger::Transaction tx;
        tx.nonce = r.at("nonce").get<std::uint64_t>();
        tx.to = Address::from_hex(r.at("to").get<std::string>());
        tx.call = codec::call_from_json(*f, r.value("args", json::object()));
        auto wei_of = [&](const char* k) -> Wei {
            if (!r.contains(k)) return 0;
            const json& v = r.at(k);
            return v.is_string() ? wei_from_string(v.get<std::string>()) : Wei{v.get<std::uint64_t>()};
        };
        tx.value = wei_of("value");
        tx.gas_price = wei_of("gas_price");
        tx.gas_limit = r.contains("gas_limit") ? r.at("gas_limit").get<std::uint64_t>()
                                               : ledger::GasSchedule{}.intrinsic(*f);
        tx.sign_with(key->key);
        *out_tx_json = dup(codec::tx_to_json(tx).dump());
    });
}

tr_status tr_tx_hash(const char* tx_json, char** out_hash_hex) {
    return guarded([&] {
        require(out_hash_hex, "out_hash_hex");
        *out_hash_hex = dup(codec::tx_from_json(parse(tx_json, "tx_json")).hash().hex());
    });
}

tr_status tr_tx_encode(const char* tx_json, char** out_raw_hex) {
    return guarded([&] {
        require(out_raw_hex, "out_raw_hex");
        *out_raw_hex = dup("0x" + to_hex(codec::tx_from_json(parse(tx_json, "tx_json")).signed_bytes()));
    });
}

tr_status tr_tx_decode(const char* raw_hex, char** out_tx_json) {
    return guarded([&] {
        require(raw_hex, "raw_hex");
        require(out_tx_json, "out_tx_json");
        Bytes raw = from_hex(raw_hex);
        *out_tx_json = dup(codec::tx_to_json(ledger::Transaction::decode(raw)).dump());
    });
}

tr_status tr_tx_verify(const char* tx_json, int* out_valid) {
    return guarded([&] {
        require(out_valid, "out_valid");
        ledger::Transaction tx = codec::tx_from_json(parse(tx_json, "tx_json"));
        *out_valid = derive_address(tx.public_key) == tx.from && verify(tx.public_key, tx.unsigned_bytes(), tx.signature);
    });
}

tr_status tr_hash_hex(const uint8_t* data, size_t len, char** out_hex) {
    return guarded([&] {
        if (len > 0) require(data, "data");
        require(out_hex, "out_hex");
        *out_hex = dup(hash32(ByteView(data, len)).hex());
    });
}

tr_status tr_fee(uint64_t gas_used, const char* gas_price_dec, char** out_fee_dec) {
    return guarded([&] {
        require(gas_price_dec, "gas_price_dec");
        require(out_fee_dec, "out_fee_dec");
        *out_fee_dec = dup(wei_to_string(ledger::compute_fee(gas_used, wei_from_string(gas_price_dec))));
    });
}

tr_status tr_genesis_init(const char* genesis_json, char** out_genesis_json) {
    return guarded([&] {
        require(out_genesis_json, "out_genesis_json");
        *out_genesis_json = dup(codec::genesis_to_json(codec::genesis_from_json(parse(genesis_json, "genesis"))).dump(2));
    });
}

tr_status tr_genesis_hash(const char* genesis_json, char** out_hash_hex) {
    return guarded([&] {
        require(out_hash_hex, "out_hash_hex");
        *out_hash_hex = dup(codec::genesis_from_json(parse(genesis_json, "genesis")).hash().hex());
    });
}

tr_status tr_log_verify(const char* genesis_json, const char* log_path, char** out_summary_json) {
    return guarded([&] {
        require(log_path, "log_path");
        require(out_summary_json, "out_summary_json");
        ledger::Genesis g = codec::genesis_from_json(parse(genesis_json, "genesis"));
        ledger::Chain chain = store::load_chain(g, read_file(log_path), store::TailPolicy::Strict);
        json out = {{"height", chain.height()},
                    {"head_hash", chain.head().hash.hex()},
                    {"state_digest", chain.state().digest().hex()},
                    {"total_balance", wei_to_string(chain.state().total_balance())},
                    {"total_minted", wei_to_string(chain.state().total_minted)},
                    {"genesis_total", wei_to_string(g.total_allocation())}};
        *out_summary_json = dup(out.dump(2));
    });
}

tr_status tr_sim_run(const char* config_json, char** out_report_json) {
    return tr_sim_summary(config_json, out_report_json, nullptr);
}

tr_status tr_sim_summary(const char* config_json, char** out_report_json, char** out_summary_text) {
    return guarded([&] {
        require(out_report_json, "out_report_json");
        netsim::SimConfig cfg = netsim::SimConfig::from_json(parse(config_json, "config"));
        netsim::SimReport report = netsim::run_simulation(cfg);
        std::string text = report.to_json().dump(2);
        std::string summary = report.summary();
        *out_report_json = dup(text);
        if (out_summary_text) *out_summary_text = dup(summary);
    });
}

tr_status tr_cost_report(const char* input, int input_is_csv, const char* gas_schedule_json, tr_cost_format format,
                         char** out) {
    return guarded([&] {
        require(input, "input");
        require(out, "out");
        cost::CostReportInput in =
            input_is_csv ? cost::cost_input_from_csv(input) : cost::cost_input_from_json(parse(input, "input"));
        ledger::GasSchedule schedule;
        if (gas_schedule_json) {
            json s = parse(gas_schedule_json, "gas_schedule");
            schedule.set_rate = s.value("SetRate", schedule.set_rate);
            schedule.get_rate = s.value("GetRate", schedule.get_rate);
            schedule.give_right_to_rate = s.value("GiveRightToRate", schedule.give_right_to_rate);
            schedule.create_product = s.value("CreateProduct", schedule.create_product);
        }
        cost::CostReport r = cost::cost_report(in, schedule);
        switch (format) {
            case TR_COST_JSON: *out = dup(r.to_json().dump(2)); break;
            case TR_COST_CSV: *out = dup(r.to_csv()); break;
            case TR_COST_TABLE: *out = dup(r.to_table()); break;
            default: throw Error(ErrorCode::InvalidArgument, "unknown cost report format");
        }
    });
}

tr_status tr_node_start(const char* config_json, tr_node** out) {
    return guarded([&] {
        require(out, "out");
        json c = parse(config_json, "config");
        static const char* kKeys[] = {"host",          "port",          "data_dir",         "genesis_path",
                                      "genesis",       "validator_key_path", "owner_key_path", "peers",
                                      "faucet_enabled", "ui_dir",       "advertise_url",    "seal_delay_ms",
                                      "sync_interval_ms", "crash_after_bytes", "verbose",   "wait_timeout_ms"};
        for (const auto& [k, _] : c.items()) {
            if (std::find_if(std::begin(kKeys), std::end(kKeys), [&](const char* s) { return k == s; }) ==
                std::end(kKeys)) {
                throw Error(ErrorCode::Config, "unknown node config field '" + k + "'");
            }
        }
        node::NodeConfig cfg;
        cfg.host = c.value("host", cfg.host);
        cfg.port = c.value("port", cfg.port);
        if (!c.contains("data_dir")) throw Error(ErrorCode::Config, "data_dir is required");
        cfg.data_dir = c.at("data_dir").get<std::string>();
        if (c.contains("genesis")) cfg.genesis = codec::genesis_from_json(c.at("genesis"));
        if (c.contains("genesis_path")) cfg.genesis = node::load_genesis_file(c.at("genesis_path").get<std::string>());
        if (c.contains("validator_key_path"))
            cfg.validator_key = node::load_keypair_file(c.at("validator_key_path").get<std::string>());
        if (c.contains("owner_key_path")) cfg.owner_key = node::load_keypair_file(c.at("owner_key_path").get<std::string>());
        if (c.contains("peers")) cfg.peers = c.at("peers").get<std::vector<std::string>>();
        cfg.faucet_enabled = c.value("faucet_enabled", cfg.faucet_enabled);
        if (c.contains("ui_dir")) cfg.ui_dir = c.at("ui_dir").get<std::string>();
        cfg.advertise_url = c.value("advertise_url", std::string());
        cfg.engine.seal_delay_ms = c.value("seal_delay_ms", cfg.engine.seal_delay_ms);
        cfg.engine.sync_interval_ms = c.value("sync_interval_ms", cfg.engine.sync_interval_ms);
        cfg.wait_timeout_ms = c.value("wait_timeout_ms", cfg.wait_timeout_ms);
        if (c.contains("crash_after_bytes")) cfg.crash.after_bytes = c.at("crash_after_bytes").get<std::uint64_t>();
        if (c.value("verbose", false)) {
            cfg.log = [](const std::string& m) { std::cerr << "[node] " << m << std::endl; };
        }
        auto handle = std::make_unique<tr_node>();
        handle->node = std::make_unique<node::Node>(std::move(cfg));
        handle->node->start();
        *out = handle.release();
    });
}

int tr_node_port(const tr_node* node) { return node ? node->node->port() : -1; }

tr_status tr_node_url(const tr_node* node, char** out_url) {
    return guarded([&] {
        require(node, "node");
        require(out_url, "out_url");
        *out_url = dup(node->node->url());
    });
}

tr_status tr_node_stop(tr_node* node) {
    return guarded([&] {
        require(node, "node");
        node->node->stop();
    });
}

void tr_node_free(tr_node* node) { delete node; }

}  // extern "C"
