#include <signal.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "trating/trating.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNode = 3;

/// Error carrying the process exit code.
struct Failure {
    int code;
    std::string message;
};

[[noreturn]] void usage_error(const std::string& m) { throw Failure{kExitUsage, m}; }
[[noreturn]] void node_error(const std::string& m) { throw Failure{kExitNode, m}; }

std::string take(char* s) {
    std::string out = s ? s : "";
    tr_string_free(s);
    return out;
}

void check(tr_status st, int code = kExitNode) {
    if (st != TR_OK) throw Failure{code, std::string(tr_status_name(st)) + ": " + tr_last_error()};
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) usage_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) usage_error("cannot write " + path);
    out << text;
}

struct Key {
    tr_keypair* handle = nullptr;
    explicit Key(const std::string& path) { check(tr_keypair_load(path.c_str(), &handle), kExitUsage); }
    ~Key() { tr_keypair_free(handle); }
    Key(const Key&) = delete;
    Key& operator=(const Key&) = delete;
    std::string address() const {
        char* out = nullptr;
        check(tr_keypair_address(handle, &out));
        return take(out);
    }
};

/// Accepts either a 0x address or the path of a keypair file.
std::string address_or_key(const std::string& v) {
    if (v.rfind("0x", 0) == 0 || v.rfind("0X", 0) == 0) return v;
    return Key(v).address();
}

// ---------------------------------------------------------------------------

struct Globals {
    std::string node = "http://127.0.0.1:7545";
    bool json_out = false;
};

class Api {
public:
    explicit Api(const std::string& url) : client_(url), url_(url) {
        client_.set_connection_timeout(3, 0);
        client_.set_read_timeout(60, 0);
        if (!client_.is_valid()) usage_error("invalid node URL " + url);
    }

    json get(const std::string& path, int* status = nullptr) {
        return handle(client_.Get(path), path, status);
    }

    json post(const std::string& path, const json& body, int* status = nullptr) {
        return handle(client_.Post(path, body.dump(), "application/json"), path, status);
    }

private:
    json handle(const httplib::Result& res, const std::string& path, int* status) {
        if (!res) node_error("cannot reach node at " + url_ + " (" + httplib::to_string(res.error()) + ")");
        json body;
        try {
            body = res->body.empty() ? json::object() : json::parse(res->body);
        } catch (const json::exception&) {
            node_error(path + ": node sent a non-JSON reply (HTTP " + std::to_string(res->status) + ")");
        }
        if (status) {
            *status = res->status;
        } else if (res->status >= 400) {
            node_error(body.value("error", "HTTP " + std::to_string(res->status)));
        }
        return body;
    }

    httplib::Client client_;
    std::string url_;
};

void print(const Globals& g, const json& j, const std::string& human) {
    if (g.json_out) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << human;
        if (!human.empty() && human.back() != '\n') std::cout << "\n";
    }
}

std::string value_str(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

/// Builds, signs locally and submits a contract call, then reports the receipt.
int send_call(const Globals& g, const std::string& key_path, const std::string& function, const json& args,
              std::optional<std::uint64_t> gas_limit, std::optional<std::string> gas_price, bool wait) {
    Key key(key_path);
    Api api(g.node);
    json status = api.get("/status");
    json account = api.get("/accounts/" + key.address());
    json req = {{"nonce", account.at("next_nonce")},
                {"to", status.at("contract_address")},
                {"function", function},
                {"args", args},
                {"gas_price", gas_price.value_or(status.at("gas_price_suggestion").get<std::string>())}};
    if (gas_limit) req["gas_limit"] = *gas_limit;
    char* tx_json = nullptr;
    check(tr_tx_build(key.handle, req.dump().c_str(), &tx_json));
    json tx = json::parse(take(tx_json));
    int http = 0;
    json reply = api.post(wait ? "/transactions?wait=1" : "/transactions", tx, &http);
    if (http >= 400) node_error(reply.value("error", "transaction rejected"));
    if (!wait || reply.value("pending", true)) {
        print(g, reply, "submitted " + reply.value("tx_hash", std::string()) + (wait ? " (still pending)" : ""));
        return kExitOk;
    }
    const json& r = reply.at("receipt");
    if (r.at("status") != "Success") {
        if (g.json_out) std::cout << reply.dump(2) << "\n";
        std::cerr << "reverted: " << r.at("revert_reason").get<std::string>() << "\n";
        return kExitNode;
    }
    std::ostringstream os;
    os << function << " ok in block " << r.at("block_number") << ": tx " << r.at("tx_hash").get<std::string>()
       << ", gas_used " << r.at("gas_used") << ", fee " << r.at("fee_wei").get<std::string>() << " wei";
    if (!r.at("return_value").is_null()) os << ", result " << r.at("return_value");
    print(g, reply, os.str());
    return kExitOk;
}

// ---------------------------------------------------------------------------

std::string derived_product_address(const std::string& name) {
    std::string seed = "product:" + name;
    char* out = nullptr;
    check(tr_hash_hex(reinterpret_cast<const uint8_t*>(seed.data()), seed.size(), &out));
    std::string h = take(out);
    return "0x" + h.substr(h.size() - 40);
}

const std::vector<std::string> kRestaurants = {"Kaza Restaurant", "4 Season Restaurant", "Ming Restaurant",
                                               "House Cafe"};

int run_node(const json& config) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    tr_node* node = nullptr;
    check(tr_node_start(config.dump().c_str(), &node));
    char* url = nullptr;
    check(tr_node_url(node, &url));
    std::cout << "listening on " << take(url) << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    tr_node_stop(node);
    tr_node_free(node);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transparent rating chain: keys, genesis, node, transactions, explorer, simulation, costs"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--node", g.node, "Node base URL")->capture_default_str();
    app.add_flag("--json", g.json_out, "Machine-readable output");

    std::function<int()> action;

    // keygen
    std::string keygen_out;
    auto* keygen = app.add_subcommand("keygen", "Create a keypair file (mode 0600)");
    keygen->add_option("--out,-o", keygen_out, "Keypair file to create")->required();
    keygen->callback([&] {
        action = [&] {
            tr_keypair* k = nullptr;
            check(tr_keypair_generate(&k));
            tr_status st = tr_keypair_save(k, keygen_out.c_str());
            char* addr = nullptr;
            tr_keypair_address(k, &addr);
            std::string a = take(addr);
            tr_keypair_free(k);
            check(st, kExitUsage);
            print(g, {{"address", a}, {"path", keygen_out}}, a);
            return kExitOk;
        };
    });

    // genesis-init
    std::vector<std::string> gi_authorities, gi_products, gi_raters, gi_balances;
    std::string gi_owner, gi_out, gi_mode = "corrected", gi_scope = "per-product", gi_fund = "100000000000000000000";
    std::uint64_t gi_chain_id = 5777, gi_gas_limit = 6721975, gi_slot = 2, gi_window = 10;
    std::string gi_grant = "1000000000000000000", gi_price = "2000000000";
    bool gi_restaurants = false, gi_no_faucet = false;
    auto* gi = app.add_subcommand("genesis-init", "Write a genesis file");
    gi->add_option("--authority", gi_authorities, "Validator address or keypair file, in turn order")->required();
    gi->add_option("--owner", gi_owner, "Contract owner address or keypair file")->required();
    gi->add_option("--product", gi_products, "Product as NAME or NAME=0xADDRESS");
    gi->add_flag("--restaurants", gi_restaurants, "Seed the four example restaurants");
    gi->add_option("--rater", gi_raters, "Rater granted at genesis (address or keypair file)");
    gi->add_option("--balance", gi_balances, "Extra allocation ADDRESS=WEI");
    gi->add_option("--fund", gi_fund, "Allocation for owner and authorities, in wei")->capture_default_str();
    gi->add_option("--mode", gi_mode, "corrected or paper-literal")->capture_default_str();
    gi->add_option("--scope", gi_scope, "per-product or global")->capture_default_str();
    gi->add_option("--chain-id", gi_chain_id)->capture_default_str();
    gi->add_option("--gas-limit", gi_gas_limit)->capture_default_str();
    gi->add_option("--slot-deadline", gi_slot, "Seconds before the next authority may seal")->capture_default_str();
    gi->add_option("--faucet-grant", gi_grant, "Faucet credit in wei")->capture_default_str();
    gi->add_option("--faucet-window", gi_window, "Blocks between grants to one address")->capture_default_str();
    gi->add_option("--gas-price", gi_price, "Suggested gas price in wei")->capture_default_str();
    gi->add_flag("--no-faucet", gi_no_faucet);
    gi->add_option("--out,-o", gi_out, "Genesis file to write")->required();
    gi->callback([&] {
        action = [&] {
            json auths = json::array();
            json balances = json::object();
            for (const auto& a : gi_authorities) {
                std::string addr = address_or_key(a);
                auths.push_back(addr);
                balances[addr] = gi_fund;
            }
            std::string owner = address_or_key(gi_owner);
            balances[owner] = gi_fund;
            for (const auto& b : gi_balances) {
                auto eq = b.find('=');
                if (eq == std::string::npos) usage_error("--balance expects ADDRESS=WEI");
                balances[address_or_key(b.substr(0, eq))] = b.substr(eq + 1);
            }
            json products = json::array();
            std::vector<std::string> entries = gi_restaurants ? kRestaurants : std::vector<std::string>{};
            entries.insert(entries.end(), gi_products.begin(), gi_products.end());
            for (const auto& p : entries) {
                auto eq = p.find('=');
                std::string name = p.substr(0, eq);
                std::string addr = eq == std::string::npos ? derived_product_address(name) : p.substr(eq + 1);
                products.push_back({{"address", addr}, {"name", name}});
            }
            json raters = json::array();
            for (const auto& r : gi_raters) raters.push_back(address_or_key(r));
            json spec = {{"chain_id", gi_chain_id},
                         {"gas_limit", gi_gas_limit},
                         {"slot_deadline_seconds", gi_slot},
                         {"authorities", auths},
                         {"owner", owner},
                         {"averaging_mode", gi_mode},
                         {"rating_scope", gi_scope},
                         {"faucet_enabled", !gi_no_faucet},
                         {"faucet_grant_wei", gi_grant},
                         {"faucet_window_blocks", gi_window},
                         {"gas_price_suggestion", gi_price},
                         {"balances", balances},
                         {"products", products},
                         {"raters", raters}};
            char* out = nullptr;
            check(tr_genesis_init(spec.dump().c_str(), &out), kExitUsage);
            std::string text = take(out);
            write_text(gi_out, text + "\n");
            char* h = nullptr;
            check(tr_genesis_hash(text.c_str(), &h));
            std::string hash = take(h);
            print(g, {{"path", gi_out}, {"genesis_hash", hash}}, "wrote " + gi_out + " (genesis " + hash + ")");
            return kExitOk;
        };
    });

    // run-node
    std::string rn_data, rn_genesis, rn_key, rn_owner, rn_host = "127.0.0.1", rn_ui, rn_advertise;
    std::vector<std::string> rn_peers;
    int rn_port = 7545;
    bool rn_no_faucet = false, rn_quiet = false;
    std::optional<std::uint64_t> rn_seal_delay, rn_sync, rn_crash;
    auto* rn = app.add_subcommand("run-node", "Run a node until interrupted");
    rn->add_option("--data-dir", rn_data, "Directory for genesis.json and blocks.jsonl")->required();
    rn->add_option("--genesis", rn_genesis, "Genesis file (needed on first start)");
    rn->add_option("--key", rn_key, "Validator keypair file; omit for an observer node");
    rn->add_option("--owner-key", rn_owner, "Contract owner keypair, enables POST /demo/grant");
    rn->add_option("--host", rn_host)->capture_default_str();
    rn->add_option("--port", rn_port)->capture_default_str();
    rn->add_option("--peer", rn_peers, "Peer base URL, repeatable");
    rn->add_option("--advertise", rn_advertise, "URL peers should use to reach this node");
    rn->add_option("--ui-dir", rn_ui, "Static files served under /ui");
    rn->add_flag("--no-faucet", rn_no_faucet);
    rn->add_option("--seal-delay-ms", rn_seal_delay);
    rn->add_option("--sync-interval-ms", rn_sync);
    rn->add_option("--crash-after-bytes", rn_crash, "Testing: die partway through the log write at this byte")
        ->group("");
    rn->add_flag("--quiet", rn_quiet, "No diagnostics on stderr");
    rn->callback([&] {
        action = [&] {
            json c = {{"host", rn_host}, {"port", rn_port}, {"data_dir", rn_data}, {"peers", rn_peers},
                      {"faucet_enabled", !rn_no_faucet}, {"verbose", !rn_quiet}};
            if (!rn_genesis.empty()) c["genesis_path"] = rn_genesis;
            if (!rn_key.empty()) c["validator_key_path"] = rn_key;
            if (!rn_owner.empty()) c["owner_key_path"] = rn_owner;
            if (!rn_ui.empty()) c["ui_dir"] = rn_ui;
            if (!rn_advertise.empty()) c["advertise_url"] = rn_advertise;
            if (rn_seal_delay) c["seal_delay_ms"] = *rn_seal_delay;
            if (rn_sync) c["sync_interval_ms"] = *rn_sync;
            if (rn_crash) c["crash_after_bytes"] = *rn_crash;
            return run_node(c);
        };
    });

    // grant / rate / get-rate / create-product
    std::string tx_key, tx_rater, tx_product, tx_name;
    int tx_value = -1;
    std::optional<std::uint64_t> tx_gas_limit;
    std::optional<std::string> tx_gas_price;
    bool tx_no_wait = false;
    auto add_tx_opts = [&](CLI::App* sub) {
        sub->add_option("--key", tx_key, "Signing keypair file")->required();
        sub->add_option("--gas-limit", tx_gas_limit);
        sub->add_option("--gas-price", tx_gas_price, "Wei per gas; defaults to the node's suggestion");
        sub->add_flag("--no-wait", tx_no_wait, "Return after submission instead of waiting for the receipt");
    };
    auto* grant = app.add_subcommand("grant", "Owner grants a rater the right to rate");
    add_tx_opts(grant);
    grant->add_option("--rater", tx_rater, "Rater address or keypair file")->required();
    grant->callback([&] {
        action = [&] {
            return send_call(g, tx_key, "GiveRightToRate", {{"rater", address_or_key(tx_rater)}}, tx_gas_limit,
                             tx_gas_price, !tx_no_wait);
        };
    });
    auto* rate = app.add_subcommand("rate", "Rate a product");
    add_tx_opts(rate);
    rate->add_option("--product", tx_product)->required();
    rate->add_option("--value", tx_value, "Rating 0-100")->required()->check(CLI::Range(0, 255));
    rate->callback([&] {
        action = [&] {
            return send_call(g, tx_key, "SetRate", {{"product", tx_product}, {"value", tx_value}}, tx_gas_limit,
                             tx_gas_price, !tx_no_wait);
        };
    });
    auto* get_rate = app.add_subcommand("get-rate", "Read a rating through a GetRate transaction");
    add_tx_opts(get_rate);
    get_rate->add_option("--product", tx_product)->required();
    get_rate->callback([&] {
        action = [&] {
            return send_call(g, tx_key, "GetRate", {{"product", tx_product}}, tx_gas_limit, tx_gas_price, !tx_no_wait);
        };
    });
    auto* create = app.add_subcommand("create-product", "Owner registers a product");
    add_tx_opts(create);
    create->add_option("--name", tx_name)->required();
    create->add_option("--product", tx_product, "Product address; derived from the name when omitted");
    create->callback([&] {
        action = [&] {
            std::string addr = tx_product.empty() ? derived_product_address(tx_name) : tx_product;
            return send_call(g, tx_key, "CreateProduct", {{"product", addr}, {"name", tx_name}}, tx_gas_limit,
                             tx_gas_price, !tx_no_wait);
        };
    });

    // rating / products / account / faucet
    std::string q_product, q_address;
    auto* rating = app.add_subcommand("rating", "Print a product's current rating");
    rating->add_option("--product", q_product)->required();
    rating->callback([&] {
        action = [&] {
            json r = Api(g.node).get("/products/" + q_product + "/rating");
            if (!r.at("found").get<bool>()) node_error("unknown product " + q_product);
            print(g, r, r.at("rating").dump());
            return kExitOk;
        };
    });
    auto* products = app.add_subcommand("products", "List products and ratings");
    products->callback([&] {
        action = [&] {
            json r = Api(g.node).get("/products");
            std::ostringstream os;
            os << "ID  Name                          Avg Rate  Raters  Address\n";
            for (const auto& p : r) {
                char line[256];
                std::snprintf(line, sizeof line, "%-3s %-29s %8s %7s  %s\n", p.at("id").dump().c_str(),
                              p.at("name").get<std::string>().c_str(), p.at("rating").dump().c_str(),
                              p.at("no_raters").dump().c_str(), p.at("address").get<std::string>().c_str());
                os << line;
            }
            print(g, r, os.str());
            return kExitOk;
        };
    });
    auto* account = app.add_subcommand("account", "Show balance, nonce and rating right");
    account->add_option("--address", q_address, "Address or keypair file")->required();
    account->callback([&] {
        action = [&] {
            json r = Api(g.node).get("/accounts/" + address_or_key(q_address));
            std::ostringstream os;
            os << r.at("address").get<std::string>() << "\n  balance " << r.at("balance_wei").get<std::string>()
               << " wei\n  nonce " << r.at("nonce") << "\n  weight " << r.at("weight") << "\n  rated "
               << r.at("rated_products").size() << " product(s)";
            print(g, r, os.str());
            return kExitOk;
        };
    });
    auto* faucet = app.add_subcommand("faucet", "Request trial currency from a validator node");
    faucet->add_option("--address", q_address, "Address or keypair file")->required();
    faucet->callback([&] {
        action = [&] {
            int http = 0;
            json r = Api(g.node).post("/faucet", {{"address", address_or_key(q_address)}}, &http);
            if (http >= 400) node_error(r.value("error", "faucet request failed"));
            print(g, r, "minted " + r.value("minted_wei", std::string("?")) + " wei to " + r.value("address", q_address));
            return kExitOk;
        };
    });

    // explorer
    std::optional<std::uint64_t> b_from, b_to, b_number;
    auto* blocks = app.add_subcommand("blocks", "List blocks, newest first, or show one block");
    blocks->add_option("--from", b_from);
    blocks->add_option("--to", b_to);
    blocks->add_option("--number", b_number, "Show the full block at this height");
    blocks->callback([&] {
        action = [&] {
            Api api(g.node);
            if (b_number) {
                json b = api.get("/blocks/" + std::to_string(*b_number));
                std::ostringstream os;
                os << "block " << b.at("number") << " " << value_str(b.at("block_hash")) << "\n  mined_on "
                   << b.at("mined_on") << "  gas_used " << b.at("gas_used") << "  txs " << b.at("transactions").size()
                   << "\n";
                for (const auto& r : b.at("receipts")) {
                    os << "  " << r.at("tx_hash").get<std::string>() << " " << r.at("function").get<std::string>()
                       << " from " << r.at("from").get<std::string>() << " " << r.at("status").get<std::string>();
                    if (!r.at("revert_reason").is_null()) os << " \"" << r.at("revert_reason").get<std::string>() << "\"";
                    os << " gas " << r.at("gas_used") << "\n";
                }
                print(g, b, os.str());
                return kExitOk;
            }
            std::string q = "/blocks?";
            if (b_from) q += "from=" + std::to_string(*b_from) + "&";
            if (b_to) q += "to=" + std::to_string(*b_to);
            json list = api.get(q);
            std::ostringstream os;
            os << "BLOCK  MINED ON      GAS USED  TXS  HASH\n";
            for (const auto& b : list) {
                char line[256];
                std::snprintf(line, sizeof line, "%-6s %-12s %9s %4s  %s\n", b.at("number").dump().c_str(),
                              b.at("mined_on").dump().c_str(), b.at("gas_used").dump().c_str(),
                              b.at("tx_count").dump().c_str(), b.at("block_hash").get<std::string>().c_str());
                os << line;
            }
            print(g, list, os.str());
            return kExitOk;
        };
    });
    std::string q_hash;
    auto* tx = app.add_subcommand("tx", "Show a transaction and its receipt");
    tx->add_option("--hash", q_hash)->required();
    tx->callback([&] {
        action = [&] {
            json t = Api(g.node).get("/tx/" + q_hash);
            print(g, t, t.dump(2));
            return kExitOk;
        };
    });
    auto* status = app.add_subcommand("status", "Show chain parameters and head");
    status->callback([&] {
        action = [&] {
            Api api(g.node);
            json s = api.get("/status");
            json h = api.get("/chain/head");
            s["head"] = h;
            std::ostringstream os;
            os << "chain " << s.at("chain_id") << ", head " << h.at("number") << " "
               << h.at("block_hash").get<std::string>() << "\n  gas limit " << s.at("gas_limit") << ", gas price "
               << s.at("gas_price_suggestion").get<std::string>() << " wei, mode " << s.at("mode").get<std::string>()
               << "\n  contract " << s.at("contract_address").get<std::string>();
            print(g, s, os.str());
            return kExitOk;
        };
    });

    // sim
    std::string sim_config, sim_out;
    auto* sim = app.add_subcommand("sim", "Run a deterministic network simulation");
    sim->add_option("config", sim_config, "SimConfig JSON file")->required();
    sim->add_option("--out,-o", sim_out, "Write the report JSON here");
    sim->callback([&] {
        action = [&] {
            std::string cfg = read_text(sim_config);
            char* report = nullptr;
            char* summary = nullptr;
            check(tr_sim_summary(cfg.c_str(), &report, &summary), kExitUsage);
            std::string r = take(report), s = take(summary);
            if (!sim_out.empty()) write_text(sim_out, r + "\n");
            json j = json::parse(r);
            print(g, j, s);
            return j.at("converged").get<bool>() && j.at("conservation").at("ok").get<bool>() ? kExitOk : kExitNode;
        };
    });

    // cost-report
    std::string cr_input, cr_format = "table", cr_out, cr_schedule;
    auto* cr = app.add_subcommand("cost-report", "Daily and total transaction cost from gas usage");
    cr->add_option("input", cr_input, "Input JSON or CSV (by extension)")->required();
    cr->add_option("--format", cr_format, "table, json or csv")
        ->check(CLI::IsMember({"table", "json", "csv"}))
        ->capture_default_str();
    cr->add_option("--gas-schedule", cr_schedule, "JSON file overriding per-function gas");
    cr->add_option("--out,-o", cr_out);
    cr->callback([&] {
        action = [&] {
            std::string in = read_text(cr_input);
            bool csv = cr_input.size() >= 4 && cr_input.substr(cr_input.size() - 4) == ".csv";
            std::string schedule = cr_schedule.empty() ? "" : read_text(cr_schedule);
            tr_cost_format fmt = g.json_out || cr_format == "json" ? TR_COST_JSON
                                 : cr_format == "csv"              ? TR_COST_CSV
                                                                   : TR_COST_TABLE;
            char* out = nullptr;
            check(tr_cost_report(in.c_str(), csv, schedule.empty() ? nullptr : schedule.c_str(), fmt, &out), kExitUsage);
            std::string text = take(out);
            if (!cr_out.empty()) {
                write_text(cr_out, text);
            } else {
                std::cout << text;
                if (!text.empty() && text.back() != '\n') std::cout << "\n";
            }
            return kExitOk;
        };
    });

    // log-verify
    std::string lv_genesis, lv_log;
    auto* lv = app.add_subcommand("log-verify", "Replay a block log file against its genesis");
    lv->add_option("--genesis", lv_genesis)->required();
    lv->add_option("--log", lv_log)->required();
    lv->callback([&] {
        action = [&] {
            std::string genesis = read_text(lv_genesis);
            char* out = nullptr;
            check(tr_log_verify(genesis.c_str(), lv_log.c_str(), &out));
            json j = json::parse(take(out));
            print(g, j, "valid log: height " + j.at("height").dump() + ", head " + j.at("head_hash").get<std::string>());
            return kExitOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    try {
        return action ? action() : kExitUsage;
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const json::exception& e) {
        std::cerr << "error: unexpected reply: " << e.what() << "\n";
        return kExitNode;
    }
}
