#include "trating/node.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "trating/json_codec.hpp"

namespace trating::node {

namespace fs = std::filesystem;
using codec::json;
using consensus::PeerId;
using ledger::TxError;

const ledger::Receipt* Snapshot::receipt(const Digest& tx_hash) const {
    auto it = tx_index.find(tx_hash);
    if (it == tx_index.end()) return nullptr;
    const BlockEntry& e = *blocks[it->second.first - 1];
    return &e.receipts[it->second.second];
}

namespace {

std::uint64_t now_ms() {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
            .count());
}

std::string trim_url(std::string url) {
    while (!url.empty() && url.back() == '/') url.pop_back();
    return url;
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void error_reply(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
    extra["error"] = message;
    reply(res, status, extra);
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("request body is not valid JSON: ") + e.what());
    }
}

Address body_address(const json& body) {
    if (!body.is_object() || !body.contains("address") || !body["address"].is_string()) {
        throw Error(ErrorCode::Parse, "body must be {\"address\": \"0x...\"}");
    }
    return Address::from_hex(body["address"].get<std::string>());
}

bool truthy(const httplib::Request& req, const char* name, bool fallback) {
    if (!req.has_param(name)) return fallback;
    std::string v = req.get_param_value(name);
    return v.empty() || v == "1" || v == "true" || v == "yes";
}

std::optional<std::uint64_t> u64_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    const std::string v = req.get_param_value(name);
    if (v.empty() || v.size() > 19 || v.find_first_not_of("0123456789") != std::string::npos) {
        throw Error(ErrorCode::Parse, std::string("query parameter '") + name + "' must be a non-negative integer");
    }
    return std::stoull(v);
}

constexpr std::size_t kPeerQueueLimit = 4096;
constexpr std::uint64_t kMaxBlocksPerPage = 1000;
constexpr Gas kOwnerGrantGasLimit = 100000;

}  // namespace

struct Node::Impl {
    NodeConfig cfg;
    ledger::Genesis genesis;
    std::unique_ptr<consensus::Engine> engine;
    std::unique_ptr<store::BlockLog> log;
    bool torn_tail = false;

    httplib::Server server;
    int bound_port = 0;
    std::string self_url;
    std::thread http_thread;
    std::thread writer_thread;

    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::function<void(std::uint64_t)>> tasks;
    std::atomic<bool> stopping = false;
    bool started = false;
    bool stopped = false;
    std::condition_variable stopped_cv;

    mutable std::mutex snap_mu;
    std::condition_variable snap_cv;
    std::shared_ptr<const Snapshot> snap;
    bool dirty = true;
    std::optional<std::uint64_t> changed_from;

    struct Peer {
        std::string url;
        std::mutex mu;
        std::condition_variable cv;
        std::deque<Bytes> queue;
        std::thread thread;
    };
    std::mutex peers_mu;
    std::vector<std::unique_ptr<Peer>> peers;
    std::unordered_map<std::string, PeerId> peer_ids;

    struct GossipOutbox : consensus::Outbox {
        Impl& node;
        explicit GossipOutbox(Impl& n) : node(n) {}
        void send(PeerId to, const net::Message& m) override { node.enqueue(to, net::encode(m)); }
        void broadcast(const net::Message& m, std::optional<PeerId> except) override {
            Bytes bytes = net::encode(m);
            std::size_t count;
            {
                std::lock_guard lk(node.peers_mu);
                count = node.peers.size();
            }
            for (PeerId p = 0; p < count; ++p)
                if (!except || *except != p) node.enqueue(p, bytes);
        }
    };
    GossipOutbox outbox{*this};

    explicit Impl(NodeConfig c) : cfg(std::move(c)) {
        store::Recovered r = store::recover_state(cfg.data_dir, cfg.genesis);
        genesis = r.chain.genesis();
        torn_tail = r.torn_tail;
        log = std::move(r.log);
        log->set_crash_injection(cfg.crash);
        if (torn_tail) note("warning: dropped a torn final record (" + std::to_string(r.dropped_bytes) + " bytes)");
        if (cfg.validator_key && !genesis.authorities.contains(cfg.validator_key->address())) {
            throw Error(ErrorCode::Config,
                        "validator key " + cfg.validator_key->address().hex() + " is not in the genesis authority set");
        }
        if (cfg.faucet_grant_wei && *cfg.faucet_grant_wei != genesis.faucet_grant_wei) {
            throw Error(ErrorCode::Config, "faucet grant must equal the genesis faucet_grant_wei " +
                                               wei_to_string(genesis.faucet_grant_wei));
        }
        if (cfg.owner_key && cfg.owner_key->address() != genesis.owner) {
            throw Error(ErrorCode::Config, "owner key does not match the genesis owner");
        }
        engine = std::make_unique<consensus::Engine>(std::move(r.chain), cfg.validator_key, cfg.engine);
        engine->set_listener([this](std::uint64_t fork, std::span<const ledger::Block> added) {
            if (fork < log->height()) log->truncate_to(fork);
            for (const auto& b : added) log->append(b);
            changed_from = std::min(changed_from.value_or(fork), fork);
            dirty = true;
        });
        note("recovered at height " + std::to_string(engine->chain().height()));
        publish();
    }

    void note(const std::string& msg) const {
        if (cfg.log) cfg.log(msg);
    }

    bool is_validator() const { return cfg.validator_key.has_value(); }

    // -- commit loop ------------------------------------------------------------

    template <typename F>
    auto on_writer(F f) -> std::future<decltype(f(std::uint64_t{}))> {
        using R = decltype(f(std::uint64_t{}));
        auto task = std::make_shared<std::packaged_task<R(std::uint64_t)>>(std::move(f));
        auto fut = task->get_future();
        {
            std::lock_guard lk(mu);
            if (stopping) throw Error(ErrorCode::Io, "node is stopping");
            tasks.push_back([task](std::uint64_t now) { (*task)(now); });
        }
        cv.notify_all();
        return fut;
    }

    void publish() {
        std::shared_ptr<const Snapshot> prev;
        {
            std::lock_guard lk(snap_mu);
            prev = snap;
        }
        const ledger::Chain& chain = engine->chain();
        auto s = std::make_shared<Snapshot>();
        std::uint64_t keep = 0;
        if (prev) {
            keep = std::min({changed_from.value_or(prev->height), prev->height, chain.height()});
            s->blocks.assign(prev->blocks.begin(), prev->blocks.begin() + static_cast<std::ptrdiff_t>(keep));
            s->tx_index = prev->tx_index;
            for (std::uint64_t h = keep; h < prev->height; ++h)
                for (const auto& tx : prev->blocks[h]->block.transactions) s->tx_index.erase(tx.hash());
        }
        for (std::uint64_t h = keep + 1; h <= chain.height(); ++h) {
            auto e = std::make_shared<BlockEntry>();
            e->block = *chain.block_at(h);
            for (std::uint32_t i = 0; i < e->block.transactions.size(); ++i) {
                Digest th = e->block.transactions[i].hash();
                e->receipts.push_back(*chain.receipt(th));
                s->tx_index[th] = {h, i};
            }
            s->blocks.push_back(std::move(e));
        }
        s->height = chain.height();
        s->head_hash = chain.head().hash;
        s->head_timestamp = chain.head().timestamp;
        s->state = chain.state();
        s->pending = engine->pending();
        changed_from.reset();
        dirty = false;
        {
            std::lock_guard lk(snap_mu);
            snap = std::move(s);
        }
        snap_cv.notify_all();
    }

    void writer_loop() {
        try {
            while (true) {
                std::deque<std::function<void(std::uint64_t)>> batch;
                auto wake = engine->next_wakeup_ms();
                std::uint64_t now = now_ms();
                std::uint64_t wait = std::min<std::uint64_t>(1000, wake ? (*wake > now ? *wake - now : 0) : 1000);
                wait = std::max<std::uint64_t>(wait, 2);
                {
                    std::unique_lock lk(mu);
                    cv.wait_for(lk, std::chrono::milliseconds(wait), [&] { return stopping || !tasks.empty(); });
                    if (stopping) break;
                    batch.swap(tasks);
                }
                const std::size_t pool_before = engine->pending_count();
                for (auto& t : batch) t(now_ms());
                engine->tick(now_ms(), outbox);
                if (dirty || !batch.empty() || engine->pending_count() != pool_before) publish();
            }
        } catch (const std::exception& e) {
            note(std::string("fatal: commit loop stopped: ") + e.what());
            {
                std::lock_guard lk(mu);
                stopping = true;
                tasks.clear();
            }
            server.stop();
            snap_cv.notify_all();
            stopped_cv.notify_all();
        }
    }

    // -- gossip -------------------------------------------------------------------

    PeerId add_peer(const std::string& raw_url) {
        std::string url = trim_url(raw_url);
        std::lock_guard lk(peers_mu);
        if (auto it = peer_ids.find(url); it != peer_ids.end()) return it->second;
        PeerId id = static_cast<PeerId>(peers.size());
        auto p = std::make_unique<Peer>();
        p->url = url;
        Peer* raw = p.get();
        peers.push_back(std::move(p));
        peer_ids[url] = id;
        if (started) raw->thread = std::thread([this, raw] { peer_loop(*raw); });
        return id;
    }

    std::vector<PeerId> peer_list() {
        std::lock_guard lk(peers_mu);
        std::vector<PeerId> ids(peers.size());
        for (PeerId i = 0; i < ids.size(); ++i) ids[i] = i;
        return ids;
    }

    void enqueue(PeerId to, Bytes bytes) {
        Peer* p = nullptr;
        {
            std::lock_guard lk(peers_mu);
            if (to >= peers.size()) return;
            p = peers[to].get();
        }
        {
            std::lock_guard lk(p->mu);
            if (p->queue.size() >= kPeerQueueLimit) p->queue.pop_front();
            p->queue.push_back(std::move(bytes));
        }
        p->cv.notify_one();
    }

    bool is_stopping() const { return stopping; }

    void peer_loop(Peer& p) {
        httplib::Client client(p.url);
        client.set_connection_timeout(1, 0);
        client.set_read_timeout(5, 0);
        client.set_write_timeout(5, 0);
        std::uint64_t backoff_ms = 0;
        bool reported = false;
        while (true) {
            Bytes msg;
            {
                std::unique_lock lk(p.mu);
                p.cv.wait(lk, [&] { return !p.queue.empty() || is_stopping(); });
                if (is_stopping()) return;
                msg = p.queue.front();
            }
            httplib::Headers headers{{"X-Trating-Origin", self_url}};
            auto res = client.Post("/p2p/message", headers, reinterpret_cast<const char*>(msg.data()), msg.size(),
                                   "application/octet-stream");
            if (res && res->status >= 200 && res->status < 300) {
                std::lock_guard lk(p.mu);
                if (!p.queue.empty()) p.queue.pop_front();
                backoff_ms = 0;
                if (reported) note("peer " + p.url + " reachable again");
                reported = false;
                continue;
            }
            if (!reported) note("peer " + p.url + " unreachable, retrying with backoff");
            reported = true;
            backoff_ms = backoff_ms == 0 ? 100 : std::min<std::uint64_t>(backoff_ms * 2, 5000);
            std::unique_lock lk(p.mu);
            p.cv.wait_for(lk, std::chrono::milliseconds(backoff_ms), [&] { return is_stopping(); });
        }
    }

    // -- helpers --------------------------------------------------------------------

    std::shared_ptr<const Snapshot> current() const {
        std::lock_guard lk(snap_mu);
        return snap;
    }

    std::shared_ptr<const Snapshot> wait_for_receipt(const Digest& h) {
        auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(cfg.wait_timeout_ms);
        std::unique_lock lk(snap_mu);
        snap_cv.wait_until(lk, deadline, [&] { return snap->receipt(h) != nullptr || stopping; });
        return snap;
    }

    json receipt_reply(const Digest& h, const Snapshot& s) {
        const ledger::Receipt* r = s.receipt(h);
        json out = {{"tx_hash", h.hex()}};
        if (!r) {
            out["pending"] = true;
            return out;
        }
        out["pending"] = false;
        out["status"] = r->success() ? "Success" : "Reverted";
        out["revert_reason"] = r->success() ? json(nullptr) : json(r->revert_reason);
        out["receipt"] = codec::receipt_to_json(*r);
        return out;
    }

    /// Submits on the commit loop and answers 400, 202 or (when waiting) 200.
    void submit_and_reply(const ledger::Transaction& tx, bool wait, httplib::Response& res, json extra = json::object()) {
        TxError e = on_writer([&, tx](std::uint64_t now) { return engine->submit(tx, now, outbox); }).get();
        if (e != TxError::None) {
            error_reply(res, 400, "transaction rejected: " + std::string(ledger::to_string(e)),
                        {{"violation", std::string(ledger::to_string(e))}});
            return;
        }
        const Digest h = tx.hash();
        json out = extra;
        out["tx_hash"] = h.hex();
        if (!wait) {
            reply(res, 202, out);
            return;
        }
        auto s = wait_for_receipt(h);
        json r = receipt_reply(h, *s);
        out.update(r);
        reply(res, s->receipt(h) ? 200 : 202, out);
    }

    json block_summary(const ledger::Block& b) const {
        return {{"number", b.number},
                {"block_hash", b.block_hash.hex()},
                {"mined_on", b.timestamp},
                {"gas_used", b.gas_used},
                {"tx_count", b.transactions.size()},
                {"proposer", b.proposer.hex()},
                {"out_of_turn", b.out_of_turn}};
    }

    // -- routes ---------------------------------------------------------------------

    void install_routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server.set_payload_max_length(16 * 1024 * 1024);
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const Error& e) {
                int status = e.code() == ErrorCode::Parse || e.code() == ErrorCode::InvalidArgument ? 400 : 500;
                error_reply(res, status, e.what());
            } catch (const std::exception& e) {
                error_reply(res, 500, e.what());
            }
        });
        server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Post("/transactions", [this](const httplib::Request& req, httplib::Response& res) {
            ledger::Transaction tx;
            try {
                if (req.get_header_value("Content-Type").rfind("application/octet-stream", 0) == 0) {
                    tx = ledger::Transaction::decode(
                        ByteView(reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()));
                } else {
                    json j = parse_body(req);
                    if (j.is_object() && j.size() == 1 && j.contains("raw") && j["raw"].is_string()) {
                        Bytes raw = from_hex(j["raw"].get<std::string>());
                        tx = ledger::Transaction::decode(raw);
                    } else {
                        tx = codec::tx_from_json(j);
                    }
                }
            } catch (const Error& e) {
                error_reply(res, 400, e.what(), {{"violation", "Malformed"}});
                return;
            }
            submit_and_reply(tx, truthy(req, "wait", false), res);
        });

        server.Get(R"(/receipts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            Digest h = Digest::from_hex(req.matches[1].str());
            auto s = current();
            const ledger::Receipt* r = s->receipt(h);
            if (!r) {
                bool pending = std::any_of(s->pending.begin(), s->pending.end(),
                                           [&](const ledger::Transaction& t) { return t.hash() == h; });
                error_reply(res, 404, "receipt not found", {{"pending", pending}});
                return;
            }
            reply(res, 200, codec::receipt_to_json(*r));
        });

        server.Get("/products", [this](const httplib::Request&, httplib::Response& res) {
            auto s = current();
            std::vector<std::pair<Address, const contract::ProductRecord*>> rows;
            for (const auto& [a, p] : s->state.contract.products()) rows.emplace_back(a, &p);
            std::sort(rows.begin(), rows.end(),
                      [](const auto& x, const auto& y) { return x.second->ordinal < y.second->ordinal; });
            json out = json::array();
            for (const auto& [a, p] : rows) {
                out.push_back({{"id", p->ordinal},
                               {"address", a.hex()},
                               {"name", p->name},
                               {"rating", p->rating},
                               {"no_raters", p->no_raters}});
            }
            reply(res, 200, out);
        });

        server.Get(R"(/products/([^/]+)/rating)", [this](const httplib::Request& req, httplib::Response& res) {
            Address a = Address::from_hex(req.matches[1].str());
            auto s = current();
            const contract::ProductRecord* p = s->state.contract.product(a);
            reply(res, 200,
                  {{"address", a.hex()},
                   {"rating", s->state.contract.get_rate(a)},
                   {"no_raters", p ? p->no_raters : 0},
                   {"found", p != nullptr}});
        });

        server.Get(R"(/accounts/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            Address a = Address::from_hex(req.matches[1].str());
            auto s = current();
            std::uint64_t next = s->state.nonce(a);
            for (const auto& t : s->pending)
                if (t.from == a && t.nonce >= next) next = t.nonce + 1;
            const contract::RaterRecord* r = s->state.contract.rater(a);
            json rated = json::array();
            if (r)
                for (const auto& p : r->rated_products) rated.push_back(p.hex());
            reply(res, 200,
                  {{"address", a.hex()},
                   {"balance_wei", wei_to_string(s->state.balance(a))},
                   {"nonce", s->state.nonce(a)},
                   {"next_nonce", next},
                   {"weight", r ? r->weight : 0},
                   {"rater_id", r ? json(r->id) : json(nullptr)},
                   {"rated_products", rated}});
        });

        server.Post("/faucet", [this](const httplib::Request& req, httplib::Response& res) {
            if (!cfg.faucet_enabled || !genesis.faucet_enabled) {
                error_reply(res, 403, "faucet disabled");
                return;
            }
            if (!is_validator()) {
                error_reply(res, 403, "faucet unavailable: this node holds no validator key");
                return;
            }
            Address to = body_address(parse_body(req));
            if (to.is_zero()) throw Error(ErrorCode::Parse, "cannot mint to the zero address");
            auto built = on_writer([&, to](std::uint64_t) -> std::optional<ledger::Transaction> {
                const ledger::Chain& chain = engine->chain();
                const auto& last = chain.state().last_mint_height;
                if (auto it = last.find(to);
                    it != last.end() && chain.height() + 1 < it->second + genesis.faucet_window_blocks) {
                    return std::nullopt;
                }
                for (const auto& t : engine->pending())
                    if (t.function() == ledger::Function::Mint && t.to == to) return std::nullopt;
                ledger::Transaction tx;
                tx.nonce = engine->next_nonce(cfg.validator_key->address());
                tx.to = to;
                tx.call = ledger::MintArgs{};
                tx.value = genesis.faucet_grant_wei;
                tx.sign_with(*cfg.validator_key);
                return tx;
            }).get();
            if (!built) {
                error_reply(res, 429,
                            "faucet rate limit: one grant per address per " +
                                std::to_string(genesis.faucet_window_blocks) + " blocks");
                return;
            }
            submit_and_reply(*built, truthy(req, "wait", true), res,
                             {{"address", to.hex()}, {"minted_wei", wei_to_string(genesis.faucet_grant_wei)}});
        });

        server.Post("/demo/grant", [this](const httplib::Request& req, httplib::Response& res) {
            if (!cfg.owner_key) {
                error_reply(res, 404, "demo grant disabled: node holds no owner key");
                return;
            }
            Address rater = body_address(parse_body(req));
            auto s = current();
            if (const auto* r = s->state.contract.rater(rater); r && r->weight > 0) {
                reply(res, 200, {{"address", rater.hex()}, {"already_granted", true}});
                return;
            }
            ledger::Transaction tx = on_writer([&, rater](std::uint64_t) {
                ledger::Transaction t;
                t.nonce = engine->next_nonce(cfg.owner_key->address());
                t.to = genesis.contract_address;
                t.call = ledger::GiveRightToRateArgs{rater};
                t.gas_limit = kOwnerGrantGasLimit;
                t.gas_price = genesis.gas_price_suggestion;
                t.sign_with(*cfg.owner_key);
                return t;
            }).get();
            submit_and_reply(tx, truthy(req, "wait", true), res, {{"address", rater.hex()}, {"already_granted", false}});
        });

        server.Get("/blocks", [this](const httplib::Request& req, httplib::Response& res) {
            auto s = current();
            std::uint64_t to = std::min(u64_param(req, "to").value_or(s->height), s->height);
            std::uint64_t from = u64_param(req, "from").value_or(to > 19 ? to - 19 : 1);
            from = std::max<std::uint64_t>(from, 1);
            if (from > to) {
                reply(res, 200, json::array());
                return;
            }
            if (to - from + 1 > kMaxBlocksPerPage) from = to - kMaxBlocksPerPage + 1;
            json out = json::array();
            for (std::uint64_t h = to; h >= from; --h) out.push_back(block_summary(s->blocks[h - 1]->block));
            reply(res, 200, out);
        });

        server.Get(R"(/blocks/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            auto s = current();
            std::uint64_t n = std::stoull(req.matches[1].str());
            if (n == 0) {
                reply(res, 200,
                      {{"number", 0},
                       {"block_hash", genesis.hash().hex()},
                       {"timestamp", genesis.timestamp},
                       {"mined_on", genesis.timestamp},
                       {"gas_used", 0},
                       {"gas_limit", genesis.gas_limit},
                       {"transactions", json::array()},
                       {"receipts", json::array()}});
                return;
            }
            if (n > s->height) {
                error_reply(res, 404, "no block at height " + std::to_string(n));
                return;
            }
            const BlockEntry& e = *s->blocks[n - 1];
            json out = codec::block_to_json(e.block);
            out["mined_on"] = e.block.timestamp;
            out["receipts"] = json::array();
            for (const auto& r : e.receipts) out["receipts"].push_back(codec::receipt_to_json(r));
            reply(res, 200, out);
        });

        server.Get(R"(/tx/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            Digest h = Digest::from_hex(req.matches[1].str());
            auto s = current();
            if (auto it = s->tx_index.find(h); it != s->tx_index.end()) {
                const BlockEntry& e = *s->blocks[it->second.first - 1];
                json out = codec::tx_to_json(e.block.transactions[it->second.second]);
                out["status"] = "committed";
                out["block_number"] = it->second.first;
                out["index"] = it->second.second;
                out["receipt"] = codec::receipt_to_json(e.receipts[it->second.second]);
                reply(res, 200, out);
                return;
            }
            for (const auto& t : s->pending) {
                if (t.hash() == h) {
                    json out = codec::tx_to_json(t);
                    out["status"] = "pending";
                    reply(res, 200, out);
                    return;
                }
            }
            error_reply(res, 404, "unknown transaction");
        });

        server.Get("/chain/head", [this](const httplib::Request&, httplib::Response& res) {
            auto s = current();
            reply(res, 200,
                  {{"number", s->height},
                   {"block_hash", s->head_hash.hex()},
                   {"timestamp", s->head_timestamp},
                   {"final_depth", genesis.authorities.final_depth()}});
        });

        server.Get("/validators", [this](const httplib::Request&, httplib::Response& res) {
            auto s = current();
            json auths = json::array();
            for (const auto& a : genesis.authorities.members()) auths.push_back(a.hex());
            reply(res, 200,
                  {{"authorities", auths},
                   {"in_turn_proposer", genesis.authorities.expected_proposer(s->height + 1).hex()},
                   {"next_height", s->height + 1},
                   {"self", is_validator() ? json(cfg.validator_key->address().hex()) : json(nullptr)}});
        });

        server.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
            auto s = current();
            reply(res, 200,
                  {{"chain_id", genesis.chain_id},
                   {"gas_limit", genesis.gas_limit},
                   {"gas_price_suggestion", wei_to_string(genesis.gas_price_suggestion)},
                   {"mode", std::string(contract::to_string(genesis.averaging_mode))},
                   {"rating_scope", std::string(contract::to_string(genesis.rating_scope))},
                   {"contract_address", genesis.contract_address.hex()},
                   {"owner", genesis.owner.hex()},
                   {"genesis_hash", genesis.hash().hex()},
                   {"height", s->height},
                   {"validator", is_validator()},
                   {"faucet_enabled", cfg.faucet_enabled && genesis.faucet_enabled && is_validator()},
                   {"faucet_grant_wei", wei_to_string(genesis.faucet_grant_wei)},
                   {"faucet_window_blocks", genesis.faucet_window_blocks},
                   {"demo_grant", cfg.owner_key.has_value()},
                   {"gas_schedule",
                    {{"SetRate", genesis.gas_schedule.set_rate},
                     {"GetRate", genesis.gas_schedule.get_rate},
                     {"GiveRightToRate", genesis.gas_schedule.give_right_to_rate},
                     {"CreateProduct", genesis.gas_schedule.create_product}}}});
        });

        server.Post("/p2p/message", [this](const httplib::Request& req, httplib::Response& res) {
            std::string origin = trim_url(req.get_header_value("X-Trating-Origin"));
            if (origin.empty() || origin == self_url) {
                error_reply(res, 400, "missing or invalid X-Trating-Origin header");
                return;
            }
            const bool known = [&] {
                std::lock_guard lk(peers_mu);
                return peer_ids.contains(origin);
            }();
            PeerId from = add_peer(origin);
            Bytes bytes(req.body.begin(), req.body.end());
            on_writer([this, from, known, bytes = std::move(bytes)](std::uint64_t now) {
                if (!known) engine->set_peers(peer_list());
                engine->receive(bytes, from, now, outbox);
                return 0;
            });
            res.status = 202;
        });

        server.Get("/p2p/chain", [this](const httplib::Request& req, httplib::Response& res) {
            auto s = current();
            net::ChainResponse resp;
            resp.from_height = std::max<std::uint64_t>(1, u64_param(req, "from").value_or(1));
            for (std::uint64_t h = resp.from_height; h <= s->height; ++h) resp.blocks.push_back(s->blocks[h - 1]->block);
            Bytes bytes = net::encode(resp);
            res.set_content(std::string(bytes.begin(), bytes.end()), "application/octet-stream");
        });

        if (cfg.ui_dir) {
            if (!server.set_mount_point("/ui/", cfg.ui_dir->string())) {
                throw Error(ErrorCode::Config, "ui directory " + cfg.ui_dir->string() + " does not exist");
            }
            server.Get("/ui", [](const httplib::Request&, httplib::Response& res) { res.set_redirect("/ui/"); });
        }
    }

    // -- lifecycle --------------------------------------------------------------------

    void start() {
        install_routes();
        if (cfg.port == 0) {
            bound_port = server.bind_to_any_port(cfg.host);
            if (bound_port < 0) throw Error(ErrorCode::Io, "cannot bind " + cfg.host);
        } else {
            if (!server.bind_to_port(cfg.host, cfg.port)) {
                throw Error(ErrorCode::Io, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port) +
                                               " (port busy or not permitted)");
            }
            bound_port = cfg.port;
        }
        self_url = cfg.advertise_url.empty() ? "http://" + cfg.host + ":" + std::to_string(bound_port)
                                             : trim_url(cfg.advertise_url);
        for (const auto& p : cfg.peers)
            if (trim_url(p) != self_url) add_peer(p);
        engine->set_peers(peer_list());
        {
            std::lock_guard lk(peers_mu);
            started = true;
            for (auto& p : peers) {
                Peer* raw = p.get();
                raw->thread = std::thread([this, raw] { peer_loop(*raw); });
            }
        }
        writer_thread = std::thread([this] { writer_loop(); });
        http_thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
        note("listening on " + self_url);
    }

    void stop() {
        {
            std::lock_guard lk(mu);
            if (stopped) return;
            stopping = true;
        }
        cv.notify_all();
        snap_cv.notify_all();
        server.stop();
        if (http_thread.joinable()) http_thread.join();
        if (writer_thread.joinable()) writer_thread.join();
        {
            std::lock_guard lk(peers_mu);
            for (auto& p : peers) p->cv.notify_all();
        }
        for (auto& p : peers)
            if (p->thread.joinable()) p->thread.join();
        {
            std::lock_guard lk(mu);
            stopped = true;
        }
        stopped_cv.notify_all();
    }
};

Node::Node(NodeConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Node::~Node() { impl_->stop(); }

void Node::start() { impl_->start(); }
void Node::stop() { impl_->stop(); }

void Node::wait() {
    {
        std::unique_lock lk(impl_->mu);
        impl_->stopped_cv.wait(lk, [&] { return impl_->stopping.load(); });
    }
    impl_->stop();
}

int Node::port() const { return impl_->bound_port; }
std::string Node::url() const { return impl_->self_url; }
std::shared_ptr<const Snapshot> Node::snapshot() const { return impl_->current(); }
const ledger::Genesis& Node::genesis() const { return impl_->genesis; }
bool Node::recovered_torn_tail() const { return impl_->torn_tail; }

// ---------------------------------------------------------------------------

namespace {

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
    }
}

}  // namespace

ledger::Genesis load_genesis_file(const fs::path& path) { return codec::genesis_from_json(read_json_file(path)); }

KeyPair load_keypair_file(const fs::path& path) { return codec::keypair_from_json(read_json_file(path)); }

void save_keypair_file(const fs::path& path, const KeyPair& key) {
    const std::string text = codec::keypair_to_json(key).dump(2) + "\n";
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0600);
    if (fd < 0) throw Error(ErrorCode::Io, "cannot create " + path.string() + " (exists or not writable)");
    ::fchmod(fd, 0600);
    bool ok = ::write(fd, text.data(), text.size()) == static_cast<ssize_t>(text.size());
    ::close(fd);
    if (!ok) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

}  // namespace trating::node
