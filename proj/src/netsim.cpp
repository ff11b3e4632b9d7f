#include "trating/netsim.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <sstream>

#include "trating/engine.hpp"

namespace trating::netsim {

using consensus::Engine;
using consensus::PeerId;
using ledger::Block;
using ledger::Function;
using ledger::Transaction;
using nlohmann::json;

std::string_view to_string(AdversaryBehavior b) {
    switch (b) {
        case AdversaryBehavior::NonAuthorityProposer: return "NonAuthorityProposer";
        case AdversaryBehavior::DoubleRateSpammer: return "DoubleRateSpammer";
        case AdversaryBehavior::TamperedBlockRelay: return "TamperedBlockRelay";
    }
    return "?";
}

namespace {

AdversaryBehavior behavior_from_string(const std::string& s) {
    for (auto b : {AdversaryBehavior::NonAuthorityProposer, AdversaryBehavior::DoubleRateSpammer,
                   AdversaryBehavior::TamperedBlockRelay}) {
        if (to_string(b) == s) return b;
    }
    throw Error(ErrorCode::Config, "unknown adversary behavior '" + s + "'");
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const char* where) {
    if (!j.is_object()) throw Error(ErrorCode::Config, std::string(where) + " must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw Error(ErrorCode::Config, "unknown field '" + key + "' in " + where);
        }
    }
}

Wei wei_field(const json& j) {
    if (j.is_string()) return wei_from_string(j.get<std::string>());
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    throw Error(ErrorCode::Config, "amount must be a decimal string or unsigned integer");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

bool partitions_overlap(const PartitionSpec& a, const PartitionSpec& b) {
    return a.start_ms < b.start_ms + b.duration_ms && b.start_ms < a.start_ms + a.duration_ms;
}

}  // namespace

SimConfig SimConfig::from_json(const json& j) {
    SimConfig c;
    try {
        check_keys(j,
                   {"seed", "validators", "latency_ms", "drop_rate", "slot_deadline_seconds", "seal_delay_ms",
                    "sync_interval_ms", "quiet_period_ms", "event_budget", "averaging_mode", "include_block_logs",
                    "partitions", "adversaries", "workload", "description"},
                   "sim config");
        read(j, "seed", c.seed);
        read(j, "validators", c.validators);
        if (j.contains("latency_ms")) {
            const json& l = j.at("latency_ms");
            check_keys(l, {"min", "max"}, "latency_ms");
            read(l, "min", c.latency_min_ms);
            read(l, "max", c.latency_max_ms);
        }
        read(j, "drop_rate", c.drop_rate);
        read(j, "slot_deadline_seconds", c.slot_deadline_seconds);
        read(j, "seal_delay_ms", c.seal_delay_ms);
        read(j, "sync_interval_ms", c.sync_interval_ms);
        read(j, "quiet_period_ms", c.quiet_period_ms);
        read(j, "event_budget", c.event_budget);
        read(j, "include_block_logs", c.include_block_logs);
        if (j.contains("averaging_mode")) {
            c.averaging_mode = contract::averaging_mode_from_string(j.at("averaging_mode").get<std::string>());
        }
        for (const json& p : j.value("partitions", json::array())) {
            check_keys(p, {"start_ms", "duration_ms", "group"}, "partition");
            PartitionSpec spec;
            read(p, "start_ms", spec.start_ms);
            read(p, "duration_ms", spec.duration_ms);
            for (const json& g : p.at("group")) spec.group.insert(g.get<std::uint32_t>());
            c.partitions.push_back(std::move(spec));
        }
        for (const json& a : j.value("adversaries", json::array())) {
            check_keys(a, {"behavior", "start_ms", "interval_ms", "count"}, "adversary");
            AdversarySpec spec;
            spec.behavior = behavior_from_string(a.at("behavior").get<std::string>());
            read(a, "start_ms", spec.start_ms);
            read(a, "interval_ms", spec.interval_ms);
            read(a, "count", spec.count);
            c.adversaries.push_back(spec);
        }
        if (j.contains("workload")) {
            const json& w = j.at("workload");
            check_keys(w,
                       {"transactions", "raters", "products", "start_ms", "interval_ms", "faucet_mints",
                        "get_rate_fraction", "gas_price", "script"},
                       "workload");
            read(w, "transactions", c.workload.transactions);
            read(w, "raters", c.workload.raters);
            read(w, "products", c.workload.products);
            read(w, "start_ms", c.workload.start_ms);
            read(w, "interval_ms", c.workload.interval_ms);
            read(w, "faucet_mints", c.workload.faucet_mints);
            read(w, "get_rate_fraction", c.workload.get_rate_fraction);
            if (w.contains("gas_price")) c.workload.gas_price = wei_field(w.at("gas_price"));
            for (const json& s : w.value("script", json::array())) {
                check_keys(s, {"at_ms", "sender", "function", "product", "rater", "value", "node"}, "script entry");
                ScriptedTx tx;
                read(s, "at_ms", tx.at_ms);
                tx.sender = s.at("sender").get<std::string>();
                auto fn = ledger::function_from_string(s.at("function").get<std::string>());
                if (!fn) throw Error(ErrorCode::Config, "unknown function in script");
                tx.function = *fn;
                read(s, "product", tx.product);
                read(s, "rater", tx.rater);
                read(s, "value", tx.value);
                if (s.contains("node")) tx.node = s.at("node").get<std::uint32_t>();
                c.workload.script.push_back(std::move(tx));
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Config, std::string("sim config: ") + e.what());
    }
    c.validate();
    return c;
}

json SimConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["validators"] = validators;
    j["latency_ms"] = {{"min", latency_min_ms}, {"max", latency_max_ms}};
    j["drop_rate"] = drop_rate;
    j["slot_deadline_seconds"] = slot_deadline_seconds;
    j["seal_delay_ms"] = seal_delay_ms;
    j["sync_interval_ms"] = sync_interval_ms;
    j["quiet_period_ms"] = quiet_period_ms;
    j["event_budget"] = event_budget;
    j["averaging_mode"] = std::string(contract::to_string(averaging_mode));
    j["include_block_logs"] = include_block_logs;
    j["partitions"] = json::array();
    for (const auto& p : partitions)
        j["partitions"].push_back({{"start_ms", p.start_ms}, {"duration_ms", p.duration_ms}, {"group", p.group}});
    j["adversaries"] = json::array();
    for (const auto& a : adversaries) {
        j["adversaries"].push_back({{"behavior", std::string(to_string(a.behavior))},
                                    {"start_ms", a.start_ms},
                                    {"interval_ms", a.interval_ms},
                                    {"count", a.count}});
    }
    json w;
    w["transactions"] = workload.transactions;
    w["raters"] = workload.raters;
    w["products"] = workload.products;
    w["start_ms"] = workload.start_ms;
    w["interval_ms"] = workload.interval_ms;
    w["faucet_mints"] = workload.faucet_mints;
    w["get_rate_fraction"] = workload.get_rate_fraction;
    w["gas_price"] = wei_to_string(workload.gas_price);
    w["script"] = json::array();
    for (const auto& s : workload.script) {
        json e = {{"at_ms", s.at_ms},   {"sender", s.sender}, {"function", std::string(ledger::to_string(s.function))},
                  {"product", s.product}, {"rater", s.rater},   {"value", s.value}};
        if (s.node) e["node"] = *s.node;
        w["script"].push_back(std::move(e));
    }
    j["workload"] = std::move(w);
    return j;
}

void SimConfig::validate() const {
    if (validators < 1) throw Error(ErrorCode::Config, "need at least one validator");
    if (latency_min_ms > latency_max_ms) throw Error(ErrorCode::Config, "latency min exceeds max");
    if (drop_rate < 0.0 || drop_rate > 1.0) throw Error(ErrorCode::Config, "drop_rate must be within [0, 1]");
    if (workload.products < 1) throw Error(ErrorCode::Config, "need at least one product");
    if (workload.interval_ms == 0) throw Error(ErrorCode::Config, "workload interval must be positive");
    for (std::size_t i = 0; i < partitions.size(); ++i) {
        const auto& p = partitions[i];
        if (p.group.empty() || p.group.size() >= validators) {
            throw Error(ErrorCode::Config, "partition group must be a proper non-empty subset of validators");
        }
        for (auto id : p.group)
            if (id >= validators) throw Error(ErrorCode::Config, "partition names unknown validator");
        for (std::size_t k = 0; k < i; ++k) {
            if (p.duration_ms > 0 && partitions[k].duration_ms > 0 && partitions_overlap(p, partitions[k])) {
                throw Error(ErrorCode::Config, "overlapping partitions");
            }
        }
    }
    for (const auto& s : workload.script) {
        if (s.node && *s.node >= validators) throw Error(ErrorCode::Config, "script names unknown node");
    }
}

// ---------------------------------------------------------------------------

namespace {

KeyPair derived_key(std::uint64_t seed, const std::string& label) {
    Digest d = hash32("trating-sim/" + std::to_string(seed) + "/" + label);
    return KeyPair::from_seed(d.bytes);
}

Address derived_address(std::uint64_t seed, const std::string& label) {
    Digest d = hash32("trating-sim/" + std::to_string(seed) + "/" + label);
    Address a;
    std::copy(d.bytes.begin(), d.bytes.begin() + 20, a.bytes.begin());
    return a;
}

constexpr const char* kProductNames[] = {"Kaza Restaurant", "4 Season Restaurant", "Ming Restaurant", "House Cafe"};
constexpr Gas kTxGasLimit = 100000;

enum class EventKind { Deliver, Wakeup, Submit, AdversaryStep, PartitionEnd };

struct Event {
    std::uint64_t time = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Wakeup;
    std::uint32_t to = 0;
    std::uint32_t from = 0;
    std::size_t index = 0;
    Bytes payload;
};

struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
        return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
};

struct PlannedTx {
    std::uint64_t at_ms = 0;
    std::uint32_t node = 0;
    Transaction tx;
};

}  // namespace

struct Simulation::Impl {
    SimConfig config;
    std::mt19937_64 rng;
    ledger::Genesis genesis;
    std::vector<KeyPair> validator_keys;
    KeyPair owner;
    std::vector<KeyPair> raters;
    KeyPair spammer;
    KeyPair intruder;
    std::vector<Address> products;
    std::vector<Address> recipients;

    std::vector<std::unique_ptr<Engine>> engines;
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue;
    std::uint64_t seq = 0;
    std::uint64_t now = 0;
    std::vector<std::optional<std::uint64_t>> scheduled_wakeup;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> link_clock;
    std::uint64_t in_flight = 0;

    std::vector<PlannedTx> planned;
    std::uint64_t submits_remaining = 0;
    std::uint64_t adversary_steps_remaining = 0;
    std::uint64_t partition_ends_remaining = 0;

    bool relay_active = false;
    std::uint32_t relay_id = 0;
    std::uint32_t intruder_id = 0;

    SimReport report;

    explicit Impl(SimConfig c)
        : config(std::move(c)),
          rng(config.seed),
          owner(derived_key(config.seed, "owner")),
          spammer(derived_key(config.seed, "spammer")),
          intruder(derived_key(config.seed, "intruder")) {
        config.validate();
        const auto& w = config.workload;
        std::vector<Address> authorities;
        for (std::uint32_t i = 0; i < config.validators; ++i) {
            validator_keys.push_back(derived_key(config.seed, "validator/" + std::to_string(i)));
            authorities.push_back(validator_keys.back().address());
        }
        std::uint32_t rater_count = w.raters;
        for (const auto& s : w.script) {
            if (s.sender.rfind("rater:", 0) == 0) rater_count = std::max<std::uint32_t>(rater_count, std::stoul(s.sender.substr(6)) + 1);
            rater_count = std::max(rater_count, s.rater + 1);
        }
        for (std::uint32_t i = 0; i < rater_count; ++i)
            raters.push_back(derived_key(config.seed, "rater/" + std::to_string(i)));
        for (std::uint32_t i = 0; i < w.products; ++i)
            products.push_back(derived_address(config.seed, "product/" + std::to_string(i)));
        for (std::uint32_t i = 0; i < std::max<std::uint32_t>(w.faucet_mints, 1); ++i)
            recipients.push_back(derived_address(config.seed, "recipient/" + std::to_string(i)));

        genesis.authorities = consensus::AuthoritySet(authorities);
        genesis.slot_deadline_seconds = config.slot_deadline_seconds;
        genesis.owner = owner.address();
        genesis.contract_address = ledger::default_contract_address(genesis.owner);
        genesis.averaging_mode = config.averaging_mode;
        const Wei kEther = Wei{1000000000000000000ULL};
        genesis.balances[owner.address()] = kEther * 100;
        for (const auto& r : raters) genesis.balances[r.address()] = kEther;
        genesis.balances[spammer.address()] = kEther;
        genesis.balances[intruder.address()] = kEther;
        for (std::uint32_t i = 0; i < w.products; ++i) {
            std::string name = i < 4 ? kProductNames[i] : "Product " + std::to_string(i + 1);
            genesis.products.push_back({products[i], name});
        }
        genesis.raters.push_back(spammer.address());

        relay_id = config.validators;
        intruder_id = config.validators + 1;
    }

    // -- network ------------------------------------------------------------

    std::uint64_t latency() {
        const std::uint64_t span = config.latency_max_ms - config.latency_min_ms + 1;
        return config.latency_min_ms + rng() % span;
    }

    bool chance(double p) {
        if (p <= 0.0) return false;
        return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p;
    }

    void push(Event e) {
        e.seq = seq++;
        queue.push(std::move(e));
    }

    void post(std::uint32_t from, std::uint32_t to, Bytes payload) {
        ++report.messages_sent;
        if (chance(config.drop_rate)) {
            ++report.messages_dropped;
            return;
        }
        std::uint64_t& clock = link_clock[{from, to}];
        std::uint64_t at = std::max(now + latency(), clock);
        clock = at;
        Event e;
        e.time = at;
        e.kind = EventKind::Deliver;
        e.from = from;
        e.to = to;
        e.payload = std::move(payload);
        ++in_flight;
        push(std::move(e));
    }

    bool is_honest(std::uint32_t id) const { return id < config.validators; }

    bool cut(std::uint32_t a, std::uint32_t b) const {
        if (!is_honest(a) || !is_honest(b)) return false;
        for (const auto& p : config.partitions) {
            if (p.duration_ms == 0) continue;
            if (now >= p.start_ms && now < p.start_ms + p.duration_ms) {
                return p.group.contains(a) != p.group.contains(b);
            }
        }
        return false;
    }

    struct NodeOutbox : consensus::Outbox {
        Impl& sim;
        std::uint32_t self;
        NodeOutbox(Impl& s, std::uint32_t id) : sim(s), self(id) {}

        void send(PeerId to, const net::Message& m) override { sim.post(self, to, net::encode(m)); }
        void broadcast(const net::Message& m, std::optional<PeerId> except) override {
            Bytes bytes = net::encode(m);
            for (std::uint32_t peer = 0; peer < sim.config.validators; ++peer) {
                if (peer == self || (except && *except == peer)) continue;
                sim.post(self, peer, bytes);
            }
            if (sim.relay_active && net::kind_of(m) == net::MessageKind::NewBlock) sim.post(self, sim.relay_id, bytes);
        }
    };

    void reschedule(std::uint32_t id) {
        auto w = engines[id]->next_wakeup_ms();
        if (!w) {
            scheduled_wakeup[id].reset();
            return;
        }
        std::uint64_t t = std::max(*w, now);
        if (scheduled_wakeup[id] == t) return;
        scheduled_wakeup[id] = t;
        Event e;
        e.time = t;
        e.kind = EventKind::Wakeup;
        e.to = id;
        push(std::move(e));
    }

    // -- workload -----------------------------------------------------------

    Transaction make_tx(const KeyPair& key, std::uint64_t nonce, const Address& to, ledger::CallPayload call,
                        Wei value = 0) {
        Transaction tx;
        tx.nonce = nonce;
        tx.to = to;
        tx.call = std::move(call);
        tx.value = value;
        tx.gas_limit = kTxGasLimit;
        tx.gas_price = config.workload.gas_price;
        tx.sign_with(key);
        return tx;
    }

    std::uint32_t random_node() { return static_cast<std::uint32_t>(rng() % config.validators); }

    void plan_random_workload() {
        const auto& w = config.workload;
        std::map<Address, std::uint64_t> nonces;
        std::uint64_t t = w.start_ms;
        std::uint32_t budget = w.transactions;
        const Address contract = genesis.contract_address;

        std::uint32_t grants = std::min<std::uint32_t>(static_cast<std::uint32_t>(raters.size()), budget);
        for (std::uint32_t i = 0; i < grants; ++i, t += w.interval_ms) {
            planned.push_back({t, random_node(),
                               make_tx(owner, nonces[owner.address()]++, contract,
                                       ledger::GiveRightToRateArgs{raters[i].address()})});
        }
        budget -= grants;
        std::uint32_t mints = std::min(w.faucet_mints, budget);
        budget -= mints;
        // Ratings start once the grants have had time to commit.
        t += 3000 + config.slot_deadline_seconds * 1000 * config.validators;
        std::uint32_t mints_done = 0;
        for (std::uint32_t k = 0; k < budget + mints; ++k, t += w.interval_ms) {
            if (mints_done < mints && (k % std::max<std::uint32_t>(1, (budget + mints) / mints) == 0 || k >= budget)) {
                const KeyPair& v = validator_keys[mints_done % validator_keys.size()];
                planned.push_back({t, random_node(),
                                   make_tx(v, nonces[v.address()]++, recipients[mints_done], ledger::MintArgs{},
                                           genesis.faucet_grant_wei)});
                ++mints_done;
                continue;
            }
            if (raters.empty()) break;
            const KeyPair& r = raters[rng() % raters.size()];
            const Address& p = products[rng() % products.size()];
            ledger::CallPayload call;
            if (chance(w.get_rate_fraction)) {
                call = ledger::GetRateArgs{p};
            } else {
                call = ledger::SetRateArgs{p, static_cast<std::uint8_t>(rng() % 101)};
            }
            planned.push_back({t, random_node(), make_tx(r, nonces[r.address()]++, contract, std::move(call))});
        }
    }

    const KeyPair& sender_key(const std::string& s) {
        if (s == "owner") return owner;
        if (s == "spammer") return spammer;
        auto idx = [&](std::size_t prefix) { return static_cast<std::size_t>(std::stoul(s.substr(prefix))); };
        if (s.rfind("rater:", 0) == 0 && idx(6) < raters.size()) return raters[idx(6)];
        if (s.rfind("validator:", 0) == 0 && idx(10) < validator_keys.size()) return validator_keys[idx(10)];
        throw Error(ErrorCode::Config, "unknown script sender '" + s + "'");
    }

    void plan_script() {
        std::map<Address, std::uint64_t> nonces;
        const Address contract = genesis.contract_address;
        for (const auto& s : config.workload.script) {
            const KeyPair& key = sender_key(s.sender);
            auto product_at = [&](std::uint32_t i) {
                return i < products.size() ? products[i] : derived_address(config.seed, "product/" + std::to_string(i));
            };
            Transaction tx;
            std::uint64_t nonce = nonces[key.address()]++;
            switch (s.function) {
                case Function::GiveRightToRate:
                    tx = make_tx(key, nonce, contract, ledger::GiveRightToRateArgs{raters.at(s.rater).address()});
                    break;
                case Function::SetRate:
                    tx = make_tx(key, nonce, contract,
                                 ledger::SetRateArgs{product_at(s.product), static_cast<std::uint8_t>(s.value)});
                    break;
                case Function::GetRate: tx = make_tx(key, nonce, contract, ledger::GetRateArgs{product_at(s.product)}); break;
                case Function::CreateProduct:
                    tx = make_tx(key, nonce, contract,
                                 ledger::CreateProductArgs{product_at(s.product), "Product " + std::to_string(s.product + 1)});
                    break;
                case Function::Mint:
                    tx = make_tx(key, nonce, raters.at(s.rater).address(), ledger::MintArgs{}, genesis.faucet_grant_wei);
                    break;
            }
            planned.push_back({s.at_ms, s.node.value_or(random_node()), std::move(tx)});
        }
    }

    // -- adversaries ----------------------------------------------------------

    struct AdversaryStep {
        AdversaryBehavior behavior;
        std::uint32_t k;
    };
    std::vector<AdversaryStep> steps;

    void schedule_adversaries() {
        for (const auto& a : config.adversaries) {
            if (a.behavior == AdversaryBehavior::TamperedBlockRelay) {
                relay_active = true;
                continue;
            }
            for (std::uint32_t k = 0; k < a.count; ++k) {
                Event e;
                e.time = a.start_ms + k * a.interval_ms;
                e.kind = EventKind::AdversaryStep;
                e.index = steps.size();
                steps.push_back({a.behavior, k});
                ++adversary_steps_remaining;
                push(std::move(e));
            }
        }
    }

    void adversary_step(const AdversaryStep& step) {
        if (step.behavior == AdversaryBehavior::DoubleRateSpammer) {
            Transaction tx = make_tx(spammer, step.k, genesis.contract_address, ledger::SetRateArgs{products[0], 50});
            std::uint32_t node = random_node();
            NodeOutbox out(*this, node);
            engines[node]->submit(tx, now, out);
            ++report.transactions_submitted;
            reschedule(node);
            return;
        }
        // A well-formed block on top of an honest head, signed by a key outside the authority set.
        const ledger::Chain& chain = engines[0]->chain();
        const ledger::ChainHead head = chain.head();
        Block b;
        b.number = head.number + 1;
        b.parent_hash = head.hash;
        b.timestamp = std::max(now / 1000, head.timestamp);
        b.out_of_turn = true;
        b.gas_limit = genesis.gas_limit;
        b.transactions.push_back(make_tx(intruder, step.k, genesis.contract_address, ledger::GetRateArgs{products[0]}));
        b.gas_used = genesis.gas_schedule.get_rate;
        b.seal_with(intruder);
        Bytes bytes = net::encode(net::NewBlock{b});
        for (std::uint32_t peer = 0; peer < config.validators; ++peer) post(intruder_id, peer, bytes);
        ++report.adversary_blocks_sent;
    }

    void relay(const Event& e) {
        net::Message m;
        try {
            m = net::decode(e.payload);
        } catch (const Error&) {
            return;
        }
        auto* nb = std::get_if<net::NewBlock>(&m);
        if (!nb || nb->block.transactions.empty()) return;
        nb->block.transactions.front().signature.bytes[0] ^= 0x01;
        Bytes bytes = net::encode(m);
        for (std::uint32_t peer = 0; peer < config.validators; ++peer) {
            if (peer != e.from) post(relay_id, peer, bytes);
        }
        ++report.tampered_relays;
    }

    // -- run ------------------------------------------------------------------

    bool quiescent() const {
        if (submits_remaining || adversary_steps_remaining || partition_ends_remaining || in_flight) return false;
        std::uint64_t last_change = 0;
        for (const auto& eng : engines) {
            if (eng->seal_due_ms()) return false;
            if (eng->chain().head().hash != engines[0]->chain().head().hash) return false;
            last_change = std::max(last_change, eng->last_head_change_ms());
        }
        return now >= last_change + config.quiet_period_ms;
    }

    SimReport run() {
        consensus::EngineOptions opts;
        opts.seal_delay_ms = config.seal_delay_ms;
        opts.sync_interval_ms = config.sync_interval_ms;
        for (std::uint32_t i = 0; i < config.validators; ++i) {
            engines.push_back(std::make_unique<Engine>(genesis, validator_keys[i], opts));
            std::vector<PeerId> peers;
            for (std::uint32_t p = 0; p < config.validators; ++p)
                if (p != i) peers.push_back(p);
            engines.back()->set_peers(std::move(peers));
        }
        scheduled_wakeup.assign(config.validators, std::nullopt);

        if (config.workload.script.empty()) {
            plan_random_workload();
        } else {
            plan_script();
        }
        for (std::size_t i = 0; i < planned.size(); ++i) {
            Event e;
            e.time = planned[i].at_ms;
            e.kind = EventKind::Submit;
            e.index = i;
            ++submits_remaining;
            push(std::move(e));
        }
        schedule_adversaries();
        for (const auto& p : config.partitions) {
            if (p.duration_ms == 0) continue;
            Event e;
            e.time = p.start_ms + p.duration_ms;
            e.kind = EventKind::PartitionEnd;
            ++partition_ends_remaining;
            push(std::move(e));
        }
        for (std::uint32_t i = 0; i < config.validators; ++i) reschedule(i);

        while (!queue.empty()) {
            if (report.events_processed >= config.event_budget) {
                report.timed_out = true;
                break;
            }
            Event e = queue.top();
            queue.pop();
            now = std::max(now, e.time);
            ++report.events_processed;
            switch (e.kind) {
                case EventKind::Deliver: {
                    --in_flight;
                    if (cut(e.from, e.to)) {
                        ++report.messages_dropped;
                        break;
                    }
                    ++report.messages_delivered;
                    if (e.to == relay_id) {
                        relay(e);
                    } else if (is_honest(e.to)) {
                        NodeOutbox out(*this, e.to);
                        engines[e.to]->receive(e.payload, e.from, now, out);
                        reschedule(e.to);
                    }
                    break;
                }
                case EventKind::Wakeup: {
                    if (scheduled_wakeup[e.to] != e.time) break;
                    scheduled_wakeup[e.to].reset();
                    NodeOutbox out(*this, e.to);
                    engines[e.to]->tick(now, out);
                    reschedule(e.to);
                    break;
                }
                case EventKind::Submit: {
                    --submits_remaining;
                    const PlannedTx& p = planned[e.index];
                    NodeOutbox out(*this, p.node);
                    engines[p.node]->submit(p.tx, now, out);
                    ++report.transactions_submitted;
                    reschedule(p.node);
                    break;
                }
                case EventKind::AdversaryStep:
                    --adversary_steps_remaining;
                    adversary_step(steps[e.index]);
                    break;
                case EventKind::PartitionEnd:
                    --partition_ends_remaining;
                    for (std::uint32_t i = 0; i < config.validators; ++i) {
                        NodeOutbox out(*this, i);
                        for (std::uint32_t p = 0; p < config.validators; ++p)
                            if (p != i) engines[i]->sync_with(p, out);
                    }
                    break;
            }
            if (quiescent()) break;
        }
        finish();
        return report;
    }

    void finish() {
        report.seed = config.seed;
        report.end_time_ms = now;
        report.genesis_total = genesis.total_allocation();
        const consensus::AuthoritySet& auth = genesis.authorities;
        bool all_equal = true;
        for (std::uint32_t i = 0; i < config.validators; ++i) {
            const Engine& eng = *engines[i];
            const ledger::Chain& chain = eng.chain();
            NodeReport n;
            n.id = i;
            n.address = validator_keys[i].address();
            n.height = chain.height();
            n.head_hash = chain.head().hash;
            n.state_digest = chain.state().digest();
            ByteWriter log;
            for (const Block& b : chain.blocks()) {
                log.raw(b.block_hash.view());
                if (config.include_block_logs) n.block_hashes.push_back(b.block_hash.hex());
                if (!auth.contains(b.proposer) || b.compute_hash() != b.block_hash) ++report.adversarial_blocks_accepted;
            }
            n.block_log_digest = hash32(log.bytes());
            n.out_of_turn_blocks = chain.out_of_turn_count();
            n.sealed = eng.stats().sealed;
            n.reorgs = eng.stats().reorgs;
            n.duplicate_blocks = eng.stats().duplicate_blocks;
            n.malformed_messages = eng.stats().malformed_messages;
            n.pending = eng.pending_count();
            n.rejected_blocks = eng.stats().rejected_blocks;
            n.rejected_txs = eng.stats().rejected_txs;
            ledger::ReplayResult replay = ledger::replay_chain(genesis, chain.blocks());
            n.replay_matches = replay.ok() && replay.state.digest() == n.state_digest;
            Wei minted_in_log = 0;
            for (const Block& b : chain.blocks())
                for (const auto& tx : b.transactions)
                    if (tx.function() == Function::Mint) minted_in_log += tx.value;
            n.conservation_ok = chain.state().total_balance() == report.genesis_total + minted_in_log &&
                                minted_in_log == chain.state().total_minted;
            report.fork_count += n.reorgs;
            report.max_height = std::max(report.max_height, n.height);
            report.convergence_time_ms = std::max(report.convergence_time_ms, eng.last_head_change_ms());
            if (n.head_hash != engines[0]->chain().head().hash || n.state_digest != engines[0]->chain().state().digest()) {
                all_equal = false;
            }
            report.nodes.push_back(std::move(n));
        }
        report.converged = all_equal && !report.timed_out;

        const ledger::Chain& ref = engines[0]->chain();
        report.minted = ref.state().total_minted;
        report.balance_sum = ref.state().total_balance();
        report.conservation_ok = std::all_of(report.nodes.begin(), report.nodes.end(),
                                             [](const NodeReport& n) { return n.conservation_ok; });
        for (const Block& b : ref.blocks()) {
            for (const auto& tx : b.transactions) {
                ++report.transactions_committed;
                const ledger::Receipt* r = ref.receipt(tx.hash());
                if (!r) continue;
                ++report.receipts_by_function[std::string(ledger::to_string(r->function))];
                if (r->success()) {
                    ++report.receipts_success;
                } else {
                    ++report.revert_reasons[r->revert_reason];
                }
                if (tx.from == spammer.address() && tx.function() == Function::SetRate) {
                    if (r->success()) ++report.spammer_success;
                    else if (r->revert_reason == contract::kRevertAlreadyRated) ++report.spammer_already_rated;
                }
            }
        }
    }
};

Simulation::Simulation(SimConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Simulation::~Simulation() = default;

void Simulation::inject_partition(const PartitionSpec& partition) {
    impl_->config.partitions.push_back(partition);
    try {
        impl_->config.validate();
    } catch (...) {
        impl_->config.partitions.pop_back();
        throw;
    }
}

void Simulation::add_adversary(const AdversarySpec& adversary) { impl_->config.adversaries.push_back(adversary); }

const ledger::Genesis& Simulation::genesis() const { return impl_->genesis; }

SimReport Simulation::run() { return impl_->run(); }

SimReport run_simulation(const SimConfig& config) { return Simulation(config).run(); }

// ---------------------------------------------------------------------------

json SimReport::to_json() const {
    json j;
    j["seed"] = seed;
    j["timed_out"] = timed_out;
    j["converged"] = converged;
    j["events_processed"] = events_processed;
    j["end_time_ms"] = end_time_ms;
    j["convergence_time_ms"] = convergence_time_ms;
    j["fork_count"] = fork_count;
    j["max_height"] = max_height;
    j["messages"] = {{"sent", messages_sent}, {"delivered", messages_delivered}, {"dropped", messages_dropped}};
    j["transactions"] = {{"submitted", transactions_submitted}, {"committed", transactions_committed}};
    j["receipts"] = {{"success", receipts_success}, {"reverted", revert_reasons}, {"by_function", receipts_by_function}};
    j["conservation"] = {{"genesis_total", wei_to_string(genesis_total)},
                         {"minted", wei_to_string(minted)},
                         {"balance_sum", wei_to_string(balance_sum)},
                         {"ok", conservation_ok}};
    j["adversary"] = {{"blocks_sent", adversary_blocks_sent},
                      {"tampered_relays", tampered_relays},
                      {"adversarial_blocks_accepted", adversarial_blocks_accepted},
                      {"spammer_success", spammer_success},
                      {"spammer_already_rated", spammer_already_rated}};
    j["nodes"] = json::array();
    for (const auto& n : nodes) {
        json nj = {{"id", n.id},
                   {"address", n.address.hex()},
                   {"height", n.height},
                   {"head_hash", n.head_hash.hex()},
                   {"state_digest", n.state_digest.hex()},
                   {"block_log_digest", n.block_log_digest.hex()},
                   {"out_of_turn_blocks", n.out_of_turn_blocks},
                   {"sealed", n.sealed},
                   {"reorgs", n.reorgs},
                   {"duplicate_blocks", n.duplicate_blocks},
                   {"malformed_messages", n.malformed_messages},
                   {"pending", n.pending},
                   {"rejected_blocks", n.rejected_blocks},
                   {"rejected_txs", n.rejected_txs},
                   {"replay_matches", n.replay_matches},
                   {"conservation_ok", n.conservation_ok}};
        if (!n.block_hashes.empty()) nj["block_hashes"] = n.block_hashes;
        j["nodes"].push_back(std::move(nj));
    }
    return j;
}

std::string SimReport::summary() const {
    std::ostringstream os;
    os << "seed " << seed << ": " << (converged ? "converged" : "NOT converged") << (timed_out ? " (timed out)" : "")
       << " after " << events_processed << " events, t=" << end_time_ms << " ms\n";
    os << "  height " << max_height << ", forks resolved " << fork_count << ", txs committed "
       << transactions_committed << "/" << transactions_submitted << "\n";
    os << "  receipts: " << receipts_success << " success";
    for (const auto& [reason, count] : revert_reasons) os << ", " << count << " \"" << reason << "\"";
    os << "\n  messages: " << messages_sent << " sent, " << messages_delivered << " delivered, " << messages_dropped
       << " dropped\n";
    os << "  conservation " << (conservation_ok ? "ok" : "VIOLATED") << ", adversarial blocks accepted "
       << adversarial_blocks_accepted << "\n";
    for (const auto& n : nodes) {
        os << "  node " << n.id << " " << n.address.hex() << " height " << n.height << " head "
           << n.head_hash.hex().substr(0, 18) << " sealed " << n.sealed;
        std::uint64_t rejected = 0;
        for (const auto& [_, c] : n.rejected_blocks) rejected += c;
        os << " rejected " << rejected << "\n";
    }
    return os.str();
}

}  // namespace trating::netsim
