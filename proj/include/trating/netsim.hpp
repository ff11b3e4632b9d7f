#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trating/ledger.hpp"

namespace trating::netsim {

struct PartitionSpec {
    std::uint64_t start_ms = 0;
    std::uint64_t duration_ms = 0;
    /// One side of the cut; every other validator is on the other side.
    std::set<std::uint32_t> group;
};

enum class AdversaryBehavior { NonAuthorityProposer, DoubleRateSpammer, TamperedBlockRelay };

std::string_view to_string(AdversaryBehavior b);

struct AdversarySpec {
    AdversaryBehavior behavior = AdversaryBehavior::NonAuthorityProposer;
    std::uint64_t start_ms = 1000;
    std::uint64_t interval_ms = 500;
    /// Blocks proposed or SetRate attempts sent; ignored by the relay.
    std::uint32_t count = 10;
};

struct ScriptedTx {
    std::uint64_t at_ms = 0;
    /// "owner", "rater:<i>" or "validator:<i>"
    std::string sender;
    ledger::Function function = ledger::Function::SetRate;
    std::uint32_t product = 0;
    std::uint32_t rater = 0;
    std::uint32_t value = 0;
    std::optional<std::uint32_t> node;
};

struct Workload {
    /// Random rating traffic; ignored when script is non-empty.
    std::uint32_t transactions = 100;
    std::uint32_t raters = 20;
    std::uint32_t products = 4;
    std::uint64_t start_ms = 500;
    std::uint64_t interval_ms = 50;
    std::uint32_t faucet_mints = 0;
    double get_rate_fraction = 0.05;
    Wei gas_price = 1;
    std::vector<ScriptedTx> script;
};

struct SimConfig {
    std::uint64_t seed = 1;
    std::uint32_t validators = 4;
    std::uint64_t latency_min_ms = 5;
    std::uint64_t latency_max_ms = 50;
    double drop_rate = 0.0;
    std::uint64_t slot_deadline_seconds = 2;
    std::uint64_t seal_delay_ms = 250;
    std::uint64_t sync_interval_ms = 3000;
    std::uint64_t quiet_period_ms = 10000;
    std::uint64_t event_budget = 5'000'000;
    ledger::AveragingMode averaging_mode = ledger::AveragingMode::Corrected;
    bool include_block_logs = false;
    std::vector<PartitionSpec> partitions;
    std::vector<AdversarySpec> adversaries;
    Workload workload;

    /// Throws Error(Config) on invalid or unknown fields.
    static SimConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    /// Throws Error(Config): no validators, latency range inverted, overlapping partitions, ...
    void validate() const;
};

struct NodeReport {
    std::uint32_t id = 0;
    Address address;
    std::uint64_t height = 0;
    Digest head_hash;
    Digest state_digest;
    /// hash32 over the concatenated block hashes, genesis excluded.
    Digest block_log_digest;
    std::uint64_t out_of_turn_blocks = 0;
    std::uint64_t sealed = 0;
    std::uint64_t reorgs = 0;
    std::uint64_t duplicate_blocks = 0;
    std::uint64_t malformed_messages = 0;
    std::uint64_t pending = 0;
    std::map<std::string, std::uint64_t> rejected_blocks;
    std::map<std::string, std::uint64_t> rejected_txs;
    bool replay_matches = false;
    bool conservation_ok = false;
    std::vector<std::string> block_hashes;
};

struct SimReport {
    std::uint64_t seed = 0;
    bool timed_out = false;
    bool converged = false;
    std::uint64_t events_processed = 0;
    std::uint64_t end_time_ms = 0;
    std::uint64_t convergence_time_ms = 0;
    std::uint64_t fork_count = 0;
    std::uint64_t max_height = 0;
    std::uint64_t messages_sent = 0;
    std::uint64_t messages_delivered = 0;
    std::uint64_t messages_dropped = 0;
    std::uint64_t transactions_submitted = 0;
    std::uint64_t transactions_committed = 0;
    std::uint64_t receipts_success = 0;
    std::map<std::string, std::uint64_t> revert_reasons;
    std::map<std::string, std::uint64_t> receipts_by_function;
    Wei genesis_total = 0;
    Wei minted = 0;
    Wei balance_sum = 0;
    bool conservation_ok = false;
    std::uint64_t adversary_blocks_sent = 0;
    std::uint64_t tampered_relays = 0;
    std::uint64_t adversarial_blocks_accepted = 0;
    std::uint64_t spammer_success = 0;
    std::uint64_t spammer_already_rated = 0;
    std::vector<NodeReport> nodes;

    nlohmann::json to_json() const;
    std::string summary() const;
};

/// Deterministic discrete-event run of V validator engines over a simulated network.
class Simulation {
public:
    explicit Simulation(SimConfig config);
    ~Simulation();
    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    /// Adds a cut for [start, start + duration). Throws Error(Config) if it overlaps another.
    void inject_partition(const PartitionSpec& partition);
    void add_adversary(const AdversarySpec& adversary);

    /// Genesis the run will use; available before run().
    const ledger::Genesis& genesis() const;

    SimReport run();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

SimReport run_simulation(const SimConfig& config);

}  // namespace trating::netsim
