#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "trating/consensus.hpp"
#include "trating/messages.hpp"

namespace trating::consensus {

using PeerId = std::uint32_t;

/// Transport the engine writes to. The simulator queues timed deliveries; the HTTP node
/// posts to peer sockets.
class Outbox {
public:
    virtual ~Outbox() = default;
    virtual void send(PeerId to, const net::Message& m) = 0;
    /// To every peer except `except`.
    virtual void broadcast(const net::Message& m, std::optional<PeerId> except) = 0;
};

struct EngineOptions {
    /// Wait after the first pending transaction before sealing, so blocks batch.
    std::uint64_t seal_delay_ms = 250;
    /// Periodic ChainRequest to one peer; 0 disables.
    std::uint64_t sync_interval_ms = 3000;
    std::size_t max_pending = 100000;
};

struct EngineStats {
    std::map<std::string, std::uint64_t> rejected_blocks;
    std::map<std::string, std::uint64_t> rejected_txs;
    std::uint64_t duplicate_blocks = 0;
    std::uint64_t reorgs = 0;
    std::uint64_t sealed = 0;
    std::uint64_t malformed_messages = 0;
};

/// Called after blocks above fork_height were replaced by `added` (plain extension has
/// fork_height == previous height).
using ChainListener = std::function<void(std::uint64_t fork_height, std::span<const ledger::Block> added)>;

/// One node's consensus state machine: mempool, chain, proposal timer and sync. Driven
/// entirely by its caller; performs no I/O and reads no clock.
class Engine {
public:
    Engine(ledger::Genesis genesis, std::optional<KeyPair> key, EngineOptions options = {});
    Engine(ledger::Chain chain, std::optional<KeyPair> key, EngineOptions options = {});

    void set_peers(std::vector<PeerId> peers) { peers_ = std::move(peers); }
    void set_listener(ChainListener listener) { listener_ = std::move(listener); }

    /// Client submission: full admission checks including balance. Relays on success.
    ledger::TxError submit(const ledger::Transaction& tx, std::uint64_t now_ms, Outbox& out);

    void receive(ByteView bytes, PeerId from, std::uint64_t now_ms, Outbox& out);
    void receive(const net::Message& m, PeerId from, std::uint64_t now_ms, Outbox& out);

    void tick(std::uint64_t now_ms, Outbox& out);

    /// Earliest time tick() has work to do, including periodic sync.
    std::optional<std::uint64_t> next_wakeup_ms() const;
    /// When this node will next try to seal, if it has something to seal.
    std::optional<std::uint64_t> seal_due_ms() const;

    void sync_with(PeerId peer, Outbox& out);

    const ledger::Chain& chain() const { return chain_; }
    const ledger::Genesis& genesis() const { return chain_.genesis(); }
    const EngineStats& stats() const { return stats_; }
    bool is_validator() const { return key_ && genesis().authorities.contains(key_->address()); }
    const std::optional<KeyPair>& key() const { return key_; }

    std::vector<ledger::Transaction> pending() const;
    std::size_t pending_count() const { return pool_.size(); }
    bool is_pending(const Digest& tx_hash) const { return pool_index_.contains(tx_hash); }
    /// Next usable nonce for a sender once pending transactions are counted.
    std::uint64_t next_nonce(const Address& a) const;
    std::uint64_t last_head_change_ms() const { return head_changed_ms_; }

private:
    ledger::TxError admit(const ledger::Transaction& tx, bool check_balance) const;
    bool add_pending(const ledger::Transaction& tx, std::uint64_t now_ms);
    void on_transaction(const ledger::Transaction& tx, PeerId from, std::uint64_t now_ms, Outbox& out);
    void on_block(const ledger::Block& block, PeerId from, std::uint64_t now_ms, Outbox& out);
    void on_chain_response(const net::ChainResponse& resp, PeerId from, std::uint64_t now_ms, Outbox& out);
    void adopt_suffix(std::uint64_t fork_height, std::span<const ledger::Block> suffix, std::optional<PeerId> from,
                      std::uint64_t now_ms, Outbox& out);
    void after_chain_change(std::uint64_t fork_height, std::span<const ledger::Block> removed,
                            std::span<const ledger::Block> added, std::uint64_t now_ms);
    void try_seal(std::uint64_t now_ms, Outbox& out);
    std::uint64_t out_of_turn_upto(std::uint64_t height) const;
    void reject_block(ledger::Violation v);

    ledger::Chain chain_;
    std::optional<KeyPair> key_;
    EngineOptions options_;
    std::vector<PeerId> peers_;
    ChainListener listener_;
    EngineStats stats_;

    std::map<std::uint64_t, ledger::Transaction> pool_;
    std::unordered_map<Digest, std::uint64_t> pool_index_;
    std::unordered_set<Digest> seen_txs_;
    std::uint64_t next_seq_ = 0;

    std::uint64_t pending_since_ms_ = 0;
    std::uint64_t head_changed_ms_ = 0;
    bool stalled_ = false;
    std::optional<std::uint64_t> next_sync_ms_;
    std::size_t sync_cursor_ = 0;
    std::unordered_map<PeerId, std::uint64_t> sync_depth_;
};

}  // namespace trating::consensus
