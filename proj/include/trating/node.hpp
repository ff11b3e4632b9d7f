#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "trating/blocklog.hpp"
#include "trating/engine.hpp"

namespace trating::node {

struct NodeConfig {
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    int port = 7545;
    std::filesystem::path data_dir;
    /// Required on first start; afterwards it must match the stored genesis.
    std::optional<ledger::Genesis> genesis;
    /// Validators seal blocks and serve the faucet; without a key the node only observes.
    std::optional<KeyPair> validator_key;
    /// Holding the contract owner's key enables POST /demo/grant.
    std::optional<KeyPair> owner_key;
    /// Base URLs such as http://127.0.0.1:7546.
    std::vector<std::string> peers;
    bool faucet_enabled = true;
    /// Must equal the genesis grant when set.
    std::optional<Wei> faucet_grant_wei;
    std::optional<std::filesystem::path> ui_dir;
    /// URL peers use to reach this node; defaults to http://host:port.
    std::string advertise_url;
    consensus::EngineOptions engine;
    std::uint64_t wait_timeout_ms = 20000;
    store::CrashInjection crash;
    std::function<void(const std::string&)> log;
};

struct BlockEntry {
    ledger::Block block;
    std::vector<ledger::Receipt> receipts;
};

/// Immutable view published by the commit loop after every change.
struct Snapshot {
    std::uint64_t height = 0;
    Digest head_hash;
    std::uint64_t head_timestamp = 0;
    ledger::LedgerState state;
    std::vector<std::shared_ptr<const BlockEntry>> blocks;
    std::unordered_map<Digest, std::pair<std::uint64_t, std::uint32_t>> tx_index;
    std::vector<ledger::Transaction> pending;

    const ledger::Receipt* receipt(const Digest& tx_hash) const;
};

/// HTTP JSON API, peer gossip and block log persistence around one consensus engine.
class Node {
public:
    /// Recovers from the data directory. Throws Error on a corrupt log or bad config.
    explicit Node(NodeConfig config);
    ~Node();
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    /// Binds and starts the server and background threads. Throws Error(Io) if the port is busy.
    void start();
    void stop();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();

    int port() const;
    std::string url() const;
    std::shared_ptr<const Snapshot> snapshot() const;
    const ledger::Genesis& genesis() const;
    /// True when recovery dropped a torn final record.
    bool recovered_torn_tail() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Reads a genesis JSON file.
ledger::Genesis load_genesis_file(const std::filesystem::path& path);
/// Reads a keypair JSON file.
KeyPair load_keypair_file(const std::filesystem::path& path);
/// Writes a keypair file readable only by its owner.
void save_keypair_file(const std::filesystem::path& path, const KeyPair& key);

}  // namespace trating::node
