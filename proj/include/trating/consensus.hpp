#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "trating/authority.hpp"
#include "trating/ledger.hpp"

namespace trating::consensus {

using ledger::Block;
using ledger::Transaction;

/// Seconds a block timestamp may run ahead of the receiver's clock.
inline constexpr std::uint64_t kMaxFutureDriftSeconds = 1;

struct SealResult {
    std::optional<Block> block;
    /// Hashes of packed transactions, in block order.
    std::vector<Digest> included;
    /// Transactions that can never apply on this head (stale nonce, bad signature, ...).
    std::vector<std::pair<Digest, ledger::TxError>> dropped;
    std::vector<ledger::Receipt> receipts;
    ledger::LedgerState state;
};

/// Packs pending transactions in arrival order until the block gas limit would be
/// exceeded, then signs the block. Transactions with a future nonce stay pending.
/// Returns no block when nothing applies or when an out-of-turn proposer is early.
/// Throws Error(InvalidArgument) when the key is not an authority.
SealResult seal_block(std::span<const Transaction> pending, const ledger::ChainHead& head,
                      const ledger::LedgerState& state, const ledger::Genesis& genesis, const KeyPair& proposer,
                      std::uint64_t now_seconds);

enum class Placement {
    /// Extends the local head.
    Extends,
    /// Already in the local chain.
    Duplicate,
    /// Competes with a local block; parent is in the local chain below the head.
    Fork,
    /// Parent unknown; the chain must be synced first.
    Orphan,
    Reject,
};

struct AcceptDecision {
    Placement placement = Placement::Reject;
    std::optional<ledger::Violation> violation;
    /// Height of the candidate's parent when known.
    std::uint64_t parent_height = 0;
};

/// Consensus admission for a block received from the network: hash, authority, signature,
/// turn timing and clock checks. Full state validation happens when the block is applied.
AcceptDecision accept_block(const ledger::Chain& local, const Block& candidate, std::uint64_t now_seconds);

/// What fork choice needs to know about a chain.
struct ChainSummary {
    Digest genesis_hash;
    std::uint64_t length = 0;
    std::uint64_t out_of_turn = 0;
    Digest head_hash;

    static ChainSummary of(const ledger::Chain& chain);
    bool operator==(const ChainSummary&) const = default;
};

enum class ForkWinner { First, Second, Irreconcilable };

/// Longer chain wins, then fewer out-of-turn blocks, then the lower head hash.
ForkWinner fork_choice(const ChainSummary& a, const ChainSummary& b);

/// True when candidate strictly beats current.
bool prefer(const ChainSummary& candidate, const ChainSummary& current);

}  // namespace trating::consensus
