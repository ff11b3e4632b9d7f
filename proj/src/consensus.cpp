#include "trating/consensus.hpp"

#include <algorithm>

namespace trating::consensus {

using ledger::TxError;

SealResult seal_block(std::span<const Transaction> pending, const ledger::ChainHead& head,
                      const ledger::LedgerState& state, const ledger::Genesis& genesis, const KeyPair& proposer,
                      std::uint64_t now_seconds) {
    const Address me = proposer.address();
    if (!genesis.authorities.contains(me)) {
        throw Error(ErrorCode::InvalidArgument, "refusing to seal: " + me.hex() + " is not an authority");
    }
    SealResult out;
    const std::uint64_t number = head.number + 1;
    const std::uint64_t rank = genesis.authorities.rank(number, me);
    const std::uint64_t timestamp = std::max(now_seconds, head.timestamp);
    if (timestamp < earliest_timestamp(head.timestamp, rank, genesis.slot_deadline_seconds)) return out;

    out.state = state;
    ledger::ExecContext ctx{genesis, me, number};
    std::vector<char> done(pending.size(), 0);
    std::vector<std::size_t> order;
    Gas gas = 0;
    bool full = false;
    bool progress = true;
    // Later passes pick up transactions whose nonce gap was filled by an earlier one.
    while (progress && !full) {
        progress = false;
        for (std::size_t i = 0; i < pending.size(); ++i) {
            if (done[i]) continue;
            const Transaction& tx = pending[i];
            const Gas intrinsic = genesis.gas_schedule.intrinsic(tx.function());
            if (gas + intrinsic > genesis.gas_limit) {
                full = true;
                break;
            }
            ledger::TxOutcome outcome = apply_transaction(out.state, tx, ctx);
            if (outcome.accepted()) {
                done[i] = 1;
                progress = true;
                gas += outcome.receipt.gas_used;
                outcome.receipt.index = static_cast<std::uint32_t>(order.size());
                order.push_back(i);
                out.receipts.push_back(std::move(outcome.receipt));
            } else if (outcome.error == TxError::BadNonce && tx.nonce > out.state.nonce(tx.from)) {
                continue;
            } else if (outcome.error == TxError::InsufficientBalance || outcome.error == TxError::MintRateLimited) {
                // May become valid on a later head.
                continue;
            } else {
                done[i] = 1;
                out.dropped.emplace_back(tx.hash(), outcome.error);
            }
        }
    }
    if (order.empty()) return out;

    Block b;
    b.number = number;
    b.parent_hash = head.hash;
    b.timestamp = timestamp;
    b.out_of_turn = rank != 0;
    b.gas_used = gas;
    b.gas_limit = genesis.gas_limit;
    b.transactions.reserve(order.size());
    for (std::size_t i : order) {
        b.transactions.push_back(pending[i]);
        out.included.push_back(pending[i].hash());
    }
    b.seal_with(proposer);
    out.block = std::move(b);
    return out;
}

AcceptDecision accept_block(const ledger::Chain& local, const Block& candidate, std::uint64_t now_seconds) {
    AcceptDecision d;
    auto reject = [&d](ledger::Violation v) {
        d.placement = Placement::Reject;
        d.violation = v;
        return d;
    };
    const ledger::Genesis& genesis = local.genesis();

    if (candidate.compute_hash() != candidate.block_hash) return reject(ledger::Violation::HashMismatch);
    if (local.height_of(candidate.block_hash)) {
        d.placement = Placement::Duplicate;
        return d;
    }
    if (!genesis.authorities.contains(candidate.proposer)) return reject(ledger::Violation::UnauthorizedProposer);
    if (derive_address(candidate.proposer_key) != candidate.proposer ||
        !verify(candidate.proposer_key, candidate.block_hash.view(), candidate.proposer_signature)) {
        return reject(ledger::Violation::BadProposerSignature);
    }
    if (candidate.timestamp > now_seconds + kMaxFutureDriftSeconds) return reject(ledger::Violation::FutureTimestamp);

    auto parent_height = local.height_of(candidate.parent_hash);
    if (!parent_height) {
        d.placement = Placement::Orphan;
        return d;
    }
    d.parent_height = *parent_height;
    if (candidate.number != *parent_height + 1) return reject(ledger::Violation::BadHeight);

    const std::uint64_t parent_ts = *parent_height == 0 ? genesis.timestamp : local.block_at(*parent_height)->timestamp;
    const std::uint64_t rank = genesis.authorities.rank(candidate.number, candidate.proposer);
    if (candidate.out_of_turn != (rank != 0)) return reject(ledger::Violation::OutOfTurnMismatch);
    if (candidate.timestamp < earliest_timestamp(parent_ts, rank, genesis.slot_deadline_seconds)) {
        return reject(ledger::Violation::PrematureOutOfTurn);
    }
    d.placement = *parent_height == local.height() ? Placement::Extends : Placement::Fork;
    return d;
}

ChainSummary ChainSummary::of(const ledger::Chain& chain) {
    return ChainSummary{chain.genesis_hash(), chain.height(), chain.out_of_turn_count(), chain.head().hash};
}

ForkWinner fork_choice(const ChainSummary& a, const ChainSummary& b) {
    if (a.genesis_hash != b.genesis_hash) return ForkWinner::Irreconcilable;
    if (a.length != b.length) return a.length > b.length ? ForkWinner::First : ForkWinner::Second;
    if (a.out_of_turn != b.out_of_turn) return a.out_of_turn < b.out_of_turn ? ForkWinner::First : ForkWinner::Second;
    return b.head_hash < a.head_hash ? ForkWinner::Second : ForkWinner::First;
}

bool prefer(const ChainSummary& candidate, const ChainSummary& current) {
    if (candidate == current) return false;
    return fork_choice(candidate, current) == ForkWinner::First;
}

}  // namespace trating::consensus
