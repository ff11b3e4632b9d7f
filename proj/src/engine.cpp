#include "trating/engine.hpp"

#include <algorithm>

namespace trating::consensus {

using ledger::Block;
using ledger::Transaction;
using ledger::TxError;

Engine::Engine(ledger::Genesis genesis, std::optional<KeyPair> key, EngineOptions options)
    : Engine(ledger::Chain(std::move(genesis)), std::move(key), options) {}

Engine::Engine(ledger::Chain chain, std::optional<KeyPair> key, EngineOptions options)
    : chain_(std::move(chain)), key_(std::move(key)), options_(options) {
    for (const Block& b : chain_.blocks())
        for (const auto& tx : b.transactions) seen_txs_.insert(tx.hash());
}

std::vector<Transaction> Engine::pending() const {
    std::vector<Transaction> out;
    out.reserve(pool_.size());
    for (const auto& [_, tx] : pool_) out.push_back(tx);
    return out;
}

std::uint64_t Engine::next_nonce(const Address& a) const {
    std::uint64_t n = chain_.state().nonce(a);
    for (const auto& [_, tx] : pool_)
        if (tx.from == a && tx.nonce >= n) n = tx.nonce + 1;
    return n;
}

TxError Engine::admit(const Transaction& tx, bool check_balance) const {
    const ledger::Genesis& g = genesis();
    if (TxError e = ledger::check_transaction(tx, g); e != TxError::None) return e;
    const ledger::LedgerState& s = chain_.state();
    if (tx.nonce < s.nonce(tx.from)) return TxError::BadNonce;
    if (tx.gas_limit < g.gas_schedule.intrinsic(tx.function())) return TxError::GasLimitTooLow;
    if (tx.function() == ledger::Function::Mint) {
        if (!g.faucet_enabled || !g.authorities.contains(tx.from) || tx.value != g.faucet_grant_wei) {
            return TxError::UnauthorizedMint;
        }
        return TxError::None;
    }
    Wei max_cost = 0;
    try {
        max_cost = checked_add(ledger::compute_fee(tx.gas_limit, tx.gas_price), tx.value);
    } catch (const Error&) {
        return TxError::Overflow;
    }
    if (check_balance && s.balance(tx.from) < max_cost) return TxError::InsufficientBalance;
    return TxError::None;
}

bool Engine::add_pending(const Transaction& tx, std::uint64_t now_ms) {
    Digest h = tx.hash();
    if (pool_index_.contains(h) || chain_.receipt(h)) return false;
    if (pool_.size() >= options_.max_pending) return false;
    if (pool_.empty()) pending_since_ms_ = now_ms;
    std::uint64_t seq = next_seq_++;
    pool_.emplace(seq, tx);
    pool_index_.emplace(h, seq);
    stalled_ = false;
    return true;
}

TxError Engine::submit(const Transaction& tx, std::uint64_t now_ms, Outbox& out) {
    Digest h = tx.hash();
    if (pool_index_.contains(h) || chain_.receipt(h)) return TxError::None;
    TxError e = admit(tx, true);
    if (e != TxError::None) {
        ++stats_.rejected_txs[std::string(ledger::to_string(e))];
        return e;
    }
    seen_txs_.insert(h);
    if (add_pending(tx, now_ms)) out.broadcast(net::NewTransaction{tx}, std::nullopt);
    return TxError::None;
}

void Engine::receive(ByteView bytes, PeerId from, std::uint64_t now_ms, Outbox& out) {
    net::Message m;
    try {
        m = net::decode(bytes);
    } catch (const Error&) {
        ++stats_.malformed_messages;
        return;
    }
    receive(m, from, now_ms, out);
}

void Engine::receive(const net::Message& m, PeerId from, std::uint64_t now_ms, Outbox& out) {
    std::visit(
        [&](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, net::NewTransaction>) {
                on_transaction(msg.tx, from, now_ms, out);
            } else if constexpr (std::is_same_v<T, net::NewBlock>) {
                on_block(msg.block, from, now_ms, out);
            } else if constexpr (std::is_same_v<T, net::ChainRequest>) {
                net::ChainResponse resp;
                resp.from_height = std::max<std::uint64_t>(1, msg.from_height);
                for (std::uint64_t h = resp.from_height; h <= chain_.height(); ++h)
                    resp.blocks.push_back(*chain_.block_at(h));
                out.send(from, resp);
            } else {
                on_chain_response(msg, from, now_ms, out);
            }
        },
        m);
}

void Engine::on_transaction(const Transaction& tx, PeerId from, std::uint64_t now_ms, Outbox& out) {
    Digest h = tx.hash();
    if (!seen_txs_.insert(h).second) return;
    TxError e = admit(tx, false);
    if (e != TxError::None) {
        ++stats_.rejected_txs[std::string(ledger::to_string(e))];
        return;
    }
    if (add_pending(tx, now_ms)) out.broadcast(net::NewTransaction{tx}, from);
}

void Engine::reject_block(ledger::Violation v) { ++stats_.rejected_blocks[std::string(ledger::to_string(v))]; }

std::uint64_t Engine::out_of_turn_upto(std::uint64_t height) const {
    std::uint64_t n = 0;
    for (std::uint64_t h = 1; h <= height && h <= chain_.height(); ++h)
        if (chain_.block_at(h)->out_of_turn) ++n;
    return n;
}

void Engine::on_block(const Block& block, PeerId from, std::uint64_t now_ms, Outbox& out) {
    AcceptDecision d = accept_block(chain_, block, now_ms / 1000);
    switch (d.placement) {
        case Placement::Reject: reject_block(*d.violation); return;
        case Placement::Duplicate: ++stats_.duplicate_blocks; return;
        case Placement::Orphan: {
            std::uint64_t start = std::max<std::uint64_t>(1, std::min(chain_.height(), block.number - 1));
            out.send(from, net::ChainRequest{start});
            return;
        }
        case Placement::Extends: {
            std::uint64_t prev = chain_.height();
            ledger::BlockCheck c = chain_.append(block);
            if (!c.ok()) {
                reject_block(*c.violation);
                return;
            }
            after_chain_change(prev, {}, std::span<const Block>(&block, 1), now_ms);
            out.broadcast(net::NewBlock{block}, from);
            return;
        }
        case Placement::Fork: {
            ChainSummary candidate{chain_.genesis_hash(), block.number,
                                   out_of_turn_upto(d.parent_height) + (block.out_of_turn ? 1 : 0), block.block_hash};
            if (prefer(candidate, ChainSummary::of(chain_))) {
                adopt_suffix(d.parent_height, std::span<const Block>(&block, 1), from, now_ms, out);
            }
            return;
        }
    }
}

void Engine::on_chain_response(const net::ChainResponse& resp, PeerId from, std::uint64_t now_ms, Outbox& out) {
    if (resp.blocks.empty()) return;
    for (std::size_t i = 1; i < resp.blocks.size(); ++i) {
        if (resp.blocks[i].number != resp.blocks[i - 1].number + 1 ||
            resp.blocks[i].parent_hash != resp.blocks[i - 1].block_hash) {
            ++stats_.malformed_messages;
            return;
        }
    }
    const Block& first = resp.blocks.front();
    if (first.number == 0) {
        ++stats_.malformed_messages;
        return;
    }
    const std::uint64_t parent = first.number - 1;
    auto ours = chain_.hash_at(parent);
    if (!ours || *ours != first.parent_hash) {
        if (parent == 0) {
            ++stats_.rejected_blocks["DifferentGenesis"];
            return;
        }
        // Fork point is deeper; widen the request.
        std::uint64_t& depth = sync_depth_[from];
        depth = std::max<std::uint64_t>(16, depth * 2);
        std::uint64_t start = first.number > depth ? first.number - depth : 1;
        out.send(from, net::ChainRequest{start});
        return;
    }
    sync_depth_.erase(from);

    std::size_t k = 0;
    while (k < resp.blocks.size()) {
        auto h = chain_.hash_at(resp.blocks[k].number);
        if (!h || *h != resp.blocks[k].block_hash) break;
        ++k;
    }
    if (k == resp.blocks.size()) return;
    std::span<const Block> suffix(resp.blocks.data() + k, resp.blocks.size() - k);
    const std::uint64_t fork = parent + k;
    std::uint64_t oot = out_of_turn_upto(fork);
    for (const Block& b : suffix)
        if (b.out_of_turn) ++oot;
    ChainSummary candidate{chain_.genesis_hash(), suffix.back().number, oot, suffix.back().block_hash};
    if (prefer(candidate, ChainSummary::of(chain_))) adopt_suffix(fork, suffix, from, now_ms, out);
}

void Engine::adopt_suffix(std::uint64_t fork_height, std::span<const Block> suffix, std::optional<PeerId> from,
                          std::uint64_t now_ms, Outbox& out) {
    for (const Block& b : suffix) {
        if (b.timestamp > now_ms / 1000 + kMaxFutureDriftSeconds) {
            reject_block(ledger::Violation::FutureTimestamp);
            return;
        }
    }
    ledger::Chain::SuffixCheck sc = chain_.check_suffix(fork_height, suffix);
    std::span<const Block> valid = suffix.first(sc.valid_count);
    if (!sc.ok()) reject_block(*sc.last.violation);
    if (valid.empty()) return;

    std::uint64_t oot = out_of_turn_upto(fork_height);
    for (const Block& b : valid)
        if (b.out_of_turn) ++oot;
    ChainSummary candidate{chain_.genesis_hash(), valid.back().number, oot, valid.back().block_hash};
    if (!prefer(candidate, ChainSummary::of(chain_))) return;

    std::vector<Block> removed = chain_.replace_suffix(fork_height, valid);
    if (!removed.empty()) ++stats_.reorgs;
    after_chain_change(fork_height, removed, valid, now_ms);
    out.broadcast(net::NewBlock{valid.back()}, from);
}

void Engine::after_chain_change(std::uint64_t fork_height, std::span<const Block> removed,
                                std::span<const Block> added, std::uint64_t now_ms) {
    const ledger::LedgerState& s = chain_.state();
    for (auto it = pool_.begin(); it != pool_.end();) {
        Digest h = it->second.hash();
        if (chain_.receipt(h) || it->second.nonce < s.nonce(it->second.from)) {
            pool_index_.erase(h);
            it = pool_.erase(it);
        } else {
            ++it;
        }
    }
    for (const Block& b : removed) {
        for (const Transaction& tx : b.transactions) {
            if (!chain_.receipt(tx.hash()) && tx.nonce >= s.nonce(tx.from)) add_pending(tx, now_ms);
        }
    }
    head_changed_ms_ = now_ms;
    if (!pool_.empty()) pending_since_ms_ = std::max(pending_since_ms_, now_ms);
    stalled_ = false;
    if (listener_) listener_(fork_height, added);
}

std::optional<std::uint64_t> Engine::seal_due_ms() const {
    if (!is_validator() || pool_.empty() || stalled_) return std::nullopt;
    const ledger::Genesis& g = genesis();
    const ledger::ChainHead head = chain_.head();
    const std::uint64_t rank = g.authorities.rank(head.number + 1, key_->address());
    const std::uint64_t wait_ms = rank * g.slot_deadline_seconds * 1000;
    std::uint64_t due = std::max(pending_since_ms_, head_changed_ms_) + options_.seal_delay_ms + wait_ms;
    return std::max(due, earliest_timestamp(head.timestamp, rank, g.slot_deadline_seconds) * 1000);
}

std::optional<std::uint64_t> Engine::next_wakeup_ms() const {
    std::optional<std::uint64_t> next = seal_due_ms();
    if (options_.sync_interval_ms > 0 && !peers_.empty()) {
        std::uint64_t sync = next_sync_ms_.value_or(options_.sync_interval_ms);
        next = next ? std::min(*next, sync) : sync;
    }
    return next;
}

void Engine::try_seal(std::uint64_t now_ms, Outbox& out) {
    std::vector<Transaction> txs = pending();
    SealResult r = seal_block(txs, chain_.head(), chain_.state(), genesis(), *key_, now_ms / 1000);
    for (const auto& [h, err] : r.dropped) {
        ++stats_.rejected_txs[std::string(ledger::to_string(err))];
        auto it = pool_index_.find(h);
        if (it != pool_index_.end()) {
            pool_.erase(it->second);
            pool_index_.erase(it);
        }
    }
    if (!r.block) {
        stalled_ = true;
        return;
    }
    const std::uint64_t prev = chain_.height();
    ledger::BlockCheck c = chain_.append(*r.block);
    if (!c.ok()) throw Error(ErrorCode::Internal, "sealed block failed validation: " + c.describe());
    ++stats_.sealed;
    after_chain_change(prev, {}, std::span<const Block>(&*r.block, 1), now_ms);
    out.broadcast(net::NewBlock{*r.block}, std::nullopt);
}

void Engine::sync_with(PeerId peer, Outbox& out) {
    out.send(peer, net::ChainRequest{std::max<std::uint64_t>(1, chain_.height())});
}

void Engine::tick(std::uint64_t now_ms, Outbox& out) {
    if (auto due = seal_due_ms(); due && now_ms >= *due) try_seal(now_ms, out);
    if (options_.sync_interval_ms > 0 && !peers_.empty()) {
        if (!next_sync_ms_) next_sync_ms_ = options_.sync_interval_ms;
        if (now_ms >= *next_sync_ms_) {
            sync_with(peers_[sync_cursor_++ % peers_.size()], out);
            next_sync_ms_ = now_ms + options_.sync_interval_ms;
        }
    }
}

}  // namespace trating::consensus
