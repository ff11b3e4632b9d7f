#include "trating/ledger.hpp"

#include <algorithm>

namespace trating::ledger {

std::string_view to_string(Function f) {
    switch (f) {
        case Function::GiveRightToRate: return "GiveRightToRate";
        case Function::SetRate: return "SetRate";
        case Function::GetRate: return "GetRate";
        case Function::CreateProduct: return "CreateProduct";
        case Function::Mint: return "Mint";
    }
    return "?";
}

std::optional<Function> function_from_string(std::string_view name) {
    for (auto f : {Function::GiveRightToRate, Function::SetRate, Function::GetRate, Function::CreateProduct,
                   Function::Mint}) {
        if (to_string(f) == name) return f;
    }
    return std::nullopt;
}

Gas GasSchedule::intrinsic(Function f) const {
    switch (f) {
        case Function::GiveRightToRate: return give_right_to_rate;
        case Function::SetRate: return set_rate;
        case Function::GetRate: return get_rate;
        case Function::CreateProduct: return create_product;
        case Function::Mint: return 0;
    }
    throw Error(ErrorCode::Internal, "unhandled function tag");
}

Wei compute_fee(Gas gas_used, Wei gas_price) { return checked_mul(static_cast<Wei>(gas_used), gas_price); }

std::string_view to_string(TxError e) {
    switch (e) {
        case TxError::None: return "None";
        case TxError::BadSignature: return "BadSignature";
        case TxError::BadNonce: return "BadNonce";
        case TxError::InsufficientBalance: return "InsufficientBalance";
        case TxError::UnknownFunction: return "UnknownFunction";
        case TxError::GasLimitTooLow: return "GasLimitTooLow";
        case TxError::BadTarget: return "BadTarget";
        case TxError::Overflow: return "Overflow";
        case TxError::UnauthorizedMint: return "UnauthorizedMint";
        case TxError::MintRateLimited: return "MintRateLimited";
        case TxError::Malformed: return "Malformed";
    }
    return "?";
}

std::string_view to_string(Violation v) {
    switch (v) {
        case Violation::HashMismatch: return "HashMismatch";
        case Violation::ParentMismatch: return "ParentMismatch";
        case Violation::BadHeight: return "BadHeight";
        case Violation::TimestampRegression: return "TimestampRegression";
        case Violation::UnauthorizedProposer: return "UnauthorizedProposer";
        case Violation::BadProposerSignature: return "BadProposerSignature";
        case Violation::OutOfTurnMismatch: return "OutOfTurnMismatch";
        case Violation::PrematureOutOfTurn: return "PrematureOutOfTurn";
        case Violation::FutureTimestamp: return "FutureTimestamp";
        case Violation::GasLimitMismatch: return "GasLimitMismatch";
        case Violation::EmptyBlock: return "EmptyBlock";
        case Violation::InvalidTransaction: return "InvalidTransaction";
        case Violation::GasUsedMismatch: return "GasUsedMismatch";
        case Violation::GasLimitExceeded: return "GasLimitExceeded";
        case Violation::Malformed: return "Malformed";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Transaction encoding

namespace {

void encode_call(ByteWriter& w, const CallPayload& call) {
    w.u8(static_cast<std::uint8_t>(call.index()));
    std::visit(
        [&w](const auto& args) {
            using T = std::decay_t<decltype(args)>;
            if constexpr (std::is_same_v<T, GiveRightToRateArgs>) {
                w.raw(args.rater.view());
            } else if constexpr (std::is_same_v<T, SetRateArgs>) {
                w.raw(args.product.view());
                w.u8(args.value);
            } else if constexpr (std::is_same_v<T, GetRateArgs>) {
                w.raw(args.product.view());
            } else if constexpr (std::is_same_v<T, CreateProductArgs>) {
                w.raw(args.product.view());
                w.str(args.name);
            }
        },
        call);
}

CallPayload decode_call(ByteReader& r) {
    std::uint8_t tag = r.u8();
    switch (static_cast<Function>(tag)) {
        case Function::GiveRightToRate: return GiveRightToRateArgs{Address{r.fixed<20>()}};
        case Function::SetRate: {
            Address product{r.fixed<20>()};
            return SetRateArgs{product, r.u8()};
        }
        case Function::GetRate: return GetRateArgs{Address{r.fixed<20>()}};
        case Function::CreateProduct: {
            Address product{r.fixed<20>()};
            return CreateProductArgs{product, r.str()};
        }
        case Function::Mint: return MintArgs{};
    }
    throw Error(ErrorCode::Parse, "unknown function tag " + std::to_string(tag));
}

}  // namespace

Bytes Transaction::unsigned_bytes() const {
    ByteWriter w;
    w.u64(nonce);
    w.raw(from.view());
    w.raw(to.view());
    encode_call(w, call);
    w.u128(value);
    w.u64(gas_limit);
    w.u128(gas_price);
    return std::move(w).take();
}

Bytes Transaction::signed_bytes() const {
    ByteWriter w;
    w.raw(unsigned_bytes());
    w.raw(public_key.view());
    w.raw(signature.view());
    return std::move(w).take();
}

Digest Transaction::hash() const { return hash32(unsigned_bytes()); }

void Transaction::sign_with(const KeyPair& key) {
    public_key = key.public_key();
    from = key.address();
    signature = key.sign(unsigned_bytes());
}

Transaction Transaction::decode(ByteReader& r) {
    Transaction tx;
    tx.nonce = r.u64();
    tx.from = Address{r.fixed<20>()};
    tx.to = Address{r.fixed<20>()};
    tx.call = decode_call(r);
    tx.value = r.u128();
    tx.gas_limit = r.u64();
    tx.gas_price = r.u128();
    tx.public_key = PublicKey{r.fixed<32>()};
    tx.signature = Signature{r.fixed<64>()};
    return tx;
}

Transaction Transaction::decode(ByteView signed_bytes) {
    ByteReader r(signed_bytes);
    Transaction tx = decode(r);
    if (!r.done()) throw Error(ErrorCode::Parse, "trailing bytes after transaction");
    return tx;
}

// ---------------------------------------------------------------------------
// Genesis

Address default_contract_address(const Address& owner) {
    ByteWriter w;
    w.str("TransparentRating");
    w.raw(owner.view());
    Digest d = hash32(w.bytes());
    Address a;
    std::copy(d.bytes.end() - 20, d.bytes.end(), a.bytes.begin());
    return a;
}

Bytes Genesis::canonical_bytes() const {
    ByteWriter w;
    w.u64(chain_id);
    w.u64(gas_limit);
    w.u64(timestamp);
    w.u64(slot_deadline_seconds);
    w.u32(static_cast<std::uint32_t>(authorities.size()));
    for (const auto& a : authorities.members()) w.raw(a.view());
    w.raw(owner.view());
    w.raw(contract_address.view());
    w.u8(averaging_mode == AveragingMode::Corrected ? 0 : 1);
    w.u8(rating_scope == RatingScope::PerProduct ? 0 : 1);
    w.u8(faucet_enabled ? 1 : 0);
    w.u128(faucet_grant_wei);
    w.u64(faucet_window_blocks);
    w.u128(gas_price_suggestion);
    w.u64(gas_schedule.give_right_to_rate);
    w.u64(gas_schedule.set_rate);
    w.u64(gas_schedule.get_rate);
    w.u64(gas_schedule.create_product);
    w.u32(static_cast<std::uint32_t>(balances.size()));
    for (const auto& [addr, bal] : balances) {
        w.raw(addr.view());
        w.u128(bal);
    }
    w.u32(static_cast<std::uint32_t>(products.size()));
    for (const auto& p : products) {
        w.raw(p.address.view());
        w.str(p.name);
    }
    w.u32(static_cast<std::uint32_t>(raters.size()));
    for (const auto& r : raters) w.raw(r.view());
    return std::move(w).take();
}

Digest Genesis::hash() const { return hash32(canonical_bytes()); }

Wei Genesis::total_allocation() const {
    Wei total = 0;
    for (const auto& [_, bal] : balances) total = checked_add(total, bal);
    return total;
}

// ---------------------------------------------------------------------------
// State

LedgerState LedgerState::from_genesis(const Genesis& genesis) {
    LedgerState s;
    for (const auto& [addr, bal] : genesis.balances) s.accounts[addr].balance = bal;
    s.contract = contract::ContractState(genesis.owner, genesis.averaging_mode, genesis.rating_scope);
    for (const auto& p : genesis.products) {
        if (auto err = s.contract.create_product(genesis.owner, p.address, p.name)) {
            throw Error(ErrorCode::Config, "genesis product " + p.address.hex() + ": " + *err);
        }
    }
    for (const auto& r : genesis.raters) {
        if (auto err = s.contract.give_right_to_rate(genesis.owner, r)) {
            throw Error(ErrorCode::Config, "genesis rater " + r.hex() + ": " + *err);
        }
    }
    return s;
}

Wei LedgerState::balance(const Address& a) const {
    auto it = accounts.find(a);
    return it == accounts.end() ? 0 : it->second.balance;
}

std::uint64_t LedgerState::nonce(const Address& a) const {
    auto it = accounts.find(a);
    return it == accounts.end() ? 0 : it->second.nonce;
}

Wei LedgerState::total_balance() const {
    Wei total = 0;
    for (const auto& [_, acct] : accounts) total = checked_add(total, acct.balance);
    return total;
}

Bytes LedgerState::canonical_bytes() const {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(accounts.size()));
    for (const auto& [addr, acct] : accounts) {
        w.raw(addr.view());
        w.u128(acct.balance);
        w.u64(acct.nonce);
    }
    contract.encode(w);
    w.u32(static_cast<std::uint32_t>(last_mint_height.size()));
    for (const auto& [addr, h] : last_mint_height) {
        w.raw(addr.view());
        w.u64(h);
    }
    w.u128(total_minted);
    return std::move(w).take();
}

Digest LedgerState::digest() const { return hash32(canonical_bytes()); }

// ---------------------------------------------------------------------------
// Execution

TxError check_transaction(const Transaction& tx, const Genesis& genesis) {
    if (tx.function() != Function::Mint && tx.to != genesis.contract_address) return TxError::BadTarget;
    if (tx.function() == Function::Mint && tx.to.is_zero()) return TxError::BadTarget;
    if (derive_address(tx.public_key) != tx.from) return TxError::BadSignature;
    if (!verify(tx.public_key, tx.unsigned_bytes(), tx.signature)) return TxError::BadSignature;
    return TxError::None;
}

namespace {

TxOutcome reject(TxError e) { return TxOutcome{e, {}}; }

contract::CallResult execute_call(contract::ContractState& c, const Address& caller, const CallPayload& call,
                                  std::optional<std::uint64_t>& return_value) {
    return std::visit(
        [&](const auto& args) -> contract::CallResult {
            using T = std::decay_t<decltype(args)>;
            if constexpr (std::is_same_v<T, GiveRightToRateArgs>) {
                return c.give_right_to_rate(caller, args.rater);
            } else if constexpr (std::is_same_v<T, SetRateArgs>) {
                return c.set_rate(caller, args.product, args.value);
            } else if constexpr (std::is_same_v<T, GetRateArgs>) {
                return_value = c.get_rate(args.product);
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, CreateProductArgs>) {
                return c.create_product(caller, args.product, args.name);
            } else {
                throw Error(ErrorCode::Internal, "mint is not a contract call");
            }
        },
        call);
}

TxOutcome apply_mint(LedgerState& state, const Transaction& tx, const ExecContext& ctx) {
    const Genesis& g = ctx.genesis;
    if (!g.faucet_enabled || !g.authorities.contains(tx.from) || tx.value != g.faucet_grant_wei) {
        return reject(TxError::UnauthorizedMint);
    }
    if (auto it = state.last_mint_height.find(tx.to);
        it != state.last_mint_height.end() && ctx.block_number < it->second + g.faucet_window_blocks) {
        return reject(TxError::MintRateLimited);
    }
    Wei new_balance = 0;
    Wei new_total = 0;
    try {
        new_balance = checked_add(state.balance(tx.to), tx.value);
        new_total = checked_add(state.total_minted, tx.value);
    } catch (const Error&) {
        return reject(TxError::Overflow);
    }
    state.accounts[tx.from].nonce += 1;
    state.accounts[tx.to].balance = new_balance;
    state.total_minted = new_total;
    state.last_mint_height[tx.to] = ctx.block_number;

    TxOutcome out;
    out.receipt.tx_hash = tx.hash();
    out.receipt.block_number = ctx.block_number;
    out.receipt.function = Function::Mint;
    out.receipt.from = tx.from;
    out.receipt.gas_price = tx.gas_price;
    return out;
}

}  // namespace

TxOutcome apply_transaction(LedgerState& state, const Transaction& tx, const ExecContext& ctx) {
    if (TxError e = check_transaction(tx, ctx.genesis); e != TxError::None) return reject(e);
    if (tx.nonce != state.nonce(tx.from)) return reject(TxError::BadNonce);

    const Function fn = tx.function();
    const Gas intrinsic = ctx.genesis.gas_schedule.intrinsic(fn);
    if (tx.gas_limit < intrinsic) return reject(TxError::GasLimitTooLow);
    if (fn == Function::Mint) return apply_mint(state, tx, ctx);

    Wei fee = 0;
    Wei max_cost = 0;
    try {
        fee = compute_fee(intrinsic, tx.gas_price);
        max_cost = checked_add(compute_fee(tx.gas_limit, tx.gas_price), tx.value);
    } catch (const Error&) {
        return reject(TxError::Overflow);
    }
    if (state.balance(tx.from) < max_cost) return reject(TxError::InsufficientBalance);
    if (fee != 0) {
        try {
            checked_add(state.balance(ctx.proposer), fee);
        } catch (const Error&) {
            return reject(TxError::Overflow);
        }
    }

    AccountState& sender = state.accounts[tx.from];
    sender.balance -= fee;
    sender.nonce += 1;
    if (fee != 0) state.accounts[ctx.proposer].balance += fee;

    TxOutcome out;
    Receipt& r = out.receipt;
    r.tx_hash = tx.hash();
    r.block_number = ctx.block_number;
    r.function = fn;
    r.from = tx.from;
    r.gas_used = intrinsic;
    r.gas_price = tx.gas_price;
    r.fee_wei = fee;

    // The contract only mutates on success, so a revert needs no rollback here.
    contract::CallResult result = execute_call(state.contract, tx.from, tx.call, r.return_value);
    if (result) {
        r.status = ReceiptStatus::Reverted;
        r.revert_reason = *result;
        r.return_value.reset();
        return out;
    }
    if (tx.value != 0) {
        // Balance already covers gas_limit * price + value, and fee <= that bound.
        state.accounts[tx.from].balance -= tx.value;
        state.accounts[tx.to].balance = checked_add(state.balance(tx.to), tx.value);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Blocks

Bytes Block::canonical_bytes() const {
    ByteWriter w;
    w.u64(number);
    w.raw(parent_hash.view());
    w.u64(timestamp);
    w.raw(proposer.view());
    w.u8(out_of_turn ? 1 : 0);
    w.u64(gas_used);
    w.u64(gas_limit);
    w.u32(static_cast<std::uint32_t>(transactions.size()));
    for (const auto& tx : transactions) w.blob(tx.signed_bytes());
    return std::move(w).take();
}

void Block::seal_with(const KeyPair& key) {
    proposer = key.address();
    proposer_key = key.public_key();
    block_hash = compute_hash();
    proposer_signature = key.sign(block_hash.view());
}

Bytes Block::encode() const {
    ByteWriter w;
    w.blob(canonical_bytes());
    w.raw(block_hash.view());
    w.raw(proposer_key.view());
    w.raw(proposer_signature.view());
    return std::move(w).take();
}

Block Block::decode(ByteView bytes) {
    ByteReader outer(bytes);
    Bytes body = outer.blob();
    Block b;
    b.block_hash = Digest{outer.fixed<32>()};
    b.proposer_key = PublicKey{outer.fixed<32>()};
    b.proposer_signature = Signature{outer.fixed<64>()};
    if (!outer.done()) throw Error(ErrorCode::Parse, "trailing bytes after block");

    ByteReader r(body);
    b.number = r.u64();
    b.parent_hash = Digest{r.fixed<32>()};
    b.timestamp = r.u64();
    b.proposer = Address{r.fixed<20>()};
    std::uint8_t oot = r.u8();
    if (oot > 1) throw Error(ErrorCode::Parse, "out_of_turn flag must be 0 or 1");
    b.out_of_turn = oot == 1;
    b.gas_used = r.u64();
    b.gas_limit = r.u64();
    std::uint32_t count = r.u32();
    b.transactions.reserve(std::min<std::uint32_t>(count, 4096));
    for (std::uint32_t i = 0; i < count; ++i) b.transactions.push_back(Transaction::decode(r.blob()));
    if (!r.done()) throw Error(ErrorCode::Parse, "trailing bytes in block body");
    return b;
}

std::string BlockCheck::describe() const {
    if (!violation) return "ok";
    std::string out(to_string(*violation));
    if (*violation == Violation::InvalidTransaction) {
        out += " (tx " + std::to_string(tx_index) + ": " + std::string(to_string(tx_error)) + ")";
    }
    return out;
}

BlockCheck validate_block(const ChainHead& head, const LedgerState& state, const Block& candidate,
                          const Genesis& genesis) {
    BlockCheck check;
    auto fail = [&check](Violation v) {
        check.violation = v;
        return std::move(check);
    };

    if (candidate.compute_hash() != candidate.block_hash) return fail(Violation::HashMismatch);
    if (candidate.parent_hash != head.hash) return fail(Violation::ParentMismatch);
    if (candidate.number != head.number + 1) return fail(Violation::BadHeight);
    if (candidate.timestamp < head.timestamp) return fail(Violation::TimestampRegression);

    const auto& authorities = genesis.authorities;
    if (!authorities.contains(candidate.proposer)) return fail(Violation::UnauthorizedProposer);
    if (derive_address(candidate.proposer_key) != candidate.proposer ||
        !verify(candidate.proposer_key, candidate.block_hash.view(), candidate.proposer_signature)) {
        return fail(Violation::BadProposerSignature);
    }
    const std::uint64_t rank = authorities.rank(candidate.number, candidate.proposer);
    if (candidate.out_of_turn != (rank != 0)) return fail(Violation::OutOfTurnMismatch);
    if (candidate.timestamp <
        consensus::earliest_timestamp(head.timestamp, rank, genesis.slot_deadline_seconds)) {
        return fail(Violation::PrematureOutOfTurn);
    }
    if (candidate.gas_limit != genesis.gas_limit) return fail(Violation::GasLimitMismatch);
    if (candidate.transactions.empty()) return fail(Violation::EmptyBlock);

    check.state = state;
    ExecContext ctx{genesis, candidate.proposer, candidate.number};
    Gas total = 0;
    for (std::size_t i = 0; i < candidate.transactions.size(); ++i) {
        TxOutcome outcome = apply_transaction(check.state, candidate.transactions[i], ctx);
        if (!outcome.accepted()) {
            check.tx_index = i;
            check.tx_error = outcome.error;
            check.receipts.clear();
            return fail(Violation::InvalidTransaction);
        }
        outcome.receipt.index = static_cast<std::uint32_t>(i);
        total += outcome.receipt.gas_used;
        check.receipts.push_back(std::move(outcome.receipt));
    }
    if (total != candidate.gas_used) return fail(Violation::GasUsedMismatch);
    if (total > candidate.gas_limit) return fail(Violation::GasLimitExceeded);
    return check;
}

ReplayResult replay_chain(const Genesis& genesis, std::span<const Block> blocks) {
    ReplayResult out;
    out.state = LedgerState::from_genesis(genesis);
    ChainHead head = ChainHead::of(genesis);
    for (const Block& b : blocks) {
        BlockCheck check = validate_block(head, out.state, b, genesis);
        if (!check.ok()) {
            out.failure = ReplayFailure{b.number, *check.violation, check.describe()};
            break;
        }
        out.state = std::move(check.state);
        for (auto& r : check.receipts) out.receipts.push_back(std::move(r));
        head = ChainHead::of(b);
    }
    out.height = head.number;
    out.head_hash = head.hash;
    return out;
}

// ---------------------------------------------------------------------------
// Chain

Chain::Chain(Genesis genesis) : genesis_(std::move(genesis)), genesis_hash_(genesis_.hash()) {
    state_ = LedgerState::from_genesis(genesis_);
    snapshots_.emplace(0, state_);
}

ChainHead Chain::head() const {
    if (blocks_.empty()) return {0, genesis_hash_, genesis_.timestamp};
    return ChainHead::of(blocks_.back());
}

const Block* Chain::block_at(std::uint64_t n) const {
    if (n == 0 || n > blocks_.size()) return nullptr;
    return &blocks_[n - 1];
}

std::optional<Digest> Chain::hash_at(std::uint64_t n) const {
    if (n == 0) return genesis_hash_;
    if (const Block* b = block_at(n)) return b->block_hash;
    return std::nullopt;
}

std::optional<std::uint64_t> Chain::height_of(const Digest& block_hash) const {
    if (block_hash == genesis_hash_) return 0;
    auto it = height_by_hash_.find(block_hash);
    if (it == height_by_hash_.end()) return std::nullopt;
    return it->second;
}

const Receipt* Chain::receipt(const Digest& tx_hash) const {
    auto it = receipts_.find(tx_hash);
    return it == receipts_.end() ? nullptr : &it->second;
}

std::optional<std::pair<std::uint64_t, std::uint32_t>> Chain::locate(const Digest& tx_hash) const {
    const Receipt* r = receipt(tx_hash);
    if (!r) return std::nullopt;
    return std::make_pair(r->block_number, r->index);
}

void Chain::index_block(const Block& b, const std::vector<Receipt>& receipts) {
    height_by_hash_[b.block_hash] = b.number;
    for (const auto& r : receipts) receipts_[r.tx_hash] = r;
    if (b.out_of_turn) ++out_of_turn_count_;
}

BlockCheck Chain::append(const Block& block) {
    BlockCheck check = validate_block(head(), state_, block, genesis_);
    if (!check.ok()) return check;
    blocks_.push_back(block);
    index_block(block, check.receipts);
    state_ = check.state;
    if (block.number % kSnapshotInterval == 0) snapshots_.emplace(block.number, state_);
    return check;
}

LedgerState Chain::state_at(std::uint64_t n) const {
    if (n >= blocks_.size()) return state_;
    auto it = snapshots_.upper_bound(n);
    --it;  // snapshot 0 always exists
    LedgerState s = it->second;
    for (std::uint64_t h = it->first + 1; h <= n; ++h) {
        const Block& b = blocks_[h - 1];
        ExecContext ctx{genesis_, b.proposer, b.number};
        for (const auto& tx : b.transactions) apply_transaction(s, tx, ctx);
    }
    return s;
}

Chain::SuffixCheck Chain::check_suffix(std::uint64_t fork_height, std::span<const Block> suffix) const {
    SuffixCheck out;
    if (fork_height > height()) {
        out.last.violation = Violation::ParentMismatch;
        out.failed_height = fork_height + 1;
        return out;
    }
    LedgerState s = state_at(fork_height);
    ChainHead h{fork_height, *hash_at(fork_height),
                fork_height == 0 ? genesis_.timestamp : blocks_[fork_height - 1].timestamp};
    for (const Block& b : suffix) {
        BlockCheck c = validate_block(h, s, b, genesis_);
        if (!c.ok()) {
            out.last = std::move(c);
            out.failed_height = b.number;
            return out;
        }
        s = std::move(c.state);
        h = ChainHead::of(b);
        ++out.valid_count;
    }
    out.last.state = std::move(s);
    return out;
}

void Chain::truncate(std::uint64_t fork_height) {
    while (blocks_.size() > fork_height) {
        const Block& b = blocks_.back();
        height_by_hash_.erase(b.block_hash);
        for (const auto& tx : b.transactions) receipts_.erase(tx.hash());
        if (b.out_of_turn) --out_of_turn_count_;
        blocks_.pop_back();
    }
    snapshots_.erase(snapshots_.upper_bound(fork_height), snapshots_.end());
}

std::vector<Block> Chain::replace_suffix(std::uint64_t fork_height, std::span<const Block> suffix) {
    std::vector<Block> removed(blocks_.begin() + static_cast<std::ptrdiff_t>(fork_height), blocks_.end());
    LedgerState base = state_at(fork_height);
    truncate(fork_height);
    state_ = std::move(base);
    for (const Block& b : suffix) {
        BlockCheck c = append(b);
        if (!c.ok()) throw Error(ErrorCode::Internal, "replace_suffix given an unchecked block: " + c.describe());
    }
    return removed;
}

}  // namespace trating::ledger
