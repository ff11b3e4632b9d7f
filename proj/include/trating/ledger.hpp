#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "trating/authority.hpp"
#include "trating/contract.hpp"
#include "trating/crypto.hpp"

namespace trating::ledger {

using contract::AveragingMode;
using contract::RatingScope;

inline constexpr Gas kDefaultBlockGasLimit = 6721975;
inline constexpr std::uint64_t kDefaultChainId = 5777;

// ---------------------------------------------------------------------------
// Calls

enum class Function : std::uint8_t {
    GiveRightToRate = 0,
    SetRate = 1,
    GetRate = 2,
    CreateProduct = 3,
    /// Faucet credit issued by an authority. Gas-free, never part of the fee schedule.
    Mint = 4,
};

std::string_view to_string(Function f);
std::optional<Function> function_from_string(std::string_view name);

struct GiveRightToRateArgs {
    Address rater;
    bool operator==(const GiveRightToRateArgs&) const = default;
};
struct SetRateArgs {
    Address product;
    /// Raw byte; values above 100 reach the contract and are handled by its mode.
    std::uint8_t value = 0;
    bool operator==(const SetRateArgs&) const = default;
};
struct GetRateArgs {
    Address product;
    bool operator==(const GetRateArgs&) const = default;
};
struct CreateProductArgs {
    Address product;
    std::string name;
    bool operator==(const CreateProductArgs&) const = default;
};
struct MintArgs {
    bool operator==(const MintArgs&) const = default;
};

/// Variant index equals the Function tag.
using CallPayload = std::variant<GiveRightToRateArgs, SetRateArgs, GetRateArgs, CreateProductArgs, MintArgs>;

inline Function function_of(const CallPayload& call) { return static_cast<Function>(call.index()); }

/// Intrinsic gas per contract function.
struct GasSchedule {
    Gas set_rate = 51456;
    Gas get_rate = 42689;
    Gas give_right_to_rate = 47800;
    Gas create_product = 53000;

    Gas intrinsic(Function f) const;
    bool operator==(const GasSchedule&) const = default;
};

/// fee = gas_used * gas_price, exact. Throws Error(Overflow).
Wei compute_fee(Gas gas_used, Wei gas_price);

// ---------------------------------------------------------------------------
// Transactions

struct Transaction {
    std::uint64_t nonce = 0;
    Address from;
    Address to;
    CallPayload call;
    Wei value = 0;
    Gas gas_limit = 0;
    Wei gas_price = 0;
    /// Sender key; from must equal derive_address(public_key).
    PublicKey public_key;
    Signature signature;

    Function function() const { return function_of(call); }

    /// Fixed-order encoding of every field except public_key and signature.
    Bytes unsigned_bytes() const;
    /// unsigned_bytes || public_key || signature
    Bytes signed_bytes() const;
    /// hash32(unsigned_bytes)
    Digest hash() const;

    /// Fills from, public_key and signature.
    void sign_with(const KeyPair& key);

    static Transaction decode(ByteReader& in);
    static Transaction decode(ByteView signed_bytes);

    bool operator==(const Transaction&) const = default;
};

// ---------------------------------------------------------------------------
// Genesis

struct ProductSeed {
    Address address;
    std::string name;
    bool operator==(const ProductSeed&) const = default;
};

struct Genesis {
    std::uint64_t chain_id = kDefaultChainId;
    Gas gas_limit = kDefaultBlockGasLimit;
    std::uint64_t timestamp = 0;
    std::uint64_t slot_deadline_seconds = 2;
    consensus::AuthoritySet authorities;
    Address owner;
    Address contract_address;
    AveragingMode averaging_mode = AveragingMode::Corrected;
    RatingScope rating_scope = RatingScope::PerProduct;
    bool faucet_enabled = true;
    Wei faucet_grant_wei = Wei{1000000000000000000ULL};
    std::uint64_t faucet_window_blocks = 10;
    Wei gas_price_suggestion = 2000000000;
    GasSchedule gas_schedule;
    std::map<Address, Wei> balances;
    std::vector<ProductSeed> products;
    /// Raters granted at genesis, in id order.
    std::vector<Address> raters;

    Bytes canonical_bytes() const;
    /// Identity of block 0.
    Digest hash() const;
    Wei total_allocation() const;

    bool operator==(const Genesis&) const = default;
};

/// Contract address used when a genesis does not name one.
Address default_contract_address(const Address& owner);

// ---------------------------------------------------------------------------
// State

struct AccountState {
    Wei balance = 0;
    std::uint64_t nonce = 0;
    bool operator==(const AccountState&) const = default;
};

struct LedgerState {
    std::map<Address, AccountState> accounts;
    contract::ContractState contract;
    /// Height of the last faucet credit per recipient.
    std::map<Address, std::uint64_t> last_mint_height;
    Wei total_minted = 0;

    static LedgerState from_genesis(const Genesis& genesis);

    Wei balance(const Address& a) const;
    std::uint64_t nonce(const Address& a) const;
    Wei total_balance() const;

    Bytes canonical_bytes() const;
    Digest digest() const;

    bool operator==(const LedgerState&) const = default;
};

// ---------------------------------------------------------------------------
// Execution

enum class TxError {
    None,
    BadSignature,
    BadNonce,
    InsufficientBalance,
    UnknownFunction,
    GasLimitTooLow,
    BadTarget,
    Overflow,
    UnauthorizedMint,
    MintRateLimited,
    Malformed,
};

std::string_view to_string(TxError e);

enum class ReceiptStatus { Success, Reverted };

struct Receipt {
    Digest tx_hash;
    std::uint64_t block_number = 0;
    std::uint32_t index = 0;
    Function function = Function::SetRate;
    Address from;
    ReceiptStatus status = ReceiptStatus::Success;
    std::string revert_reason;
    Gas gas_used = 0;
    Wei gas_price = 0;
    Wei fee_wei = 0;
    /// GetRate result.
    std::optional<std::uint64_t> return_value;

    bool success() const { return status == ReceiptStatus::Success; }
    bool operator==(const Receipt&) const = default;
};

struct ExecContext {
    const Genesis& genesis;
    Address proposer;
    std::uint64_t block_number = 0;
};

struct TxOutcome {
    TxError error = TxError::None;
    Receipt receipt;

    bool accepted() const { return error == TxError::None; }
};

/// Structural and signature checks that need no state.
TxError check_transaction(const Transaction& tx, const Genesis& genesis);

/// Applies tx to state in place. A rejected tx leaves state untouched; a reverted
/// call keeps the fee and nonce bump but no value transfer or contract change.
TxOutcome apply_transaction(LedgerState& state, const Transaction& tx, const ExecContext& ctx);

// ---------------------------------------------------------------------------
// Blocks

struct Block {
    std::uint64_t number = 0;
    Digest parent_hash;
    std::uint64_t timestamp = 0;
    Address proposer;
    bool out_of_turn = false;
    Gas gas_used = 0;
    Gas gas_limit = kDefaultBlockGasLimit;
    std::vector<Transaction> transactions;
    Digest block_hash;
    PublicKey proposer_key;
    Signature proposer_signature;

    /// Header and body in fixed order; excludes block_hash, proposer_key and signature.
    Bytes canonical_bytes() const;
    Digest compute_hash() const { return hash32(canonical_bytes()); }

    /// Sets block_hash, proposer, proposer_key and proposer_signature.
    void seal_with(const KeyPair& key);

    /// canonical_bytes as a blob || block_hash || proposer_key || proposer_signature
    Bytes encode() const;
    static Block decode(ByteView bytes);

    bool operator==(const Block&) const = default;
};

struct ChainHead {
    std::uint64_t number = 0;
    Digest hash;
    std::uint64_t timestamp = 0;

    static ChainHead of(const Block& b) { return {b.number, b.block_hash, b.timestamp}; }
    static ChainHead of(const Genesis& g) { return {0, g.hash(), g.timestamp}; }
};

enum class Violation {
    HashMismatch,
    ParentMismatch,
    BadHeight,
    TimestampRegression,
    UnauthorizedProposer,
    BadProposerSignature,
    OutOfTurnMismatch,
    PrematureOutOfTurn,
    FutureTimestamp,
    GasLimitMismatch,
    EmptyBlock,
    InvalidTransaction,
    GasUsedMismatch,
    GasLimitExceeded,
    Malformed,
};

std::string_view to_string(Violation v);

struct BlockCheck {
    std::optional<Violation> violation;
    /// For InvalidTransaction: offending index and reason.
    std::size_t tx_index = 0;
    TxError tx_error = TxError::None;
    LedgerState state;
    std::vector<Receipt> receipts;

    bool ok() const { return !violation; }
    std::string describe() const;
};

/// Checks candidate against the head it claims to extend and, when valid, returns the
/// post-state and receipts.
BlockCheck validate_block(const ChainHead& head, const LedgerState& state, const Block& candidate,
                          const Genesis& genesis);

struct ReplayFailure {
    std::uint64_t height = 0;
    Violation violation = Violation::Malformed;
    std::string detail;
};

struct ReplayResult {
    LedgerState state;
    std::vector<Receipt> receipts;
    std::uint64_t height = 0;
    Digest head_hash;
    std::optional<ReplayFailure> failure;

    bool ok() const { return !failure; }
};

/// Replays blocks from genesis, stopping at the first invalid block.
ReplayResult replay_chain(const Genesis& genesis, std::span<const Block> blocks);

// ---------------------------------------------------------------------------
// Chain

/// A validated chain with its head state and receipt index. Single writer.
class Chain {
public:
    explicit Chain(Genesis genesis);

    const Genesis& genesis() const { return genesis_; }
    const Digest& genesis_hash() const { return genesis_hash_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    const LedgerState& state() const { return state_; }
    std::uint64_t height() const { return blocks_.size(); }
    ChainHead head() const;
    std::uint64_t out_of_turn_count() const { return out_of_turn_count_; }

    /// Block at height n (1-based); nullptr when absent.
    const Block* block_at(std::uint64_t n) const;
    /// Block hash at height n, genesis hash for 0.
    std::optional<Digest> hash_at(std::uint64_t n) const;
    std::optional<std::uint64_t> height_of(const Digest& block_hash) const;

    const Receipt* receipt(const Digest& tx_hash) const;
    /// Block height and index of an included transaction.
    std::optional<std::pair<std::uint64_t, std::uint32_t>> locate(const Digest& tx_hash) const;

    /// Validates and appends on top of head.
    BlockCheck append(const Block& block);

    /// State after height n, rebuilt from the nearest snapshot.
    LedgerState state_at(std::uint64_t n) const;

    /// Checks that replacing everything above fork_height with suffix is valid. On
    /// violation the returned check names the first bad block via failed_height.
    struct SuffixCheck {
        BlockCheck last;
        std::uint64_t valid_count = 0;
        std::uint64_t failed_height = 0;
        bool ok() const { return last.ok(); }
    };
    SuffixCheck check_suffix(std::uint64_t fork_height, std::span<const Block> suffix) const;

    /// Drops blocks above fork_height and appends suffix; returns the removed blocks.
    /// The suffix must have passed check_suffix.
    std::vector<Block> replace_suffix(std::uint64_t fork_height, std::span<const Block> suffix);

private:
    void index_block(const Block& b, const std::vector<Receipt>& receipts);
    void truncate(std::uint64_t fork_height);

    static constexpr std::uint64_t kSnapshotInterval = 32;

    Genesis genesis_;
    Digest genesis_hash_;
    std::vector<Block> blocks_;
    LedgerState state_;
    std::uint64_t out_of_turn_count_ = 0;
    std::unordered_map<Digest, std::uint64_t> height_by_hash_;
    std::unordered_map<Digest, Receipt> receipts_;
    std::map<std::uint64_t, LedgerState> snapshots_;
};

}  // namespace trating::ledger
