#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "trating/crypto.hpp"

namespace trating::contract {

/// How SetRate folds a new value into the stored product rating.
enum class AveragingMode {
    /// rating = floor(cumulative / no_raters), an exact running mean.
    Corrected,
    /// rating = floor((old_rating + value) / (old_no_raters + 1)), the deployed contract's recurrence.
    PaperLiteral,
};

/// Granularity of the one-vote rule.
enum class RatingScope {
    PerProduct,
    /// A rater may submit a single rating across all products.
    Global,
};

std::string_view to_string(AveragingMode mode);
AveragingMode averaging_mode_from_string(std::string_view text);
std::string_view to_string(RatingScope scope);
RatingScope rating_scope_from_string(std::string_view text);

// Revert reasons are stable API values.
inline constexpr std::string_view kRevertNotOwnerGrant = "Only owner can give right to rate.";
inline constexpr std::string_view kRevertAlreadyRated = "The rater already rated.";
inline constexpr std::string_view kRevertNoRight = "rater has no rating right";
inline constexpr std::string_view kRevertUnknownProduct = "unknown product";
inline constexpr std::string_view kRevertOutOfRange = "rating out of range";
inline constexpr std::string_view kRevertNotOwnerCreate = "only owner can create products";
inline constexpr std::string_view kRevertProductExists = "product exists";
inline constexpr std::string_view kRevertBadName = "product name must be 1-64 bytes";

inline constexpr std::uint32_t kMaxRating = 100;
inline constexpr std::size_t kMaxNameBytes = 64;

struct ProductRecord {
    std::string name;
    std::uint64_t rating = 0;
    std::uint64_t no_raters = 0;
    std::uint64_t cumulative = 0;
    /// 1-based creation order, shown as the product ID.
    std::uint64_t ordinal = 0;

    bool operator==(const ProductRecord&) const = default;
};

struct RaterRecord {
    std::uint64_t weight = 0;
    std::uint64_t id = 0;
    std::set<Address> rated_products;
    std::uint64_t rate = 0;

    bool operator==(const RaterRecord&) const = default;
};

/// Empty on success, otherwise the revert reason.
using CallResult = std::optional<std::string>;

/// The rating contract's storage. Every mutator either applies fully or reverts with
/// no change.
class ContractState {
public:
    ContractState() = default;
    ContractState(Address owner, AveragingMode mode, RatingScope scope = RatingScope::PerProduct)
        : owner_(owner), mode_(mode), scope_(scope) {}

    const Address& owner() const { return owner_; }
    AveragingMode mode() const { return mode_; }
    RatingScope scope() const { return scope_; }

    CallResult give_right_to_rate(const Address& caller, const Address& rater);
    CallResult set_rate(const Address& caller, const Address& product, std::uint32_t value);
    CallResult create_product(const Address& caller, const Address& product, std::string_view name);

    /// 0 for an unknown product.
    std::uint64_t get_rate(const Address& product) const;

    const ProductRecord* product(const Address& address) const;
    const RaterRecord* rater(const Address& address) const;
    const std::map<Address, ProductRecord>& products() const { return products_; }
    const std::map<Address, RaterRecord>& raters() const { return raters_; }

    /// Deterministic byte encoding for state digests.
    void encode(ByteWriter& w) const;

    bool operator==(const ContractState&) const = default;

private:
    Address owner_;
    AveragingMode mode_ = AveragingMode::Corrected;
    RatingScope scope_ = RatingScope::PerProduct;
    std::map<Address, ProductRecord> products_;
    std::map<Address, RaterRecord> raters_;
    std::uint64_t next_rater_id_ = 1;
    std::uint64_t next_product_ordinal_ = 1;
};

}  // namespace trating::contract
