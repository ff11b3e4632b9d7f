#include "trating/contract.hpp"

namespace trating::contract {

std::string_view to_string(AveragingMode mode) {
    return mode == AveragingMode::Corrected ? "corrected" : "paper-literal";
}

AveragingMode averaging_mode_from_string(std::string_view text) {
    if (text == "corrected") return AveragingMode::Corrected;
    if (text == "paper-literal") return AveragingMode::PaperLiteral;
    throw Error(ErrorCode::Config, "unknown averaging mode '" + std::string(text) + "'");
}

std::string_view to_string(RatingScope scope) {
    return scope == RatingScope::PerProduct ? "per-product" : "global";
}

RatingScope rating_scope_from_string(std::string_view text) {
    if (text == "per-product") return RatingScope::PerProduct;
    if (text == "global") return RatingScope::Global;
    throw Error(ErrorCode::Config, "unknown rating scope '" + std::string(text) + "'");
}

CallResult ContractState::give_right_to_rate(const Address& caller, const Address& rater) {
    if (caller != owner_) return std::string(kRevertNotOwnerGrant);
    auto [it, inserted] = raters_.try_emplace(rater);
    if (inserted) it->second.id = next_rater_id_++;
    it->second.weight = 1;
    return std::nullopt;
}

CallResult ContractState::set_rate(const Address& caller, const Address& product, std::uint32_t value) {
    auto rater_it = raters_.find(caller);
    if (rater_it == raters_.end() || rater_it->second.weight == 0) return std::string(kRevertNoRight);
    RaterRecord& rater = rater_it->second;

    auto product_it = products_.find(product);
    if (product_it == products_.end()) return std::string(kRevertUnknownProduct);

    bool already = scope_ == RatingScope::Global ? !rater.rated_products.empty()
                                                 : rater.rated_products.contains(product);
    if (already) return std::string(kRevertAlreadyRated);

    ProductRecord& rec = product_it->second;
    if (value > kMaxRating) {
        // The literal contract guards the update with a bare if and succeeds silently.
        if (mode_ == AveragingMode::PaperLiteral) return std::nullopt;
        return std::string(kRevertOutOfRange);
    }

    if (mode_ == AveragingMode::Corrected) {
        rec.cumulative += value;
        rec.no_raters += 1;
        rec.rating = rec.cumulative / rec.no_raters;
    } else {
        std::uint64_t new_rating = rec.rating + value;
        rec.no_raters += 1;
        rec.rating = new_rating / rec.no_raters;
        rec.cumulative += value;
    }
    rater.rated_products.insert(product);
    rater.rate = value;
    return std::nullopt;
}

CallResult ContractState::create_product(const Address& caller, const Address& product, std::string_view name) {
    if (caller != owner_) return std::string(kRevertNotOwnerCreate);
    if (name.empty() || name.size() > kMaxNameBytes) return std::string(kRevertBadName);
    if (products_.contains(product)) return std::string(kRevertProductExists);
    ProductRecord rec;
    rec.name = std::string(name);
    rec.ordinal = next_product_ordinal_++;
    products_.emplace(product, std::move(rec));
    return std::nullopt;
}

std::uint64_t ContractState::get_rate(const Address& product) const {
    auto it = products_.find(product);
    return it == products_.end() ? 0 : it->second.rating;
}

const ProductRecord* ContractState::product(const Address& address) const {
    auto it = products_.find(address);
    return it == products_.end() ? nullptr : &it->second;
}

const RaterRecord* ContractState::rater(const Address& address) const {
    auto it = raters_.find(address);
    return it == raters_.end() ? nullptr : &it->second;
}

void ContractState::encode(ByteWriter& w) const {
    w.raw(owner_.view());
    w.u8(mode_ == AveragingMode::Corrected ? 0 : 1);
    w.u8(scope_ == RatingScope::PerProduct ? 0 : 1);
    w.u64(next_rater_id_);
    w.u64(next_product_ordinal_);
    w.u32(static_cast<std::uint32_t>(products_.size()));
    for (const auto& [addr, rec] : products_) {
        w.raw(addr.view());
        w.str(rec.name);
        w.u64(rec.rating);
        w.u64(rec.no_raters);
        w.u64(rec.cumulative);
        w.u64(rec.ordinal);
    }
    w.u32(static_cast<std::uint32_t>(raters_.size()));
    for (const auto& [addr, rec] : raters_) {
        w.raw(addr.view());
        w.u64(rec.weight);
        w.u64(rec.id);
        w.u64(rec.rate);
        w.u32(static_cast<std::uint32_t>(rec.rated_products.size()));
        for (const auto& p : rec.rated_products) w.raw(p.view());
    }
}

}  // namespace trating::contract
