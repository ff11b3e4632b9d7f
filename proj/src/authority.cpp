#include "trating/authority.hpp"

#include <set>

namespace trating::consensus {

AuthoritySet::AuthoritySet(std::vector<Address> members) : members_(std::move(members)) {
    if (members_.empty()) throw Error(ErrorCode::Config, "authority set must not be empty");
    std::set<Address> seen;
    for (const auto& m : members_) {
        if (!seen.insert(m).second) throw Error(ErrorCode::Config, "duplicate authority " + m.hex());
    }
}

std::optional<std::size_t> AuthoritySet::index_of(const Address& a) const {
    for (std::size_t i = 0; i < members_.size(); ++i)
        if (members_[i] == a) return i;
    return std::nullopt;
}

const Address& AuthoritySet::expected_proposer(std::uint64_t height) const {
    if (members_.empty()) throw Error(ErrorCode::Config, "authority set must not be empty");
    return members_[height % members_.size()];
}

std::uint64_t AuthoritySet::rank(std::uint64_t height, const Address& a) const {
    auto idx = index_of(a);
    if (!idx) throw Error(ErrorCode::InvalidArgument, a.hex() + " is not an authority");
    const std::uint64_t n = members_.size();
    return (*idx + n - height % n) % n;
}

}  // namespace trating::consensus
