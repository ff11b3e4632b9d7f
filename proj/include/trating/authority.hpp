#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "trating/crypto.hpp"

namespace trating::consensus {

/// Genesis-fixed, ordered validator list. Order decides proposal turns.
class AuthoritySet {
public:
    AuthoritySet() = default;
    /// Throws Error(Config) when empty or when an address repeats.
    explicit AuthoritySet(std::vector<Address> members);

    std::size_t size() const { return members_.size(); }
    const std::vector<Address>& members() const { return members_; }
    bool contains(const Address& a) const { return index_of(a).has_value(); }
    std::optional<std::size_t> index_of(const Address& a) const;

    /// authorities[height mod N]
    const Address& expected_proposer(std::uint64_t height) const;

    /// Turns after the in-turn proposer: 0 for in-turn, 1 for the next in rotation, ...
    /// Requires contains(a).
    std::uint64_t rank(std::uint64_t height, const Address& a) const;

    /// Blocks this deep are reported final: ceil(N/2)+1.
    std::uint64_t final_depth() const { return (size() + 1) / 2 + 1; }

    bool operator==(const AuthoritySet&) const = default;

private:
    std::vector<Address> members_;
};

/// Free-function form used by tests and the C API.
inline const Address& expected_proposer(std::uint64_t height, const AuthoritySet& set) {
    return set.expected_proposer(height);
}

/// Earliest block timestamp an authority of the given rank may use on top of a parent.
inline std::uint64_t earliest_timestamp(std::uint64_t parent_timestamp, std::uint64_t rank,
                                        std::uint64_t slot_deadline_seconds) {
    return parent_timestamp + rank * slot_deadline_seconds;
}

}  // namespace trating::consensus
