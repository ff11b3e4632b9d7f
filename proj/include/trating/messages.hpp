#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "trating/consensus.hpp"
#include "trating/ledger.hpp"

namespace trating::net {

enum class MessageKind : std::uint8_t {
    NewTransaction = 0,
    NewBlock = 1,
    ChainRequest = 2,
    ChainResponse = 3,
};

std::string_view to_string(MessageKind k);

struct NewTransaction {
    ledger::Transaction tx;
};

struct NewBlock {
    ledger::Block block;
};

/// Asks a peer for its blocks from from_height to its head.
struct ChainRequest {
    std::uint64_t from_height = 1;
};

struct ChainResponse {
    std::uint64_t from_height = 1;
    std::vector<ledger::Block> blocks;
};

/// Variant index equals MessageKind.
using Message = std::variant<NewTransaction, NewBlock, ChainRequest, ChainResponse>;

inline MessageKind kind_of(const Message& m) { return static_cast<MessageKind>(m.index()); }

/// u8 kind followed by the kind's payload in canonical form.
Bytes encode(const Message& m);
/// Throws Error(Parse) on malformed input.
Message decode(ByteView bytes);

}  // namespace trating::net
