#include "trating/messages.hpp"

namespace trating::net {

std::string_view to_string(MessageKind k) {
    switch (k) {
        case MessageKind::NewTransaction: return "NewTransaction";
        case MessageKind::NewBlock: return "NewBlock";
        case MessageKind::ChainRequest: return "ChainRequest";
        case MessageKind::ChainResponse: return "ChainResponse";
    }
    return "?";
}

Bytes encode(const Message& m) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(m.index()));
    std::visit(
        [&w](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, NewTransaction>) {
                w.blob(msg.tx.signed_bytes());
            } else if constexpr (std::is_same_v<T, NewBlock>) {
                w.blob(msg.block.encode());
            } else if constexpr (std::is_same_v<T, ChainRequest>) {
                w.u64(msg.from_height);
            } else {
                w.u64(msg.from_height);
                w.u32(static_cast<std::uint32_t>(msg.blocks.size()));
                for (const auto& b : msg.blocks) w.blob(b.encode());
            }
        },
        m);
    return std::move(w).take();
}

Message decode(ByteView bytes) {
    ByteReader r(bytes);
    std::uint8_t tag = r.u8();
    Message out;
    switch (static_cast<MessageKind>(tag)) {
        case MessageKind::NewTransaction: out = NewTransaction{ledger::Transaction::decode(r.blob())}; break;
        case MessageKind::NewBlock: out = NewBlock{ledger::Block::decode(r.blob())}; break;
        case MessageKind::ChainRequest: out = ChainRequest{r.u64()}; break;
        case MessageKind::ChainResponse: {
            ChainResponse resp;
            resp.from_height = r.u64();
            std::uint32_t n = r.u32();
            for (std::uint32_t i = 0; i < n; ++i) resp.blocks.push_back(ledger::Block::decode(r.blob()));
            out = std::move(resp);
            break;
        }
        default: throw Error(ErrorCode::Parse, "unknown message kind " + std::to_string(tag));
    }
    if (!r.done()) throw Error(ErrorCode::Parse, "trailing bytes after message");
    return out;
}

}  // namespace trating::net
