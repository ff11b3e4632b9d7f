#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "trating/common.hpp"

namespace trating {

/// Fixed-size byte value with lowercase 0x-hex display.
template <std::size_t N, typename Tag>
struct FixedBytes {
    static constexpr std::size_t size = N;
    std::array<std::uint8_t, N> bytes{};

    static FixedBytes from_hex(std::string_view text) { return FixedBytes{fixed_from_hex<N>(text)}; }
    std::string hex() const { return "0x" + to_hex(bytes); }
    ByteView view() const { return ByteView(bytes.data(), bytes.size()); }
    bool is_zero() const {
        for (auto b : bytes)
            if (b != 0) return false;
        return true;
    }

    auto operator<=>(const FixedBytes&) const = default;
};

struct AddressTag {};
struct DigestTag {};
struct PublicKeyTag {};
struct SignatureTag {};

using Address = FixedBytes<20, AddressTag>;
using Digest = FixedBytes<32, DigestTag>;
using PublicKey = FixedBytes<32, PublicKeyTag>;
using Signature = FixedBytes<64, SignatureTag>;

/// Ed25519 key material. The secret key is the 32-byte seed.
class KeyPair {
public:
    static KeyPair from_seed(const std::array<std::uint8_t, 32>& seed);
    /// Draws the seed from the OS CSPRNG.
    static KeyPair random();

    const std::array<std::uint8_t, 32>& secret_key() const { return secret_; }
    const PublicKey& public_key() const { return public_; }
    Address address() const;

    Signature sign(ByteView message) const;

private:
    KeyPair() = default;

    std::array<std::uint8_t, 32> secret_{};
    PublicKey public_;
};

/// SHA-256.
Digest hash32(ByteView data);
inline Digest hash32(std::string_view s) {
    return hash32(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

/// Trailing 20 bytes of hash32(public_key).
Address derive_address(const PublicKey& public_key);

/// Throws Error(Crypto) on an empty message; a bad signature simply returns false.
Signature sign(const std::array<std::uint8_t, 32>& secret_key, ByteView message);
bool verify(const PublicKey& public_key, ByteView message, const Signature& signature);

/// For callers holding untrusted byte strings. Wrong key or signature lengths are Error(Crypto).
bool verify_raw(ByteView public_key, ByteView message, ByteView signature);

}  // namespace trating

template <std::size_t N, typename Tag>
struct std::hash<trating::FixedBytes<N, Tag>> {
    std::size_t operator()(const trating::FixedBytes<N, Tag>& v) const noexcept {
        std::size_t h = 0;
        for (std::size_t i = 0; i < sizeof(std::size_t) && i < N; ++i) h = (h << 8) | v.bytes[N - 1 - i];
        return h;
    }
};
