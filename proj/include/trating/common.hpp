#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trating {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Unsigned 128-bit amount in wei. Balances and fees never wrap.
using Wei = unsigned __int128;
using Gas = std::uint64_t;

enum class ErrorCode {
    InvalidArgument,
    Parse,
    Crypto,
    Io,
    Overflow,
    Config,
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

std::string to_hex(ByteView bytes);
/// Accepts an optional 0x prefix and either case. Throws Error(Parse).
Bytes from_hex(std::string_view text);

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view text) {
    Bytes raw = from_hex(text);
    if (raw.size() != N) {
        throw Error(ErrorCode::Parse, "expected " + std::to_string(N) + " bytes of hex, got " +
                                          std::to_string(raw.size()));
    }
    std::array<std::uint8_t, N> out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

std::string wei_to_string(Wei value);
/// Parses a base-10 unsigned integer into 128 bits, rejecting overflow and junk.
Wei wei_from_string(std::string_view text);

/// Checked arithmetic; throws Error(Overflow).
Wei checked_add(Wei a, Wei b);
Wei checked_sub(Wei a, Wei b);
Wei checked_mul(Wei a, Wei b);

/// Big-endian fixed-width writer used by every canonical encoding.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void u128(Wei v);
    void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
    /// u32 length prefix followed by the bytes.
    void blob(ByteView bytes);
    void str(std::string_view s);

    const Bytes& bytes() const& { return out_; }
    Bytes take() && { return std::move(out_); }

private:
    Bytes out_;
};

class ByteReader {
public:
    explicit ByteReader(ByteView in) : in_(in) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    Wei u128();
    ByteView raw(std::size_t n);
    Bytes blob();
    std::string str();

    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        auto view = raw(N);
        std::array<std::uint8_t, N> out{};
        std::copy(view.begin(), view.end(), out.begin());
        return out;
    }

    std::size_t remaining() const { return in_.size() - pos_; }
    std::size_t position() const { return pos_; }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const;

    ByteView in_;
    std::size_t pos_ = 0;
};

}  // namespace trating
