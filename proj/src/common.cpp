#include "trating/common.hpp"

#include <algorithm>

namespace trating {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

constexpr Wei kWeiMax = ~Wei{0};

}  // namespace

std::string to_hex(ByteView bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view text) {
    if (text.size() >= 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
        text.remove_prefix(2);
    }
    if (text.size() % 2 != 0) {
        throw Error(ErrorCode::Parse, "odd-length hex string");
    }
    Bytes out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(text[2 * i]);
        int lo = hex_value(text[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error(ErrorCode::Parse, "invalid hex digit");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

std::string wei_to_string(Wei value) {
    if (value == 0) return "0";
    std::string out;
    while (value != 0) {
        out.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
        value /= 10;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

Wei wei_from_string(std::string_view text) {
    if (text.empty()) {
        throw Error(ErrorCode::Parse, "empty integer");
    }
    // Canonical decimal only: no sign, no leading zeros.
    if (text.size() > 1 && text[0] == '0') {
        throw Error(ErrorCode::Parse, "leading zero in integer '" + std::string(text) + "'");
    }
    Wei value = 0;
    for (char c : text) {
        if (c < '0' || c > '9') {
            throw Error(ErrorCode::Parse, "invalid decimal digit in '" + std::string(text) + "'");
        }
        Wei digit = static_cast<Wei>(c - '0');
        if (value > (kWeiMax - digit) / 10) {
            throw Error(ErrorCode::Overflow, "integer exceeds 128 bits");
        }
        value = value * 10 + digit;
    }
    return value;
}

Wei checked_add(Wei a, Wei b) {
    if (a > kWeiMax - b) throw Error(ErrorCode::Overflow, "128-bit addition overflow");
    return a + b;
}

Wei checked_sub(Wei a, Wei b) {
    if (b > a) throw Error(ErrorCode::Overflow, "128-bit subtraction underflow");
    return a - b;
}

Wei checked_mul(Wei a, Wei b) {
    if (a != 0 && b > kWeiMax / a) throw Error(ErrorCode::Overflow, "128-bit multiplication overflow");
    return a * b;
}

void ByteWriter::u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::u128(Wei v) {
    for (int shift = 120; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
}

void ByteWriter::blob(ByteView bytes) {
    if (bytes.size() > UINT32_MAX) throw Error(ErrorCode::InvalidArgument, "blob too large");
    u32(static_cast<std::uint32_t>(bytes.size()));
    raw(bytes);
}

void ByteWriter::str(std::string_view s) {
    blob(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void ByteReader::need(std::size_t n) const {
    if (remaining() < n) {
        throw Error(ErrorCode::Parse, "truncated input: need " + std::to_string(n) + " bytes at offset " +
                                          std::to_string(pos_));
    }
}

std::uint8_t ByteReader::u8() {
    need(1);
    return in_[pos_++];
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
    return v;
}

Wei ByteReader::u128() {
    need(16);
    Wei v = 0;
    for (int i = 0; i < 16; ++i) v = (v << 8) | in_[pos_++];
    return v;
}

ByteView ByteReader::raw(std::size_t n) {
    need(n);
    ByteView out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
}

Bytes ByteReader::blob() {
    std::uint32_t n = u32();
    auto view = raw(n);
    return Bytes(view.begin(), view.end());
}

std::string ByteReader::str() {
    std::uint32_t n = u32();
    auto view = raw(n);
    return std::string(view.begin(), view.end());
}

}  // namespace trating
