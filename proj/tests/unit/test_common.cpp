#include <doctest.h>

#include "trating/common.hpp"

using namespace trating;

TEST_CASE("hex round trip and parsing rules") {
    Bytes b{0x00, 0x01, 0xab, 0xff};
    CHECK(to_hex(b) == "0001abff");
    CHECK(from_hex("0001abff") == b);
    CHECK(from_hex("0x0001ABFF") == b);
    CHECK(from_hex("0X0001aBfF") == b);
    CHECK(from_hex("").empty());
    CHECK_THROWS_AS(from_hex("abc"), Error);
    CHECK_THROWS_AS(from_hex("zz"), Error);
    CHECK_THROWS_AS(fixed_from_hex<4>("0x0102"), Error);
}

TEST_CASE("wei decimal strings") {
    CHECK(wei_to_string(0) == "0");
    CHECK(wei_from_string("0") == 0);
    const char* max = "340282366920938463463374607431768211455";
    CHECK(wei_to_string(wei_from_string(max)) == max);
    CHECK_THROWS_AS(wei_from_string("340282366920938463463374607431768211456"), Error);
    CHECK_THROWS_AS(wei_from_string(""), Error);
    CHECK_THROWS_AS(wei_from_string("-1"), Error);
    CHECK_THROWS_AS(wei_from_string("12a"), Error);
    CHECK_THROWS_AS(wei_from_string(" 1"), Error);
    CHECK(wei_from_string("1000000000000000000") == Wei{1000000000000000000ULL});
}

TEST_CASE("checked arithmetic") {
    const Wei max = ~Wei{0};
    CHECK(checked_add(1, 2) == 3);
    CHECK_THROWS_AS(checked_add(max, 1), Error);
    CHECK(checked_sub(5, 5) == 0);
    CHECK_THROWS_AS(checked_sub(0, 1), Error);
    CHECK(checked_mul(0, max) == 0);
    CHECK_THROWS_AS(checked_mul(max / 2 + 1, 2), Error);
    try {
        checked_add(max, max);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Overflow);
    }
}

TEST_CASE("byte writer and reader are big-endian and inverse") {
    ByteWriter w;
    w.u8(7);
    w.u32(0x01020304);
    w.u64(0x0102030405060708ULL);
    w.u128((Wei{1} << 64) | 2);
    w.str("hi");
    Bytes b = std::move(w).take();
    CHECK(to_hex(b) == "07" "01020304" "0102030405060708" "00000000000000010000000000000002" "00000002" "6869");

    ByteReader r(b);
    CHECK(r.u8() == 7);
    CHECK(r.u32() == 0x01020304);
    CHECK(r.u64() == 0x0102030405060708ULL);
    CHECK(r.u128() == ((Wei{1} << 64) | 2));
    CHECK(r.str() == "hi");
    CHECK(r.done());
    CHECK_THROWS_AS(r.u8(), Error);
}

TEST_CASE("reader rejects a length prefix past the end") {
    Bytes b{0x00, 0x00, 0x10, 0x00, 0x41};
    ByteReader r(b);
    CHECK_THROWS_AS(r.blob(), Error);
}
