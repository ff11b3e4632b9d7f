#include <doctest.h>

#include <random>
#include <unordered_set>

#include "trating/crypto.hpp"

using namespace trating;

TEST_CASE("sha-256 published vectors") {
    CHECK(hash32("").hex() == "0xe3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(hash32("abc").hex() == "0xba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hash32("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq").hex() ==
          "0x248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("sha-256 single-bit changes always change the digest") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        Bytes msg(1 + rng() % 200);
        for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
        Digest d = hash32(msg);
        CHECK(hash32(msg) == d);
        std::size_t bit = rng() % (msg.size() * 8);
        msg[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        CHECK(hash32(msg) != d);
    }
}

TEST_CASE("ed25519 rfc 8032 test 2") {
    auto seed = fixed_from_hex<32>("4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb");
    KeyPair k = KeyPair::from_seed(seed);
    CHECK(k.public_key().hex() == "0x3d4017c3e843895a92b70aa74d1b7ebc9c982ccf2ec4968cc0cd55f12af4660c");
    Bytes msg{0x72};
    Signature sig = k.sign(msg);
    CHECK(sig.hex() ==
          "0x92a009a9f0d4cab8720e820b5f642540a2b27b5416503f8fb3762223ebdb69da"
          "085ac1e43e15996e458f3613d0f11d8c387b2eaeb4302aeeb00d291612bb0c00");
    CHECK(verify(k.public_key(), msg, sig));
}

TEST_CASE("keypair generation is deterministic per seed") {
    std::array<std::uint8_t, 32> s{};
    s[0] = 1;
    KeyPair a = KeyPair::from_seed(s);
    KeyPair b = KeyPair::from_seed(s);
    CHECK(a.public_key() == b.public_key());
    CHECK(a.address() == b.address());
    s[31] ^= 0x80;
    CHECK(KeyPair::from_seed(s).public_key() != a.public_key());
}

TEST_CASE("address is the trailing 20 bytes of the key hash") {
    KeyPair k = KeyPair::random();
    Digest d = hash32(k.public_key().view());
    Address a = derive_address(k.public_key());
    CHECK(std::equal(a.bytes.begin(), a.bytes.end(), d.bytes.begin() + 12));
    CHECK(derive_address(k.public_key()) == a);
    CHECK(k.address() == a);
}

TEST_CASE("address display form") {
    Address a = KeyPair::random().address();
    std::string h = a.hex();
    CHECK(h.size() == 42);
    CHECK(h.rfind("0x", 0) == 0);
    CHECK(h.find_first_of("ABCDEF") == std::string::npos);
    std::string upper = h;
    for (std::size_t i = 2; i < upper.size(); ++i) upper[i] = static_cast<char>(std::toupper(upper[i]));
    CHECK(Address::from_hex(upper) == a);
    CHECK(Address::from_hex(h.substr(2)) == a);
    CHECK_THROWS_AS(Address::from_hex(h + "00"), Error);
}

TEST_CASE("no address collisions across 10^4 random keys") {
    std::unordered_set<Address> seen;
    for (int i = 0; i < 10000; ++i) seen.insert(KeyPair::random().address());
    CHECK(seen.size() == 10000);
}

TEST_CASE("signatures bind message and key") {
    KeyPair k = KeyPair::random();
    KeyPair other = KeyPair::random();
    Bytes msg{1, 2, 3, 4, 5};
    Signature sig = k.sign(msg);
    CHECK(verify(k.public_key(), msg, sig));
    Bytes flipped = msg;
    flipped[2] ^= 0x01;
    CHECK_FALSE(verify(k.public_key(), flipped, sig));
    CHECK_FALSE(verify(other.public_key(), msg, sig));
    CHECK_FALSE(verify(k.public_key(), msg, other.sign(msg)));
    Signature bad = sig;
    bad.bytes[63] ^= 0x40;
    CHECK_FALSE(verify(k.public_key(), msg, bad));
    CHECK_THROWS_AS(k.sign(Bytes{}), Error);
    CHECK_THROWS_AS(verify_raw(Bytes(31), msg, sig.view()), Error);
    CHECK_THROWS_AS(verify_raw(k.public_key().view(), msg, Bytes(63)), Error);
    CHECK(verify_raw(k.public_key().view(), msg, sig.view()));
}
