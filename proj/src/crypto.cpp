#include "trating/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <memory>

namespace trating {

namespace {

struct PkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

PkeyPtr private_key(const std::array<std::uint8_t, 32>& seed) {
    PkeyPtr key(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()));
    if (!key) throw Error(ErrorCode::Crypto, "cannot load ed25519 private key");
    return key;
}

}  // namespace

KeyPair KeyPair::from_seed(const std::array<std::uint8_t, 32>& seed) {
    KeyPair kp;
    kp.secret_ = seed;
    PkeyPtr key = private_key(seed);
    std::size_t len = kp.public_.bytes.size();
    if (EVP_PKEY_get_raw_public_key(key.get(), kp.public_.bytes.data(), &len) != 1 || len != 32) {
        throw Error(ErrorCode::Crypto, "cannot derive ed25519 public key");
    }
    return kp;
}

KeyPair KeyPair::random() {
    std::array<std::uint8_t, 32> seed{};
    if (RAND_bytes(seed.data(), static_cast<int>(seed.size())) != 1) {
        throw Error(ErrorCode::Crypto, "RAND_bytes failed");
    }
    return from_seed(seed);
}

Address KeyPair::address() const { return derive_address(public_); }

Signature KeyPair::sign(ByteView message) const { return trating::sign(secret_, message); }

Digest hash32(ByteView data) {
    Digest out;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.bytes.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
        throw Error(ErrorCode::Crypto, "sha256 failed");
    }
    return out;
}

Address derive_address(const PublicKey& public_key) {
    Digest d = hash32(public_key.view());
    Address a;
    std::copy(d.bytes.end() - 20, d.bytes.end(), a.bytes.begin());
    return a;
}

Signature sign(const std::array<std::uint8_t, 32>& secret_key, ByteView message) {
    if (message.empty()) throw Error(ErrorCode::Crypto, "refusing to sign an empty message");
    PkeyPtr key = private_key(secret_key);
    MdCtxPtr ctx(EVP_MD_CTX_new());
    Signature sig;
    std::size_t len = sig.bytes.size();
    if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1 ||
        EVP_DigestSign(ctx.get(), sig.bytes.data(), &len, message.data(), message.size()) != 1 || len != 64) {
        throw Error(ErrorCode::Crypto, "ed25519 signing failed");
    }
    return sig;
}

bool verify(const PublicKey& public_key, ByteView message, const Signature& signature) {
    if (message.empty()) return false;
    PkeyPtr key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.bytes.data(),
                                            public_key.bytes.size()));
    if (!key) return false;
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) return false;
    return EVP_DigestVerify(ctx.get(), signature.bytes.data(), signature.bytes.size(), message.data(),
                            message.size()) == 1;
}

bool verify_raw(ByteView public_key, ByteView message, ByteView signature) {
    if (public_key.size() != PublicKey::size || signature.size() != Signature::size) {
        throw Error(ErrorCode::Crypto, "malformed key or signature length");
    }
    PublicKey pk;
    Signature sig;
    std::copy(public_key.begin(), public_key.end(), pk.bytes.begin());
    std::copy(signature.begin(), signature.end(), sig.bytes.begin());
    return verify(pk, message, sig);
}

}  // namespace trating
