#include "sidelink/crypto.hpp"

#include <sodium.h>

#include <mutex>

#include "sidelink/error.hpp"

namespace sidelink::crypto {

void init() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (sodium_init() < 0) fail(Errc::config_error, "libsodium initialization failed");
    });
}

Bytes32 sha256(std::span<const uint8_t> data) {
    init();
    Bytes32 out;
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

X25519KeyPair x25519_keypair(const Bytes32& seed) {
    init();
    X25519KeyPair kp;
    kp.priv = seed;
    // Standard X25519 clamping.
    kp.priv[0] &= 248;
    kp.priv[31] &= 127;
    kp.priv[31] |= 64;
    crypto_scalarmult_curve25519_base(kp.pub.data(), kp.priv.data());
    return kp;
}

Bytes32 x25519_shared(const Bytes32& priv, const Bytes32& peer_pub) {
    init();
    Bytes32 out;
    if (crypto_scalarmult_curve25519(out.data(), priv.data(), peer_pub.data()) != 0) {
        fail(Errc::degenerate_secret, "all-zero ECDH output");
    }
    bool zero = true;
    for (uint8_t b : out) zero = zero && b == 0;
    if (zero) fail(Errc::degenerate_secret, "all-zero ECDH output");
    return out;
}

Bytes32 scrypt32(std::span<const uint8_t> password, std::span<const uint8_t> salt, uint64_t n,
                 uint32_t r, uint32_t p) {
    init();
    Bytes32 out;
    if (crypto_pwhash_scryptsalsa208sha256_ll(password.data(), password.size(), salt.data(),
                                              salt.size(), n, r, p, out.data(), out.size()) != 0) {
        fail(Errc::config_error, "scrypt parameters rejected");
    }
    return out;
}

Ed25519KeyPair ed25519_keypair(const Bytes32& seed) {
    init();
    Ed25519KeyPair kp;
    crypto_sign_ed25519_seed_keypair(kp.pub.data(), kp.priv.data(), seed.data());
    return kp;
}

Bytes64 ed25519_sign(std::span<const uint8_t> msg, const Bytes64& priv) {
    init();
    Bytes64 sig;
    crypto_sign_ed25519_detached(sig.data(), nullptr, msg.data(), msg.size(), priv.data());
    return sig;
}

bool ed25519_verify(std::span<const uint8_t> msg, const Bytes64& sig, const Bytes32& pub) {
    init();
    return crypto_sign_ed25519_verify_detached(sig.data(), msg.data(), msg.size(), pub.data()) ==
           0;
}

void wipe(std::span<uint8_t> data) {
    init();
    sodium_memzero(data.data(), data.size());
}

}  // namespace sidelink::crypto
