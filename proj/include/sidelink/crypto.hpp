#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace sidelink::crypto {

using Bytes32 = std::array<uint8_t, 32>;
using Bytes64 = std::array<uint8_t, 64>;

// Idempotent libsodium initialization; called by every wrapper.
void init();

Bytes32 sha256(std::span<const uint8_t> data);

struct X25519KeyPair {
    Bytes32 priv{};
    Bytes32 pub{};
};

// Deterministic keypair from a 32-byte seed (seed is clamped per X25519).
X25519KeyPair x25519_keypair(const Bytes32& seed);

// ECDH shared secret; throws DegenerateSecret on an all-zero output.
Bytes32 x25519_shared(const Bytes32& priv, const Bytes32& peer_pub);

// scrypt with explicit cost parameters, 32-byte output.
Bytes32 scrypt32(std::span<const uint8_t> password, std::span<const uint8_t> salt,
                 uint64_t n = 1 << 14, uint32_t r = 8, uint32_t p = 1);

struct Ed25519KeyPair {
    Bytes64 priv{};
    Bytes32 pub{};
};

Ed25519KeyPair ed25519_keypair(const Bytes32& seed);
Bytes64 ed25519_sign(std::span<const uint8_t> msg, const Bytes64& priv);
bool ed25519_verify(std::span<const uint8_t> msg, const Bytes64& sig, const Bytes32& pub);

void wipe(std::span<uint8_t> data);

}  // namespace sidelink::crypto
