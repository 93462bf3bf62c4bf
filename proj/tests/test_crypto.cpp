#include "doctest.h"
#include "sidelink/bits.hpp"
#include "sidelink/crypto.hpp"
#include "sidelink/error.hpp"

using namespace sidelink;

namespace {

crypto::Bytes32 b32(const std::string& hex) {
    auto v = hex_decode(hex);
    crypto::Bytes32 out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

}  // namespace

TEST_SUITE("crypto") {

TEST_CASE("sha256 known answers") {
    std::vector<uint8_t> abc{'a', 'b', 'c'};
    CHECK(hex_encode(crypto::sha256(abc)) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hex_encode(crypto::sha256({})) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("x25519 keypairs and shared secrets match RFC 7748 section 6.1") {
    auto alice = crypto::x25519_keypair(
        b32("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a"));
    auto bob = crypto::x25519_keypair(
        b32("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb"));
    CHECK(hex_encode(alice.pub) ==
          "8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a");
    CHECK(hex_encode(bob.pub) ==
          "de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f");

    auto s1 = crypto::x25519_shared(alice.priv, bob.pub);
    auto s2 = crypto::x25519_shared(bob.priv, alice.pub);
    CHECK(s1 == s2);
    CHECK(hex_encode(s1) == "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742");
}

TEST_CASE("x25519 rejects degenerate all-zero outputs") {
    auto kp = crypto::x25519_keypair(b32(std::string(64, '1')));
    crypto::Bytes32 zero{};
    try {
        crypto::x25519_shared(kp.priv, zero);
        FAIL("expected DegenerateSecret");
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::degenerate_secret);
    }
}

TEST_CASE("scrypt known answers from RFC 7914 section 12") {
    std::vector<uint8_t> p1{'p', 'l', 'e', 'a', 's', 'e', 'l', 'e', 't', 'm', 'e', 'i', 'n'};
    std::vector<uint8_t> s1{'S', 'o', 'd', 'i', 'u', 'm', 'C', 'h', 'l', 'o', 'r', 'i', 'd', 'e'};
    CHECK(hex_encode(crypto::scrypt32(p1, s1, 16384, 8, 1)) ==
          "7023bdcb3afd7348461c06cd81fd38ebfda8fbba904f8e3ea9b543f6545da1f2");

    std::vector<uint8_t> p2{'p', 'a', 's', 's', 'w', 'o', 'r', 'd'};
    std::vector<uint8_t> s2{'N', 'a', 'C', 'l'};
    CHECK(hex_encode(crypto::scrypt32(p2, s2, 1024, 8, 16)) ==
          "fdbabe1c9d3472007856e7190d01e9fe7c6ad7cbc8237830e77376634b373162");
}

TEST_CASE("ed25519 matches the RFC 8032 empty-message vector and verifies") {
    auto kp = crypto::ed25519_keypair(
        b32("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"));
    CHECK(hex_encode(kp.pub) == "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
    auto sig = crypto::ed25519_sign({}, kp.priv);
    CHECK(hex_encode(sig) ==
          "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
          "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b");
    CHECK(crypto::ed25519_verify({}, sig, kp.pub));

    std::vector<uint8_t> msg{'x'};
    CHECK_FALSE(crypto::ed25519_verify(msg, sig, kp.pub));
    sig[0] ^= 1;
    CHECK_FALSE(crypto::ed25519_verify({}, sig, kp.pub));
}

}  // TEST_SUITE
