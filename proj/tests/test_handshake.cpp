#include <set>

#include "doctest.h"
#include "sidelink/error.hpp"
#include "sidelink/handshake.hpp"

using namespace sidelink;

namespace {

struct Fixture {
    CertificateAuthority ca = CertificateAuthority::from_name("RootCA");
    VehicleIdentity lead, follow;
    Dht dht;
    CaDirectory accepted;

    explicit Fixture(uint64_t seed = 1) {
        Rng lead_rng = Rng(seed).fork("lead");
        Rng follow_rng = Rng(seed).fork("follow");
        lead = VehicleIdentity::create("LEAD42", 0x12345678, lead_rng, ca);
        follow = VehicleIdentity::create("FOLW77", 0xA1B2C3D4, follow_rng, ca);
        dht.entries[lead.primary_key] = lead.dht_entry();
        dht.entries[follow.primary_key] = follow.dht_entry();
        accepted["RootCA"] = ca.verify_key();
    }
};

// Loss-free stub transport with fixed durations and optional bit faults.
SideChannels stub_channels(int* flip_bit = nullptr, Role* flip_from = nullptr,
                           double acoustic_dur = 3.4, double visual_dur = 1.7,
                           const std::string& lead_plate = "LEAD42",
                           const std::string& follow_plate = "FOLW77") {
    SideChannels ch;
    ch.acoustic = [=](const BitString& bits, Role from) {
        BitString out = bits;
        if (flip_bit && *flip_bit >= 0 && flip_from && *flip_from == from) {
            out.flip(static_cast<size_t>(*flip_bit));
        }
        return std::make_pair(out, acoustic_dur);
    };
    ch.visual_data = [=](const BitString& bits, Role) { return std::make_pair(bits, visual_dur); };
    ch.plate_read = [=](Role reader) {
        return std::make_pair(reader == Role::initiator ? lead_plate : follow_plate, 0.034);
    };
    return ch;
}

const ScryptParams kFast{1 << 8, 8, 1};  // light parameters for property loops

}  // namespace

TEST_SUITE("handshake") {

TEST_CASE("ultrasonic payload layout") {
    Fixture fx;
    Rng rng(2);
    BitString r = BitString::random(rng, 128);
    BitString payload = make_ultrasonic_payload(fx.lead, r);
    REQUIRE(payload.size() == 160);
    UltrasonicPayload parsed = parse_ultrasonic_payload(payload);
    CHECK(parsed.identity_salt == fx.lead.identity_salt);
    CHECK(parsed.session_salt == r);

    CHECK_THROWS_AS(parse_ultrasonic_payload(BitString::from_hex("00")), Error);
}

TEST_CASE("session salts are fresh") {
    Rng rng(3);
    std::set<std::string> seen;
    for (int i = 0; i < 1000; ++i) {
        SessionState s(Role::initiator, "X");
        s.begin(rng);
        CHECK(s.session_salt().size() == 128);
        CHECK(seen.insert(s.session_salt().to_hex()).second);
    }
}

TEST_CASE("resolve_peer verifies identity, issuer and binding") {
    Fixture fx;
    Rng rng(4);
    BitString r = BitString::random(rng, 128);
    BitString payload = make_ultrasonic_payload(fx.lead, r);

    ResolvedPeer peer = resolve_peer("LEAD42", payload, fx.dht, fx.accepted);
    CHECK(peer.public_key == fx.lead.keys.pub);
    CHECK(peer.payload.session_salt == r);

    // plate/salt mismatch: the attacker wears plate X but broadcasts Y's salt
    try {
        resolve_peer("FOLW77", payload, fx.dht, fx.accepted);
        FAIL("expected NotFound");
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::not_found);
    }

    // unaccepted issuer
    CaDirectory none;
    try {
        resolve_peer("LEAD42", payload, fx.dht, none);
        FAIL("expected CANotAccepted");
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::ca_not_accepted);
    }

    // forged signature under an accepted issuer name
    Dht forged = fx.dht;
    forged.entries[fx.lead.primary_key].certificate.signature[10] ^= 1;
    try {
        resolve_peer("LEAD42", payload, forged, fx.accepted);
        FAIL("expected CertInvalid");
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::cert_invalid);
    }

    // binding mismatch: entry public key swapped
    Dht swapped = fx.dht;
    swapped.entries[fx.lead.primary_key].public_key = fx.follow.keys.pub;
    try {
        resolve_peer("LEAD42", payload, swapped, fx.accepted);
        FAIL("expected CertInvalid");
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::cert_invalid);
    }
}

TEST_CASE("key derivation agrees across roles and splits the master") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        crypto::Bytes32 seed_a{}, seed_b{};
        rng.fill(seed_a);
        rng.fill(seed_b);
        auto a = crypto::x25519_keypair(seed_a);
        auto b = crypto::x25519_keypair(seed_b);
        BitString ri = BitString::random(rng, 128);
        BitString rr = BitString::random(rng, 128);

        DerivedSecrets da = derive_keys(a.priv, b.pub, ri, rr, kFast);
        DerivedSecrets db = derive_keys(b.priv, a.pub, ri, rr, kFast);
        CHECK(da.shared == db.shared);
        CHECK(da.master == db.master);
        CHECK(da.keys.encryption == db.keys.encryption);
        CHECK(da.keys.mac == db.keys.mac);
        CHECK(std::equal(da.keys.encryption.begin(), da.keys.encryption.end(),
                         da.master.begin()));
        CHECK(std::equal(da.keys.mac.begin(), da.keys.mac.end(), da.master.begin() + 16));
    }
}

TEST_CASE("salt avalanche: one flipped bit reshuffles the master") {
    Rng rng(6);
    crypto::Bytes32 seed_a{}, seed_b{};
    rng.fill(seed_a);
    rng.fill(seed_b);
    auto a = crypto::x25519_keypair(seed_a);
    auto b = crypto::x25519_keypair(seed_b);
    BitString ri = BitString::random(rng, 128);
    BitString rr = BitString::random(rng, 128);
    DerivedSecrets base = derive_keys(a.priv, b.pub, ri, rr, kFast);

    double total_distance = 0.0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        BitString ri2 = ri, rr2 = rr;
        size_t bit = rng.below(256);
        if (bit < 128) {
            ri2.flip(bit);
        } else {
            rr2.flip(bit - 128);
        }
        DerivedSecrets other = derive_keys(a.priv, b.pub, ri2, rr2, kFast);
        CHECK(other.keys.encryption != base.keys.encryption);
        CHECK(other.keys.mac != base.keys.mac);
        int distance = 0;
        for (int i = 0; i < 16; ++i) {
            distance += __builtin_popcount(
                static_cast<uint8_t>(other.keys.encryption[i] ^ base.keys.encryption[i]));
        }
        total_distance += distance;
    }
    double mean = total_distance / trials;  // of 128 key bits
    CHECK(mean > 54.0);
    CHECK(mean < 74.0);
}

TEST_CASE("confirm tags are role-separated and deterministic") {
    crypto::Bytes32 master{};
    for (size_t i = 0; i < master.size(); ++i) master[i] = static_cast<uint8_t>(i * 7);
    CHECK(confirm_tag(master, Role::initiator) == confirm_tag(master, Role::initiator));
    CHECK(confirm_tag(master, Role::initiator) != confirm_tag(master, Role::responder));
}

TEST_CASE("honest run confirms with matching keys and exact budgets") {
    Fixture fx;
    Rng rng(7);
    SideChannels ch = stub_channels();
    HandshakeResult result = run_handshake(fx.follow, fx.lead, ch, fx.dht, fx.accepted,
                                           Timeouts{}, rng, kFast);
    REQUIRE(result.initiator.phase() == Phase::Confirmed);
    REQUIRE(result.responder.phase() == Phase::Confirmed);
    CHECK(result.initiator.keys()->encryption == result.responder.keys()->encryption);
    CHECK(result.initiator.keys()->mac == result.responder.keys()->mac);
    CHECK(result.initiator.acoustic_payload_bits() == 160);
    CHECK(result.initiator.visual_payload_bits() == 16);
    CHECK(result.responder.acoustic_payload_bits() == 160);
    CHECK(result.responder.visual_payload_bits() == 16);
    CHECK(result.elapsed_s > 0.0);

    // freshness: a second session derives different keys
    Rng rng2 = rng.fork("second");
    HandshakeResult second = run_handshake(fx.follow, fx.lead, ch, fx.dht, fx.accepted,
                                           Timeouts{}, rng2, kFast);
    CHECK(second.initiator.keys()->encryption != result.initiator.keys()->encryption);
}

TEST_CASE("phase events appear exactly once per transition") {
    Fixture fx;
    Rng rng(8);
    SideChannels ch = stub_channels();
    std::vector<std::pair<std::string, Phase>> events;
    double last_t = 0.0;
    PhaseSink sink = [&](const PhaseEvent& e) {
        CHECK(e.t >= last_t);
        last_t = e.t;
        events.emplace_back(e.vehicle, e.phase);
    };
    run_handshake(fx.follow, fx.lead, ch, fx.dht, fx.accepted, Timeouts{}, rng, kFast, sink);
    for (Phase phase : {Phase::SaltSent, Phase::PeerResolved, Phase::KeysDerived,
                        Phase::Confirmed}) {
        for (const std::string& vehicle : {std::string("LEAD42"), std::string("FOLW77")}) {
            int count = 0;
            for (const auto& [v, p] : events) count += (v == vehicle && p == phase);
            CHECK(count == 1);
        }
    }
}

TEST_CASE("salt bit flip in transit fails with TagMismatch and wipes keys") {
    Fixture fx;
    Rng rng(9);
    int flip = 40;  // inside the 128-bit session salt region
    Role from = Role::initiator;
    SideChannels ch = stub_channels(&flip, &from);
    HandshakeResult result = run_handshake(fx.follow, fx.lead, ch, fx.dht, fx.accepted,
                                           Timeouts{}, rng, kFast);
    CHECK(result.initiator.phase() == Phase::Failed);
    CHECK(result.responder.phase() == Phase::Failed);
    bool some_tag_mismatch =
        (result.initiator.failure() && *result.initiator.failure() == Errc::tag_mismatch) ||
        (result.responder.failure() && *result.responder.failure() == Errc::tag_mismatch);
    CHECK(some_tag_mismatch);
    CHECK_FALSE(result.initiator.keys().has_value());
    CHECK_FALSE(result.responder.keys().has_value());
    CHECK_FALSE(result.initiator.master().has_value());
}

TEST_CASE("identity salt corruption resolves to an unknown identity") {
    Fixture fx;
    Rng rng(10);
    int flip = 5;  // inside the 32-bit identity salt
    Role from = Role::initiator;
    SideChannels ch = stub_channels(&flip, &from);
    HandshakeResult result = run_handshake(fx.follow, fx.lead, ch, fx.dht, fx.accepted,
                                           Timeouts{}, rng, kFast);
    CHECK(result.responder.phase() == Phase::Failed);
    CHECK(*result.responder.failure() == Errc::not_found);
}

TEST_CASE("deadline overruns time out") {
    Fixture fx;
    Rng rng(11);
    SideChannels slow = stub_channels(nullptr, nullptr, 12.0, 1.0);
    HandshakeResult result = run_handshake(fx.follow, fx.lead, slow, fx.dht, fx.accepted,
                                           Timeouts{}, rng, kFast);
    CHECK(result.initiator.phase() == Phase::Failed);
    CHECK(*result.initiator.failure() == Errc::timeout);

    SideChannels slow_visual = stub_channels(nullptr, nullptr, 3.0, 6.0);
    HandshakeResult r2 = run_handshake(fx.follow, fx.lead, slow_visual, fx.dht, fx.accepted,
                                       Timeouts{}, rng, kFast);
    CHECK(r2.initiator.phase() == Phase::Failed);
}

TEST_CASE("role choice breaks ties lexicographically on the primary key") {
    Fixture fx;
    Role a = choose_role(fx.lead, fx.follow);
    Role b = choose_role(fx.follow, fx.lead);
    CHECK(a != b);
    CHECK((fx.lead.primary_key < fx.follow.primary_key
               ? a == Role::initiator
               : b == Role::initiator));
}

}  // TEST_SUITE
