#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>

#include "sidelink/bits.hpp"
#include "sidelink/crypto.hpp"
#include "sidelink/error.hpp"
#include "sidelink/pki.hpp"
#include "sidelink/rng.hpp"

namespace sidelink {

// Long-term credentials of one vehicle: visual identifier L, 32-bit identity
// salt I, Curve25519 keypair, certificate C and primary key Prim.
struct VehicleIdentity {
    std::string plate;
    BitString identity_salt;  // exactly 32 bits
    crypto::X25519KeyPair keys;
    Certificate certificate;
    crypto::Bytes32 primary_key{};

    static VehicleIdentity create(std::string plate, uint32_t salt, Rng& rng,
                                  CertificateAuthority& ca);
    DhtEntry dht_entry() const;
};

enum class Role : uint8_t { initiator, responder };
enum class Phase : uint8_t { Idle, SaltSent, PeerResolved, KeysDerived, Confirmed, Failed };

const char* role_name(Role role);
const char* phase_name(Phase phase);

// Ties in a simultaneous open break toward the lower primary key.
Role choose_role(const VehicleIdentity& self, const VehicleIdentity& peer);

struct SessionKeys {
    std::array<uint8_t, 16> encryption{};  // K
    std::array<uint8_t, 16> mac{};         // M
};

struct ScryptParams {
    uint64_t n = 1 << 14;
    uint32_t r = 8;
    uint32_t p = 1;
};

// Per-session state machine. Key material is only reachable in phases >=
// KeysDerived and is wiped on any failure.
class SessionState {
public:
    SessionState() = default;
    SessionState(Role role, std::string vehicle) : role_(role), vehicle_(std::move(vehicle)) {}

    Role role() const { return role_; }
    Phase phase() const { return phase_; }
    const std::string& vehicle() const { return vehicle_; }
    std::optional<Errc> failure() const { return failure_; }

    const BitString& session_salt() const { return r_self_; }
    std::optional<SessionKeys> keys() const;
    std::optional<crypto::Bytes32> master() const;

    size_t acoustic_payload_bits() const { return acoustic_bits_; }
    size_t visual_payload_bits() const { return visual_bits_; }

    void begin(Rng& rng);  // fresh 128-bit session salt, Idle -> SaltSent
    void note_acoustic_sent(size_t payload_bits) { acoustic_bits_ += payload_bits; }
    void note_visual_sent(size_t payload_bits) { visual_bits_ += payload_bits; }
    void peer_resolved(const BitString& r_peer, const crypto::Bytes32& pub_peer);
    void keys_derived(const crypto::Bytes32& shared, const crypto::Bytes32& master,
                      const SessionKeys& keys);
    void confirmed();
    void fail_session(Errc reason);  // wipes all key material

    const BitString& peer_salt() const { return r_peer_; }
    const crypto::Bytes32& peer_public_key() const { return pub_peer_; }

private:
    void expect_phase(Phase expected);

    Role role_ = Role::initiator;
    Phase phase_ = Phase::Idle;
    std::string vehicle_;
    std::optional<Errc> failure_;
    BitString r_self_;
    BitString r_peer_;
    crypto::Bytes32 pub_peer_{};
    crypto::Bytes32 shared_{};
    crypto::Bytes32 master_{};
    SessionKeys keys_{};
    bool have_keys_ = false;
    size_t acoustic_bits_ = 0;
    size_t visual_bits_ = 0;
};

// I (32 bits) || R_self (128 bits), big-endian: the whole acoustic payload.
inline constexpr size_t kUltrasonicPayloadBits = 160;
inline constexpr size_t kConfirmTagBits = 16;

BitString make_ultrasonic_payload(const VehicleIdentity& id, const BitString& r_self);

struct UltrasonicPayload {
    BitString identity_salt;  // 32 bits
    BitString session_salt;   // 128 bits
};
UltrasonicPayload parse_ultrasonic_payload(const BitString& payload);

struct ResolvedPeer {
    crypto::Bytes32 public_key{};
    Certificate certificate;
    UltrasonicPayload payload;
};

// Prim_peer = Hash(L_peer || I_peer); DHT lookup; certificate must verify
// under an accepted CA and bind exactly (Prim_peer, Pub_peer).
ResolvedPeer resolve_peer(const std::string& plate_peer, const BitString& payload,
                          const Dht& dht, const CaDirectory& accepted);

struct DerivedSecrets {
    crypto::Bytes32 shared{};
    crypto::Bytes32 master{};
    SessionKeys keys;
};

// master = scrypt(S, R_initiator || R_responder); K || M = master.
DerivedSecrets derive_keys(const crypto::Bytes32& priv_self, const crypto::Bytes32& pub_peer,
                           const BitString& r_initiator, const BitString& r_responder,
                           const ScryptParams& params = {});

// First 16 bits of SHA-256(master || role byte); the role byte keeps the two
// directions distinct.
uint16_t confirm_tag(const crypto::Bytes32& master, Role role);

struct Timeouts {
    double acoustic_s = 10.0;
    double visual_s = 5.0;
};

// Simulated side-channel transport between the two parties. Each call
// returns the bits as decoded by the peer plus the simulated transfer
// duration in seconds; implementations throw channel errors.
struct SideChannels {
    using Transfer = std::function<std::pair<BitString, double>(const BitString&, Role from)>;
    Transfer acoustic;
    Transfer visual_data;
    // Plate read of the peer vehicle: returns (plate, duration).
    std::function<std::pair<std::string, double>(Role reader)> plate_read;
};

struct PhaseEvent {
    double t = 0.0;
    std::string vehicle;
    Phase phase = Phase::Idle;
    std::string note;
};
using PhaseSink = std::function<void(const PhaseEvent&)>;

struct HandshakeResult {
    SessionState initiator;
    SessionState responder;
    double elapsed_s = 0.0;
};

// Drive one full session establishment between the two parties over the
// given channels. Both directions of a phase run concurrently; simulated
// time advances by the slower of the two transfers.
HandshakeResult run_handshake(const VehicleIdentity& initiator_id,
                              const VehicleIdentity& responder_id, const SideChannels& channels,
                              const Dht& dht, const CaDirectory& accepted,
                              const Timeouts& timeouts, Rng& rng,
                              const ScryptParams& scrypt_params = {},
                              const PhaseSink& sink = nullptr);

}  // namespace sidelink
