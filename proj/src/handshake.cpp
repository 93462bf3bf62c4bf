#include "sidelink/handshake.hpp"

#include <algorithm>

namespace sidelink {

VehicleIdentity VehicleIdentity::create(std::string plate, uint32_t salt, Rng& rng,
                                        CertificateAuthority& ca) {
    VehicleIdentity id;
    id.plate = std::move(plate);
    id.identity_salt = BitString::from_uint(salt, 32);
    crypto::Bytes32 seed{};
    rng.fill(seed);
    id.keys = crypto::x25519_keypair(seed);
    id.primary_key = compute_primary_key(id.plate, id.identity_salt);
    id.certificate = ca.issue(id.plate, id.identity_salt, id.keys.pub);
    return id;
}

DhtEntry VehicleIdentity::dht_entry() const {
    DhtEntry entry;
    entry.primary_key = primary_key;
    entry.public_key = keys.pub;
    entry.certificate = certificate;
    return entry;
}

const char* role_name(Role role) { return role == Role::initiator ? "initiator" : "responder"; }

const char* phase_name(Phase phase) {
    switch (phase) {
        case Phase::Idle: return "Idle";
        case Phase::SaltSent: return "SaltSent";
        case Phase::PeerResolved: return "PeerResolved";
        case Phase::KeysDerived: return "KeysDerived";
        case Phase::Confirmed: return "Confirmed";
        case Phase::Failed: return "Failed";
    }
    return "Unknown";
}

Role choose_role(const VehicleIdentity& self, const VehicleIdentity& peer) {
    return self.primary_key < peer.primary_key ? Role::initiator : Role::responder;
}

std::optional<SessionKeys> SessionState::keys() const {
    if (!have_keys_) return std::nullopt;
    return keys_;
}

std::optional<crypto::Bytes32> SessionState::master() const {
    if (!have_keys_) return std::nullopt;
    return master_;
}

void SessionState::expect_phase(Phase expected) {
    if (phase_ != expected) {
        fail(Errc::config_error, std::string("session in phase ") + phase_name(phase_) +
                                     ", expected " + phase_name(expected));
    }
}

void SessionState::begin(Rng& rng) {
    expect_phase(Phase::Idle);
    r_self_ = BitString::random(rng, 128);
    phase_ = Phase::SaltSent;
}

void SessionState::peer_resolved(const BitString& r_peer, const crypto::Bytes32& pub_peer) {
    expect_phase(Phase::SaltSent);
    r_peer_ = r_peer;
    pub_peer_ = pub_peer;
    phase_ = Phase::PeerResolved;
}

void SessionState::keys_derived(const crypto::Bytes32& shared, const crypto::Bytes32& master,
                                const SessionKeys& keys) {
    expect_phase(Phase::PeerResolved);
    shared_ = shared;
    master_ = master;
    keys_ = keys;
    have_keys_ = true;
    phase_ = Phase::KeysDerived;
}

void SessionState::confirmed() {
    expect_phase(Phase::KeysDerived);
    phase_ = Phase::Confirmed;
}

void SessionState::fail_session(Errc reason) {
    crypto::wipe(shared_);
    crypto::wipe(master_);
    crypto::wipe(keys_.encryption);
    crypto::wipe(keys_.mac);
    have_keys_ = false;
    failure_ = reason;
    phase_ = Phase::Failed;
}

BitString make_ultrasonic_payload(const VehicleIdentity& id, const BitString& r_self) {
    if (id.identity_salt.size() != 32) fail(Errc::salt_size, "identity salt must be 32 bits");
    if (r_self.size() != 128) fail(Errc::config_error, "session salt must be 128 bits");
    BitString payload = id.identity_salt;
    payload.append(r_self);
    return payload;
}

UltrasonicPayload parse_ultrasonic_payload(const BitString& payload) {
    if (payload.size() != kUltrasonicPayloadBits) {
        fail(Errc::decode_failure,
             "ultrasonic payload must be 160 bits, got " + std::to_string(payload.size()));
    }
    return UltrasonicPayload{payload.slice(0, 32), payload.slice(32, 128)};
}

ResolvedPeer resolve_peer(const std::string& plate_peer, const BitString& payload, const Dht& dht,
                          const CaDirectory& accepted) {
    ResolvedPeer out;
    out.payload = parse_ultrasonic_payload(payload);
    crypto::Bytes32 prim = compute_primary_key(plate_peer, out.payload.identity_salt);
    auto entry = dht.find(prim);
    if (!entry) fail(Errc::not_found, "no registered identity for observed plate and salt");
    const Certificate& cert = entry->certificate;
    if (!accepted.contains(cert.issuer)) {
        fail(Errc::ca_not_accepted, "certificate issuer not accepted: " + cert.issuer);
    }
    if (cert.subject_prim != prim || cert.subject_pub != entry->public_key) {
        fail(Errc::cert_invalid, "certificate does not bind this primary key and public key");
    }
    if (!verify_certificate(cert, accepted)) {
        fail(Errc::cert_invalid, "certificate signature verification failed");
    }
    out.public_key = entry->public_key;
    out.certificate = cert;
    return out;
}

DerivedSecrets derive_keys(const crypto::Bytes32& priv_self, const crypto::Bytes32& pub_peer,
                           const BitString& r_initiator, const BitString& r_responder,
                           const ScryptParams& params) {
    if (r_initiator.size() != 128 || r_responder.size() != 128) {
        fail(Errc::config_error, "session salts must be 128 bits");
    }
    DerivedSecrets out;
    out.shared = crypto::x25519_shared(priv_self, pub_peer);
    BitString salt_bits = r_initiator;
    salt_bits.append(r_responder);
    auto salt = salt_bits.to_bytes();
    out.master = crypto::scrypt32(out.shared, salt, params.n, params.r, params.p);
    std::copy(out.master.begin(), out.master.begin() + 16, out.keys.encryption.begin());
    std::copy(out.master.begin() + 16, out.master.end(), out.keys.mac.begin());
    return out;
}

uint16_t confirm_tag(const crypto::Bytes32& master, Role role) {
    std::vector<uint8_t> buf(master.begin(), master.end());
    buf.push_back(role == Role::initiator ? 'I' : 'R');
    auto digest = crypto::sha256(buf);
    return static_cast<uint16_t>((digest[0] << 8) | digest[1]);
}

namespace {

struct Party {
    const VehicleIdentity* id;
    SessionState state;
    BitString rx_payload;  // peer's acoustic payload as decoded here
    std::string peer_plate;
    ResolvedPeer resolved;
    DerivedSecrets secrets;
};

}  // namespace

HandshakeResult run_handshake(const VehicleIdentity& initiator_id,
                              const VehicleIdentity& responder_id, const SideChannels& channels,
                              const Dht& dht, const CaDirectory& accepted,
                              const Timeouts& timeouts, Rng& rng,
                              const ScryptParams& scrypt_params, const PhaseSink& sink) {
    Party a{&initiator_id, SessionState(Role::initiator, initiator_id.plate), {}, {}, {}, {}};
    Party b{&responder_id, SessionState(Role::responder, responder_id.plate), {}, {}, {}, {}};
    double t = 0.0;

    auto emit = [&](const Party& p, const std::string& note = "") {
        if (sink) sink(PhaseEvent{t, p.state.vehicle(), p.state.phase(), note});
    };
    auto abort_both = [&](Party& failing, Errc reason, const std::string& note) {
        failing.state.fail_session(reason);
        emit(failing, note);
        Party& other = (&failing == &a) ? b : a;
        if (other.state.phase() != Phase::Failed) {
            // The peer never hears the next message and gives up at its
            // own deadline.
            other.state.fail_session(Errc::timeout);
            emit(other, "peer aborted");
        }
        return HandshakeResult{a.state, b.state, t};
    };

    // Phase 1: both sides broadcast I || R over the ultrasonic channel.
    // The two directions run concurrently; the phase lasts as long as the
    // slower transfer.
    Rng salt_rng = rng.fork("session-salts");
    a.state.begin(salt_rng);
    b.state.begin(salt_rng);
    emit(a);
    emit(b);
    double phase_dur = 0.0;
    for (Party* sender : {&a, &b}) {
        Party& receiver = (sender == &a) ? b : a;
        BitString payload = make_ultrasonic_payload(*sender->id, sender->state.session_salt());
        try {
            auto [decoded, duration] = channels.acoustic(payload, sender->state.role());
            if (duration > timeouts.acoustic_s) {
                return abort_both(receiver, Errc::timeout, "acoustic transfer past deadline");
            }
            phase_dur = std::max(phase_dur, duration);
            sender->state.note_acoustic_sent(kUltrasonicPayloadBits);
            receiver.rx_payload = decoded;
        } catch (const Error& e) {
            return abort_both(receiver, e.kind(), e.what());
        }
    }
    t += phase_dur;

    // Phase 2: visual identification of the peer vehicle.
    phase_dur = 0.0;
    for (Party* reader : {&a, &b}) {
        try {
            auto [plate, duration] = channels.plate_read(reader->state.role());
            if (duration > timeouts.visual_s) {
                return abort_both(*reader, Errc::timeout, "plate read past deadline");
            }
            phase_dur = std::max(phase_dur, duration);
            reader->peer_plate = plate;
        } catch (const Error& e) {
            return abort_both(*reader, e.kind(), e.what());
        }
    }
    t += phase_dur;

    // Phase 3: blockchain DHT resolution, ECDH and key schedule.
    for (Party* p : {&a, &b}) {
        try {
            p->resolved = resolve_peer(p->peer_plate, p->rx_payload, dht, accepted);
            p->state.peer_resolved(p->resolved.payload.session_salt, p->resolved.public_key);
            emit(*p);
        } catch (const Error& e) {
            return abort_both(*p, e.kind(), e.what());
        }
    }
    for (Party* p : {&a, &b}) {
        const BitString& r_init = p->state.role() == Role::initiator ? p->state.session_salt()
                                                                     : p->state.peer_salt();
        const BitString& r_resp = p->state.role() == Role::initiator ? p->state.peer_salt()
                                                                     : p->state.session_salt();
        try {
            p->secrets = derive_keys(p->id->keys.priv, p->state.peer_public_key(), r_init, r_resp,
                                     scrypt_params);
            p->state.keys_derived(p->secrets.shared, p->secrets.master, p->secrets.keys);
            emit(*p);
        } catch (const Error& e) {
            return abort_both(*p, e.kind(), e.what());
        }
    }

    // Phase 4: 16-bit master-secret confirmation over the light channel.
    uint16_t tag_seen_by_a = 0, tag_seen_by_b = 0;
    phase_dur = 0.0;
    for (Party* sender : {&a, &b}) {
        Party& receiver = (sender == &a) ? b : a;
        uint16_t tag = confirm_tag(sender->secrets.master, sender->state.role());
        try {
            auto [decoded, duration] =
                channels.visual_data(BitString::from_uint(tag, 16), sender->state.role());
            if (duration > timeouts.visual_s) {
                return abort_both(receiver, Errc::timeout, "visual transfer past deadline");
            }
            phase_dur = std::max(phase_dur, duration);
            sender->state.note_visual_sent(kConfirmTagBits);
            (&receiver == &a ? tag_seen_by_a : tag_seen_by_b) =
                static_cast<uint16_t>(decoded.to_uint());
        } catch (const Error& e) {
            return abort_both(receiver, e.kind(), e.what());
        }
    }
    t += phase_dur;

    // Phase 5: mutual verification of the peer's tag.
    for (Party* p : {&a, &b}) {
        Role peer_role = p->state.role() == Role::initiator ? Role::responder : Role::initiator;
        uint16_t expected = confirm_tag(p->secrets.master, peer_role);
        uint16_t got = (p == &a) ? tag_seen_by_a : tag_seen_by_b;
        if (expected != got) {
            return abort_both(*p, Errc::tag_mismatch, "confirm tag mismatch");
        }
    }
    a.state.confirmed();
    b.state.confirmed();
    emit(a);
    emit(b);
    return HandshakeResult{a.state, b.state, t};
}

}  // namespace sidelink
