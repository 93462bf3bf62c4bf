#include "sidelink/sim.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "sidelink/acoustic.hpp"
#include "sidelink/error.hpp"
#include "sidelink/visual.hpp"

namespace sidelink {

nlohmann::json TraceEvent::to_json() const {
    nlohmann::json j;
    j["t"] = t;
    j["src"] = src;
    j["kind"] = kind;
    if (!data.is_null()) j["data"] = data;
    return j;
}

void TraceLog::emit(double t, std::string src, std::string kind, nlohmann::json data) {
    if (!events_.empty() && t < events_.back().t) t = events_.back().t;
    events_.push_back(TraceEvent{t, std::move(src), std::move(kind), std::move(data)});
}

void TraceLog::write_jsonl(std::ostream& out) const {
    for (const auto& e : events_) out << e.to_json().dump() << '\n';
}

std::string TraceLog::to_jsonl() const {
    std::ostringstream out;
    write_jsonl(out);
    return out.str();
}

namespace {

struct World {
    CertificateAuthority ca;
    VehicleIdentity lead;
    VehicleIdentity follow;
    std::optional<VehicleIdentity> attacker;
    PkiNode node;
    CaDirectory accepted;
};

World build_world(const Scenario& sc, Rng& rng, TraceLog& trace) {
    World w{CertificateAuthority::from_name(sc.ca_name),
            {},
            {},
            {},
            PkiNode(sc.chain, sc.fees),
            {}};

    Rng lead_rng = rng.fork("identity-lead");
    Rng follow_rng = rng.fork("identity-follow");
    w.lead = VehicleIdentity::create(sc.lead.plate, sc.lead.salt, lead_rng, w.ca);
    w.follow = VehicleIdentity::create(sc.follow.plate, sc.follow.salt, follow_rng, w.ca);

    for (const std::string& name : sc.accepted_cas) {
        w.accepted[name] = CertificateAuthority::from_name(name).verify_key();
    }

    w.node.register_entry(w.lead.dht_entry(), 0.0);
    trace.emit(0.0, "pki", "register",
               {{"vehicle", w.lead.plate}, {"height", w.node.chain().height()}});
    w.node.register_entry(w.follow.dht_entry(), 0.0);
    trace.emit(0.0, "pki", "register",
               {{"vehicle", w.follow.plate}, {"height", w.node.chain().height()}});

    if (sc.impersonation == "forged_cert") {
        // Attacker clones the lead's plate with its own salt and plants a
        // DHT entry whose certificate claims the accepted CA but is signed
        // with the attacker's own key. Chain lineage is honest, the
        // signature is not.
        Rng attacker_rng = rng.fork("identity-attacker");
        VehicleIdentity evil;
        evil.plate = sc.lead.plate;
        evil.identity_salt = BitString::from_uint(0xE71Cu ^ sc.follow.salt, 32);
        crypto::Bytes32 seed{};
        attacker_rng.fill(seed);
        evil.keys = crypto::x25519_keypair(seed);
        evil.primary_key = compute_primary_key(evil.plate, evil.identity_salt);
        evil.certificate.subject_prim = evil.primary_key;
        evil.certificate.subject_pub = evil.keys.pub;
        evil.certificate.issuer = sc.ca_name;  // forged issuer claim
        evil.certificate.signature =
            crypto::ed25519_sign(evil.certificate.signed_payload(),
                                 crypto::ed25519_keypair(seed).priv);
        w.attacker = evil;
        w.node.register_entry(evil.dht_entry(), 0.0);
        trace.emit(0.0, "pki", "register",
                   {{"vehicle", "attacker"}, {"height", w.node.chain().height()}});
    } else if (sc.impersonation == "replay") {
        // Attacker replays the lead vehicle's identity salt while showing
        // an unregistered plate.
        Rng attacker_rng = rng.fork("identity-attacker");
        VehicleIdentity evil;
        evil.plate = "EVIL99";
        evil.identity_salt = BitString::from_uint(sc.lead.salt, 32);
        crypto::Bytes32 seed{};
        attacker_rng.fill(seed);
        evil.keys = crypto::x25519_keypair(seed);
        evil.primary_key = compute_primary_key(evil.plate, evil.identity_salt);
        w.attacker = evil;
    }
    return w;
}

}  // namespace

Chain remine_with_mutated_reveal(const Chain& source, size_t byte_index) {
    std::vector<Block> blocks = source.blocks();
    // Locate the last reveal transaction.
    long long block_idx = -1;
    size_t tx_idx = 0;
    for (size_t b = 0; b < blocks.size(); ++b) {
        for (size_t x = 0; x < blocks[b].txs.size(); ++x) {
            if (blocks[b].txs[x].kind == Transaction::kReveal) {
                block_idx = static_cast<long long>(b);
                tx_idx = x;
            }
        }
    }
    if (block_idx < 0) fail(Errc::config_error, "chain has no reveal to tamper with");
    auto& body = blocks[static_cast<size_t>(block_idx)].txs[tx_idx].body;
    body[byte_index % body.size()] ^= 0x5a;
    // Re-mine the tampered block and the suffix so structure still verifies.
    for (size_t b = static_cast<size_t>(block_idx); b < blocks.size(); ++b) {
        blocks[b].prev_hash = b == 0 ? crypto::Bytes32{} : blocks[b - 1].header_hash();
        blocks[b].nonce = 0;
        auto meets = [&](const Block& blk) {
            auto h = blk.header_hash();
            int bits = 0;
            for (uint8_t byte : h) {
                if (byte == 0) {
                    bits += 8;
                    continue;
                }
                for (int i = 7; i >= 0; --i) {
                    if (byte & (1u << i)) return bits >= static_cast<int>(blk.difficulty_bits);
                    ++bits;
                }
            }
            return true;
        };
        while (!meets(blocks[b])) ++blocks[b].nonce;
    }
    Chain copy = Chain::from_blocks(std::move(blocks), source.params());
    copy.verify();
    return copy;
}

std::vector<uint8_t> tamper_block_bytes(const Chain& source, size_t block_index) {
    std::vector<uint8_t> bytes = source.serialize();
    // Record layout: [type u8][len u32][block bytes...]; prev_hash sits at
    // offset 8 inside the block bytes.
    size_t pos = 0;
    size_t index = 0;
    while (pos < bytes.size()) {
        uint32_t len = (bytes[pos + 1] << 24) | (bytes[pos + 2] << 16) | (bytes[pos + 3] << 8) |
                       bytes[pos + 4];
        if (index == block_index) {
            bytes[pos + 5 + 8 + 3] ^= 0xff;
            return bytes;
        }
        pos += 5 + len;
        ++index;
    }
    fail(Errc::config_error, "block index out of range for tampering");
}

namespace {

std::string outcome_of(const HandshakeResult& result) {
    if (result.initiator.phase() == Phase::Confirmed &&
        result.responder.phase() == Phase::Confirmed) {
        return "confirmed";
    }
    // Report the root cause: the first party to fail with a reason other
    // than the induced peer timeout.
    Errc reason = Errc::timeout;
    for (const SessionState* s : {&result.initiator, &result.responder}) {
        if (s->failure() && *s->failure() != Errc::timeout) {
            reason = *s->failure();
            break;
        }
        if (s->failure()) reason = *s->failure();
    }
    return std::string("failed:") + errc_name(reason);
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, std::optional<uint64_t> seed_override) {
    Scenario sc = scenario;
    if (seed_override) sc.seed = *seed_override;
    Rng rng(sc.seed);

    RunResult result;
    TraceLog& trace = result.trace;
    trace.emit(0.0, "sim", "scenario", {{"name", sc.name}, {"seed", sc.seed}});

    World w = build_world(sc, rng, trace);

    // The vehicles sync their DHT copy from an untrusted chain source.
    Dht dht;
    try {
        if (sc.tamper_block >= 0) {
            auto bytes = tamper_block_bytes(w.node.chain(), static_cast<size_t>(sc.tamper_block));
            Chain tampered = Chain::deserialize(bytes, sc.chain);
            dht = filtered_sync(tampered, {sc.accepted_cas.begin(), sc.accepted_cas.end()});
        } else if (sc.tamper_entry) {
            Chain tampered = remine_with_mutated_reveal(w.node.chain(), 7);
            dht = filtered_sync(tampered, {sc.accepted_cas.begin(), sc.accepted_cas.end()});
        } else {
            dht = filtered_sync(w.node.chain(), {sc.accepted_cas.begin(), sc.accepted_cas.end()});
        }
    } catch (const Error& e) {
        trace.emit(0.0, "pki", "error", {{"error", errc_name(e.kind())}, {"detail", e.what()}});
        result.outcome = std::string("error:") + errc_name(e.kind());
        result.summary = {{"scenario", sc.name},
                          {"seed", sc.seed},
                          {"outcome", result.outcome},
                          {"handshake_started", false}};
        result.expectation_met = result.outcome == sc.expect_outcome;
        trace.emit(0.0, "sim", "summary", result.summary);
        return result;
    }
    trace.emit(0.0, "pki", "sync",
               {{"entries", dht.entries.size()}, {"dropped", dht.dropped.size()}});
    for (const auto& dropped : dht.dropped) {
        trace.emit(0.0, "pki", "dropped", {{"reason", dropped.reason}});
    }

    // Physical positions: the follow vehicle reads the lead's tail lights,
    // so the follow is the initiator.
    const VehicleIdentity& initiator = w.follow;
    const VehicleIdentity& responder = w.attacker ? *w.attacker : w.lead;
    std::string plate_shown_by_responder = responder.plate;
    std::string plate_shown_by_initiator = initiator.plate;

    double acoustic_elapsed = 0.0, visual_elapsed = 0.0;
    size_t acoustic_bits_total = 0, visual_bits_total = 0;

    SideChannels channels;
    channels.acoustic = [&](const BitString& payload, Role from) {
        Rng ch_rng = rng.fork(from == Role::initiator ? "acoustic-i" : "acoustic-r");
        EnvelopeTrace env = acoustic_send_payload(payload, sc.transducer, ch_rng);
        BitString decoded =
            acoustic_receive_payload(env, sc.transducer.modulation_period, payload.size());
        bool flip_here = sc.flip_payload_bit >= 0 &&
                         ((sc.flip_direction == "follow_to_lead" && from == Role::initiator) ||
                          (sc.flip_direction == "lead_to_follow" && from == Role::responder));
        if (flip_here) decoded.flip(static_cast<size_t>(sc.flip_payload_bit) % decoded.size());
        acoustic_elapsed = std::max(acoustic_elapsed, env.duration());
        acoustic_bits_total += payload.size();
        trace.emit(0.0, "channel", "acoustic_transfer",
                   {{"from", role_name(from)},
                    {"payload_bits", payload.size()},
                    {"duration_s", env.duration()},
                    {"bit_flipped", flip_here}});
        return std::make_pair(decoded, env.duration());
    };
    channels.visual_data = [&](const BitString& payload, Role from) {
        Rng ch_rng = rng.fork(from == Role::initiator ? "visual-i" : "visual-r");
        Capture cap = visual_send_payload(payload, sc.frames_per_slot, sc.camera, sc.geometry,
                                          sc.phase, ch_rng);
        Rng rx_rng = rng.fork(from == Role::initiator ? "visual-rx-i" : "visual-rx-r");
        BitString decoded =
            visual_receive_payload(cap, sc.geometry, sc.pose_noise, payload.size(), rx_rng);
        double duration = cap.frames.size() / sc.camera.frame_rate;
        visual_elapsed = std::max(visual_elapsed, duration);
        visual_bits_total += payload.size();
        trace.emit(0.0, "channel", "visual_transfer",
                   {{"from", role_name(from)},
                    {"payload_bits", payload.size()},
                    {"duration_s", duration}});
        return std::make_pair(decoded, duration);
    };
    channels.plate_read = [&](Role reader) {
        // The reader sees the physical plate on the peer vehicle.
        bool occluded = (reader == Role::initiator && sc.occlude_plate == "lead") ||
                        (reader == Role::responder && sc.occlude_plate == "follow");
        if (occluded) fail(Errc::plate_not_visible, "peer plate occluded");
        std::string plate = reader == Role::initiator ? plate_shown_by_responder
                                                      : plate_shown_by_initiator;
        return std::make_pair(plate, 1.0 / sc.camera.frame_rate);
    };

    Rng hs_rng = rng.fork("handshake");
    PhaseSink sink = [&](const PhaseEvent& event) {
        trace.emit(event.t, "handshake", "phase",
                   {{"vehicle", event.vehicle},
                    {"phase", phase_name(event.phase)},
                    {"note", event.note}});
    };
    HandshakeResult hs = run_handshake(initiator, responder, channels, dht, w.accepted,
                                       sc.timeouts, hs_rng, sc.scrypt, sink);

    result.outcome = outcome_of(hs);
    bool keys_match = false;
    if (hs.initiator.keys() && hs.responder.keys()) {
        keys_match = hs.initiator.keys()->encryption == hs.responder.keys()->encryption &&
                     hs.initiator.keys()->mac == hs.responder.keys()->mac;
    }
    result.summary = {
        {"scenario", sc.name},
        {"seed", sc.seed},
        {"outcome", result.outcome},
        {"handshake_started", true},
        {"elapsed_s", hs.elapsed_s},
        {"acoustic_payload_bits_per_direction", hs.initiator.acoustic_payload_bits()},
        {"visual_payload_bits_per_direction", hs.initiator.visual_payload_bits()},
        {"keys_match", keys_match},
        {"fees_paid_usd", usd_string(w.node.fees_paid_cents())},
        {"dht_entries", dht.entries.size()},
        {"rf_jam", sc.rf_jam},
    };
    result.expectation_met = result.outcome == sc.expect_outcome;
    trace.emit(hs.elapsed_s, "sim", "summary", result.summary);
    return result;
}

std::vector<BerRow> measure_ber_visual(const Scenario& scenario, size_t payloads,
                                       size_t bits_per_payload,
                                       const std::vector<double>& noise_sigmas) {
    std::vector<BerRow> rows;
    for (double sigma : noise_sigmas) {
        CameraConfig cfg = scenario.camera;
        cfg.noise_sigma = sigma;
        size_t total = 0, errors = 0;
        for (size_t p = 0; p < payloads; ++p) {
            // Same payload and same underlying noise draws for every sigma:
            // the comparison across sigmas is coupled.
            Rng payload_rng = Rng(scenario.seed).fork("ber-payload", p);
            BitString payload = BitString::random(payload_rng, bits_per_payload);
            Rng noise_rng = Rng(scenario.seed).fork("ber-noise", p);
            total += bits_per_payload;
            try {
                Capture cap = visual_send_payload(payload, scenario.frames_per_slot, cfg,
                                                  scenario.geometry, scenario.phase, noise_rng);
                Rng rx_rng = Rng(scenario.seed).fork("ber-rx", p);
                BitString decoded = visual_receive_payload(cap, scenario.geometry,
                                                           scenario.pose_noise,
                                                           bits_per_payload, rx_rng);
                for (size_t i = 0; i < bits_per_payload; ++i) {
                    if (decoded[i] != payload[i]) ++errors;
                }
            } catch (const Error&) {
                errors += bits_per_payload;  // undecodable counts fully errored
            }
        }
        char cfgbuf[64];
        std::snprintf(cfgbuf, sizeof(cfgbuf), "noise_sigma=%g", sigma);
        rows.push_back(BerRow{"visual", cfgbuf, total, errors,
                              total ? static_cast<double>(errors) / total : 0.0});
    }
    return rows;
}

std::vector<BerRow> measure_ber_acoustic(const Scenario& scenario, size_t payloads,
                                         size_t bits_per_payload,
                                         const std::vector<double>& jitters) {
    std::vector<BerRow> rows;
    for (double jitter : jitters) {
        TransducerConfig cfg = scenario.transducer;
        cfg.edge_jitter_s = jitter;
        size_t total = 0, errors = 0;
        for (size_t p = 0; p < payloads; ++p) {
            Rng payload_rng = Rng(scenario.seed).fork("ber-payload", p);
            BitString payload = BitString::random(payload_rng, bits_per_payload);
            Rng noise_rng = Rng(scenario.seed).fork("ber-noise", p);
            total += bits_per_payload;
            try {
                EnvelopeTrace env = acoustic_send_payload(payload, cfg, noise_rng);
                BitString decoded =
                    acoustic_receive_payload(env, cfg.modulation_period, bits_per_payload);
                for (size_t i = 0; i < bits_per_payload; ++i) {
                    if (decoded[i] != payload[i]) ++errors;
                }
            } catch (const Error&) {
                errors += bits_per_payload;
            }
        }
        char cfgbuf[64];
        std::snprintf(cfgbuf, sizeof(cfgbuf), "edge_jitter_s=%g", jitter);
        rows.push_back(BerRow{"acoustic", cfgbuf, total, errors,
                              total ? static_cast<double>(errors) / total : 0.0});
    }
    return rows;
}

void write_ber_csv(std::ostream& out, const std::vector<BerRow>& rows) {
    out << "channel,config,payload_bits,errored_bits,ber\n";
    for (const auto& row : rows) {
        out << row.channel << ',' << row.config << ',' << row.payload_bits << ','
            << row.errored_bits << ',' << row.ber << '\n';
    }
}

std::vector<AttackVerdict> attack_suite(const std::vector<Scenario>& scenarios) {
    std::vector<AttackVerdict> verdicts;
    for (const Scenario& sc : scenarios) {
        RunResult result = run_scenario(sc);
        verdicts.push_back(
            AttackVerdict{sc.name, sc.expect_outcome, result.outcome, result.expectation_met});
    }
    return verdicts;
}

void write_verdict_table(std::ostream& out, const std::vector<AttackVerdict>& verdicts) {
    out << "scenario,expected,actual,verdict\n";
    for (const auto& v : verdicts) {
        out << v.scenario << ',' << v.expected << ',' << v.actual << ','
            << (v.pass ? "PASS" : "FAIL") << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "exposure,lookahead,downsample,mistakes,time_s\n";
    for (const auto& row : rows) {
        out << row.exposure << ',' << row.lookahead << ',' << row.downsample << ','
            << row.mistakes << ',' << row.time_s << '\n';
    }
}

}  // namespace sidelink
