#include <sstream>

#include "doctest.h"
#include "sidelink/acoustic.hpp"
#include "sidelink/error.hpp"

using namespace sidelink;

namespace {

std::vector<size_t> rising_edges(const EnvelopeTrace& trace) {
    std::vector<size_t> out;
    uint8_t prev = 0;
    for (size_t i = 0; i < trace.samples.size(); ++i) {
        if (trace.samples[i] == 1 && prev == 0) out.push_back(i);
        prev = trace.samples[i];
    }
    return out;
}

}  // namespace

TEST_SUITE("acoustic") {

TEST_CASE("burst starts sit exactly on waveform transitions") {
    Rng rng(1);
    TransducerConfig cfg;
    cfg.modulation_period = 0.02;
    LevelSequence levels = dm_encode(BitString::from_hex("a5"), cfg.half_period(), kIdleLevel);
    EnvelopeTrace trace = acoustic_transmit(levels, cfg, rng);

    IntervalSeries direct = level_transition_intervals(levels);
    IntervalSeries heard = sound_preprocess(trace, cfg.modulation_period);
    REQUIRE(heard.size() == direct.size());
    for (size_t i = 0; i < heard.size(); ++i) {
        CHECK(heard.intervals[i] == doctest::Approx(direct.intervals[i]).epsilon(1e-9));
    }
}

TEST_CASE("rising-edge spacing is invariant under duty-cycle distortion") {
    BitString payload = BitString::from_hex("deadbeef");
    TransducerConfig base;
    base.modulation_period = 0.02;
    Rng rng(2);
    EnvelopeTrace clean = acoustic_send_payload(payload, base, rng);
    auto clean_edges = rising_edges(clean);

    for (double angle : {0.0, 15.0, 30.0, 45.0}) {
        for (double dist : {0.5, 1.5, 3.0}) {
            TransducerConfig cfg = base;
            cfg.angle_deg = angle;
            cfg.distance_m = dist;
            Rng r(2);
            EnvelopeTrace distorted = acoustic_send_payload(payload, cfg, r);
            CHECK(rising_edges(distorted) == clean_edges);
            CHECK(acoustic_receive_payload(distorted, cfg.modulation_period, payload.size()) ==
                  payload);
        }
    }
}

TEST_CASE("duty cycle strictly increases with angle and distance") {
    BitString payload = BitString::from_hex("1234");
    TransducerConfig base;
    base.modulation_period = 0.02;
    base.sample_rate = 40000.0;  // fine enough to resolve burst-width steps

    double prev = -1.0;
    for (double angle : {0.0, 15.0, 30.0, 45.0}) {
        TransducerConfig cfg = base;
        cfg.angle_deg = angle;
        cfg.distance_m = 1.5;
        Rng rng(3);
        double duty = measure_duty_cycle(acoustic_send_payload(payload, cfg, rng));
        CHECK(duty > prev);
        prev = duty;
    }
    prev = -1.0;
    for (double dist : {0.5, 1.5, 3.0}) {
        TransducerConfig cfg = base;
        cfg.angle_deg = 30.0;
        cfg.distance_m = dist;
        Rng rng(3);
        double duty = measure_duty_cycle(acoustic_send_payload(payload, cfg, rng));
        CHECK(duty > prev);
        prev = duty;
    }
}

TEST_CASE("config validation") {
    Rng rng(4);
    LevelSequence levels = dm_encode(BitString::from_hex("ff"), 0.01, kIdleLevel);

    TransducerConfig wide;
    wide.angle_deg = 60.0;
    CHECK_THROWS_AS(acoustic_transmit(levels, wide, rng), Error);

    TransducerConfig fat;
    fat.base_duty = 0.9;
    fat.angle_deg = 45.0;
    fat.distance_m = 3.0;
    try {
        acoustic_transmit(levels, fat, rng);
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.kind() == Errc::config_error);
    }
}

TEST_CASE("square envelope keeps every period; glitches are dropped") {
    EnvelopeTrace trace;
    trace.sample_rate = 2000.0;
    // 10 periods of 20 ms at 50% duty: 20 on, 20 off samples.
    for (int p = 0; p < 10; ++p) {
        for (int i = 0; i < 20; ++i) trace.samples.push_back(1);
        for (int i = 0; i < 20; ++i) trace.samples.push_back(0);
    }
    IntervalSeries s = sound_preprocess(trace, 0.02);
    REQUIRE(s.size() == 9);
    for (double d : s.intervals) CHECK(d == doctest::Approx(0.02));

    // Pulse train with a glitch 1 ms after a burst: the glitch's short
    // distance is discarded and the next real edge still measures 20 ms
    // from the previous accepted edge.
    EnvelopeTrace pulses;
    pulses.sample_rate = 2000.0;
    for (int p = 0; p < 10; ++p) {
        for (int i = 0; i < 4; ++i) pulses.samples.push_back(1);
        for (int i = 0; i < 36; ++i) pulses.samples.push_back(0);
    }
    pulses.samples[6] = 1;  // glitch 3 ms after the first rising edge
    IntervalSeries g = sound_preprocess(pulses, 0.02);
    REQUIRE(g.size() == 9);
    for (double d : g.intervals) CHECK(d == doctest::Approx(0.02));

    EnvelopeTrace silent;
    silent.sample_rate = 2000.0;
    silent.samples.assign(100, 0);
    CHECK_THROWS_AS(sound_preprocess(silent, 0.02), Error);
}

TEST_CASE("noiseless 176-bit payload decodes exactly at m = 20 ms") {
    Rng rng(5);
    BitString payload = BitString::random(rng, 176);
    TransducerConfig cfg;
    cfg.modulation_period = 0.02;
    Rng tx(6);
    EnvelopeTrace trace = acoustic_send_payload(payload, cfg, tx);
    CHECK(acoustic_receive_payload(trace, cfg.modulation_period, 176) == payload);
}

TEST_CASE("payload rate tracks 1/m") {
    Rng rng(7);
    BitString payload = BitString::random(rng, 1000);
    for (double m : {0.02, 0.0005}) {
        TransducerConfig cfg;
        cfg.modulation_period = m;
        Rng tx(8);
        EnvelopeTrace trace = acoustic_send_payload(payload, cfg, tx);
        double rate = payload.size() / trace.duration();
        CHECK(rate == doctest::Approx(1.0 / m).epsilon(0.02));
    }
}

TEST_CASE("envelope CSV round trip") {
    Rng rng(9);
    BitString payload = BitString::from_hex("cafe");
    TransducerConfig cfg;
    cfg.modulation_period = 0.02;
    EnvelopeTrace trace = acoustic_send_payload(payload, cfg, rng);

    std::stringstream buf;
    write_envelope_csv(buf, trace);
    EnvelopeTrace back = read_envelope_csv(buf);
    CHECK(back.samples == trace.samples);
    CHECK(back.sample_rate == doctest::Approx(trace.sample_rate));
    CHECK(acoustic_receive_payload(back, cfg.modulation_period, payload.size()) == payload);
}

}  // TEST_SUITE
