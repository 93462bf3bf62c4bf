#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sidelink/codec.hpp"
#include "sidelink/rng.hpp"

namespace sidelink {

// On-off-keyed 40 kHz envelope, abstracted above the carrier: a sample is 1
// while an ultrasonic burst is being emitted.
struct EnvelopeTrace {
    std::vector<uint8_t> samples;
    double sample_rate = 0.0;  // Hz

    double duration() const { return samples.size() / sample_rate; }
};

struct TransducerConfig {
    double angle_deg = 0.0;           // receiver angle off center, |angle| <= 45
    double distance_m = 0.0;          // transmitter distance
    double modulation_period = 0.02;  // m, seconds per encoded bit
    double alpha_angle = 0.15;        // duty-cycle distortion coefficients
    double alpha_dist = 0.10;
    double max_distance_m = 3.0;
    double base_duty = 0.35;      // burst width as a fraction of a half period
    double sample_rate = 0.0;     // 0 = derive as 20x the slot rate
    double edge_jitter_s = 0.0;   // gaussian jitter on burst starts

    double half_period() const { return modulation_period / 2.0; }
    // Received ON runs stretch by this factor; burst starts are unaffected.
    double distortion_factor() const {
        double d = max_distance_m > 0.0 ? distance_m / max_distance_m : 0.0;
        return 1.0 + alpha_angle * std::abs(angle_deg) / 45.0 + alpha_dist * d;
    }
};

// Emit one burst per transition of the DM level waveform (idle..levels..idle).
// Burst starts carry the timing; duty-cycle distortion only widens bursts.
EnvelopeTrace acoustic_transmit(const LevelSequence& levels, const TransducerConfig& cfg,
                                Rng& rng);

// Distances between consecutive accepted envelope rising edges. Edges closer
// than m/2 to the previously accepted one are glitches and are dropped
// without advancing the reference edge.
IntervalSeries sound_preprocess(const EnvelopeTrace& trace, double modulation_period);

// Fraction of ON time between the first and last envelope edge.
double measure_duty_cycle(const EnvelopeTrace& trace);

// Offline trace format: CSV "time_s,level".
void write_envelope_csv(std::ostream& out, const EnvelopeTrace& trace);
EnvelopeTrace read_envelope_csv(std::istream& in);

// Convenience: framed payload -> envelope -> intervals -> payload.
EnvelopeTrace acoustic_send_payload(const BitString& payload, const TransducerConfig& cfg,
                                    Rng& rng);
BitString acoustic_receive_payload(const EnvelopeTrace& trace, double modulation_period,
                                   size_t payload_bits);

}  // namespace sidelink
