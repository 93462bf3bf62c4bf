#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sidelink/bits.hpp"

namespace sidelink {

// Half-period slot values of a differential Manchester waveform. Every
// encoded bit occupies exactly two slots with a guaranteed mid-bit flip.
struct LevelSequence {
    std::vector<uint8_t> levels;
    double half_period = 0.0;  // seconds per slot

    size_t size() const { return levels.size(); }
    bool operator==(const LevelSequence&) const = default;
};

// Durations in seconds between detected signal transitions.
struct IntervalSeries {
    std::vector<double> intervals;

    size_t size() const { return intervals.size(); }
    bool operator==(const IntervalSeries&) const = default;
};

// Binary labels for a series of intervals: 0 = short, 1 = long.
struct IntervalClassification {
    std::vector<uint8_t> labels;
    double threshold = 0.0;
};

// Line idles dark/silent; transmissions start and end at level 0.
inline constexpr uint8_t kIdleLevel = 0;

// Fixed known preamble prefixed to every transmission. It resolves the
// initial level, guarantees a transition into the frame, and supplies both
// interval classes as classifier training data.
inline constexpr uint8_t kPreambleByte = 0xAA;
inline constexpr size_t kPreambleBits = 8;

// Differential Manchester, transition-at-start-encodes-0 convention:
// every bit flips mid-period, a 0 bit additionally flips at its boundary.
// initial_level is the line level immediately before the first bit.
LevelSequence dm_encode(const BitString& bits, double half_period, uint8_t initial_level);

// Exact inverse of dm_encode given the same initial level.
BitString dm_decode(const LevelSequence& levels, uint8_t initial_level);

// Threshold maximizing inter-class variance over a `levels`-bin histogram.
// Returns the bin boundary value; ties resolve to the lowest boundary.
double otsu_threshold(std::span<const double> samples, int levels = 256);

// Otsu-classify interval durations into short (0) / long (1).
IntervalClassification classify_intervals(const IntervalSeries& intervals, int levels = 256);
// Classify against a caller-supplied threshold (e.g. preamble-trained).
IntervalClassification classify_intervals(const IntervalSeries& intervals, double threshold);

// Reconstruct the level waveform between the first and last transition:
// mu starts at 1, long intervals emit two slots, short intervals one,
// mu toggles after every interval.
LevelSequence overlap_process(const IntervalClassification& classification,
                              double half_period = 0.0);

// Intervals between all level transitions of idle ++ levels ++ idle.
IntervalSeries level_transition_intervals(const LevelSequence& levels);

// preamble || payload
BitString frame_encode(const BitString& payload);

// DM waveform of a framed payload, starting from the idle line level.
LevelSequence encode_frame_levels(const BitString& payload, double half_period);

// Full receive chain: classify -> overlap_process -> realign against the
// frame boundaries -> dm_decode -> check and strip the preamble.
// `payload_bits` is the expected payload length.
BitString decode_frame_intervals(const IntervalSeries& intervals, size_t payload_bits);

// Same, with a pre-trained classification threshold.
BitString decode_frame_intervals(const IntervalSeries& intervals, size_t payload_bits,
                                 double classify_threshold);

}  // namespace sidelink
