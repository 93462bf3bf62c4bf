#include "sidelink/codec.hpp"

#include <algorithm>
#include <cmath>

#include "sidelink/error.hpp"

namespace sidelink {

LevelSequence dm_encode(const BitString& bits, double half_period, uint8_t initial_level) {
    if (half_period <= 0.0) fail(Errc::config_error, "half_period must be positive");
    LevelSequence out;
    out.half_period = half_period;
    out.levels.reserve(bits.size() * 2);
    uint8_t level = initial_level & 1;
    for (uint8_t bit : bits) {
        if (bit == 0) level ^= 1;  // boundary transition encodes 0
        out.levels.push_back(level);
        level ^= 1;  // mandatory mid-bit transition
        out.levels.push_back(level);
    }
    return out;
}

BitString dm_decode(const LevelSequence& levels, uint8_t initial_level) {
    const auto& slots = levels.levels;
    if (slots.size() % 2 != 0) fail(Errc::odd_length, "level sequence has odd slot count");
    BitString out;
    uint8_t prev = initial_level & 1;
    for (size_t i = 0; i + 1 < slots.size(); i += 2) {
        if (slots[i] == slots[i + 1]) {
            fail(Errc::missing_mid_transition,
                 "no mid-bit transition in bit period " + std::to_string(i / 2));
        }
        out.push_back(slots[i] == prev ? 1 : 0);
        prev = slots[i + 1];
    }
    return out;
}

double otsu_threshold(std::span<const double> samples, int levels) {
    if (samples.size() < 2) fail(Errc::degenerate_input, "need at least two samples");
    if (levels < 2) fail(Errc::config_error, "need at least two quantization levels");
    double lo = samples[0], hi = samples[0];
    for (double s : samples) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (lo == hi) fail(Errc::degenerate_input, "all samples identical");

    const double width = (hi - lo) / levels;
    std::vector<uint64_t> count(levels, 0);
    std::vector<double> sum(levels, 0.0);
    for (double s : samples) {
        int bin = std::min(levels - 1, static_cast<int>((s - lo) / width));
        count[bin]++;
        sum[bin] += s;
    }

    double total_sum = 0.0;
    for (double s : sum) total_sum += s;
    const double n = static_cast<double>(samples.size());

    // Scan every boundary; keep the first maximum of the inter-class variance.
    double best_var = -1.0;
    int best_bin = 0;
    uint64_t c0 = 0;
    double s0 = 0.0;
    for (int t = 0; t < levels - 1; ++t) {
        c0 += count[t];
        s0 += sum[t];
        if (c0 == 0 || c0 == samples.size()) continue;
        double w0 = c0 / n;
        double w1 = 1.0 - w0;
        double mu0 = s0 / c0;
        double mu1 = (total_sum - s0) / (samples.size() - c0);
        double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_bin = t;
        }
    }
    if (best_var < 0.0) fail(Errc::degenerate_input, "no separating boundary");
    return lo + (best_bin + 1) * width;
}

IntervalClassification classify_intervals(const IntervalSeries& intervals, int levels) {
    if (intervals.intervals.empty()) fail(Errc::degenerate_input, "no intervals");
    if (intervals.intervals.size() == 1) fail(Errc::degenerate_input, "single interval");
    double threshold = otsu_threshold(intervals.intervals, levels);
    return classify_intervals(intervals, threshold);
}

IntervalClassification classify_intervals(const IntervalSeries& intervals, double threshold) {
    IntervalClassification out;
    out.threshold = threshold;
    out.labels.reserve(intervals.intervals.size());
    for (double d : intervals.intervals) out.labels.push_back(d > threshold ? 1 : 0);
    return out;
}

LevelSequence overlap_process(const IntervalClassification& classification, double half_period) {
    LevelSequence out;
    out.half_period = half_period;
    out.levels.reserve(classification.labels.size() * 2);
    uint8_t mu = 1;
    for (uint8_t label : classification.labels) {
        out.levels.push_back(mu);
        if (label == 1) out.levels.push_back(mu);
        mu ^= 1;
    }
    return out;
}

IntervalSeries level_transition_intervals(const LevelSequence& levels) {
    IntervalSeries out;
    uint8_t prev = kIdleLevel;
    bool have_prev_edge = false;
    size_t prev_edge = 0;
    const size_t n = levels.levels.size();
    for (size_t k = 0; k <= n; ++k) {
        uint8_t cur = (k < n) ? levels.levels[k] : kIdleLevel;
        if (cur != prev) {
            if (have_prev_edge) {
                out.intervals.push_back(static_cast<double>(k - prev_edge) * levels.half_period);
            }
            prev_edge = k;
            have_prev_edge = true;
            prev = cur;
        }
    }
    return out;
}

BitString frame_encode(const BitString& payload) {
    BitString frame = BitString::from_uint(kPreambleByte, kPreambleBits);
    frame.append(payload);
    return frame;
}

LevelSequence encode_frame_levels(const BitString& payload, double half_period) {
    return dm_encode(frame_encode(payload), half_period, kIdleLevel);
}

namespace {

BitString decode_from_classification(const IntervalClassification& classification,
                                     size_t payload_bits) {
    const size_t frame_bits = kPreambleBits + payload_bits;
    const size_t total_slots = 2 * frame_bits;
    LevelSequence mid = overlap_process(classification);

    // The reconstruction spans first..last transition. The preamble starts
    // with a 1 bit from the idle line, so exactly one leading idle slot is
    // always missing; at most one trailing slot is, when the frame ends low.
    if (mid.levels.size() + 1 > total_slots || mid.levels.size() + 2 < total_slots) {
        fail(Errc::decode_failure, "reconstructed " + std::to_string(mid.levels.size()) +
                                       " slots, expected frame of " + std::to_string(total_slots));
    }
    LevelSequence full;
    full.levels.reserve(total_slots);
    full.levels.push_back(kIdleLevel);
    full.levels.insert(full.levels.end(), mid.levels.begin(), mid.levels.end());
    while (full.levels.size() < total_slots) full.levels.push_back(kIdleLevel);

    BitString frame = dm_decode(full, kIdleLevel);
    if (frame.slice(0, kPreambleBits).to_uint() != kPreambleByte) {
        fail(Errc::decode_failure, "preamble mismatch, channel desynchronized");
    }
    return frame.slice(kPreambleBits, payload_bits);
}

}  // namespace

BitString decode_frame_intervals(const IntervalSeries& intervals, size_t payload_bits) {
    if (intervals.intervals.size() < 2) fail(Errc::decode_failure, "too few transitions");
    return decode_from_classification(classify_intervals(intervals), payload_bits);
}

BitString decode_frame_intervals(const IntervalSeries& intervals, size_t payload_bits,
                                 double classify_threshold) {
    if (intervals.intervals.empty()) fail(Errc::decode_failure, "too few transitions");
    return decode_from_classification(classify_intervals(intervals, classify_threshold),
                                      payload_bits);
}

}  // namespace sidelink
