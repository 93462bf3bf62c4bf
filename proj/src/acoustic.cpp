#include "sidelink/acoustic.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "sidelink/error.hpp"

namespace sidelink {

namespace {

// Transition times (seconds) of idle ++ levels ++ idle.
std::vector<double> transition_times(const LevelSequence& levels) {
    std::vector<double> out;
    uint8_t prev = kIdleLevel;
    const size_t n = levels.levels.size();
    for (size_t k = 0; k <= n; ++k) {
        uint8_t cur = (k < n) ? levels.levels[k] : kIdleLevel;
        if (cur != prev) {
            out.push_back(k * levels.half_period);
            prev = cur;
        }
    }
    return out;
}

}  // namespace

EnvelopeTrace acoustic_transmit(const LevelSequence& levels, const TransducerConfig& cfg,
                                Rng& rng) {
    if (std::abs(cfg.angle_deg) > 45.0) {
        fail(Errc::config_error, "transducer angle outside +/-45 degree detection cone");
    }
    if (cfg.modulation_period <= 0.0) fail(Errc::config_error, "modulation period must be positive");
    const double h = levels.half_period;
    const double factor = cfg.distortion_factor();
    const double burst = cfg.base_duty * h * factor;
    if (burst >= h) {
        fail(Errc::config_error, "duty-cycle distortion erases the OFF run between bursts");
    }
    double rate = cfg.sample_rate > 0.0 ? cfg.sample_rate : 20.0 / h;
    if (rate < 10.0 / h) fail(Errc::config_error, "sample rate below 10x the slot rate");

    auto edges = transition_times(levels);
    EnvelopeTrace trace;
    trace.sample_rate = rate;
    const double total = (levels.levels.size() + 2) * h;
    trace.samples.assign(static_cast<size_t>(std::llround(total * rate)), 0);
    for (double t : edges) {
        double jitter = cfg.edge_jitter_s > 0.0 ? rng.normal(0.0, cfg.edge_jitter_s) : 0.0;
        double start = t + jitter;
        auto first = static_cast<long long>(std::llround(start * rate));
        auto last = static_cast<long long>(std::llround((start + burst) * rate));
        for (long long i = std::max(0ll, first);
             i < std::min<long long>(trace.samples.size(), last); ++i) {
            trace.samples[static_cast<size_t>(i)] = 1;
        }
    }
    return trace;
}

IntervalSeries sound_preprocess(const EnvelopeTrace& trace, double modulation_period) {
    if (modulation_period <= 0.0) fail(Errc::config_error, "modulation period must be positive");
    if (trace.sample_rate <= 0.0) fail(Errc::config_error, "trace has no sample rate");
    IntervalSeries out;
    uint8_t prev = 0;
    long long ref = -1;
    size_t edges = 0;
    for (size_t i = 0; i < trace.samples.size(); ++i) {
        uint8_t cur = trace.samples[i];
        if (cur == 1 && prev == 0) {
            ++edges;
            if (ref < 0) {
                ref = static_cast<long long>(i);
            } else {
                double d = static_cast<double>(static_cast<long long>(i) - ref) /
                           trace.sample_rate;
                // The half period itself is a legitimate distance, so the
                // glitch cut-off is inclusive at m/2. Rejected edges do not
                // advance the reference, which recovers the true spacing
                // after a glitch burst.
                if (d >= modulation_period / 2.0) {
                    out.intervals.push_back(d);
                    ref = static_cast<long long>(i);
                }
            }
        }
        prev = cur;
    }
    if (edges < 2 || out.intervals.empty()) {
        fail(Errc::decode_failure, "no qualifying envelope edges");
    }
    return out;
}

double measure_duty_cycle(const EnvelopeTrace& trace) {
    size_t first = trace.samples.size(), last = 0, on = 0;
    for (size_t i = 0; i < trace.samples.size(); ++i) {
        if (trace.samples[i]) {
            first = std::min(first, i);
            last = i;
            ++on;
        }
    }
    if (first >= last) fail(Errc::decode_failure, "trace carries no envelope activity");
    return static_cast<double>(on) / static_cast<double>(last - first + 1);
}

void write_envelope_csv(std::ostream& out, const EnvelopeTrace& trace) {
    out << "time_s,level\n";
    for (size_t i = 0; i < trace.samples.size(); ++i) {
        out << static_cast<double>(i) / trace.sample_rate << ',' << int(trace.samples[i]) << '\n';
    }
}

EnvelopeTrace read_envelope_csv(std::istream& in) {
    EnvelopeTrace trace;
    std::string line;
    if (!std::getline(in, line) || line.rfind("time_s,level", 0) != 0) {
        fail(Errc::config_error, "envelope CSV missing time_s,level header");
    }
    double first_t = 0.0, second_t = 0.0;
    size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) fail(Errc::config_error, "malformed envelope CSV row");
        double t = std::stod(line.substr(0, comma));
        int level = std::stoi(line.substr(comma + 1));
        if (row == 0) first_t = t;
        if (row == 1) second_t = t;
        trace.samples.push_back(static_cast<uint8_t>(level != 0));
        ++row;
    }
    if (row < 2) fail(Errc::config_error, "envelope CSV too short");
    trace.sample_rate = 1.0 / (second_t - first_t);
    return trace;
}

EnvelopeTrace acoustic_send_payload(const BitString& payload, const TransducerConfig& cfg,
                                    Rng& rng) {
    return acoustic_transmit(encode_frame_levels(payload, cfg.half_period()), cfg, rng);
}

BitString acoustic_receive_payload(const EnvelopeTrace& trace, double modulation_period,
                                   size_t payload_bits) {
    return decode_frame_intervals(sound_preprocess(trace, modulation_period), payload_bits);
}

}  // namespace sidelink
