#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sidelink/scenario.hpp"

namespace sidelink {

struct TraceEvent {
    double t = 0.0;
    std::string src;
    std::string kind;
    nlohmann::json data;

    nlohmann::json to_json() const;
};

// Append-only event log with monotonic simulated timestamps.
class TraceLog {
public:
    void emit(double t, std::string src, std::string kind, nlohmann::json data = {});
    const std::vector<TraceEvent>& events() const { return events_; }
    void write_jsonl(std::ostream& out) const;
    std::string to_jsonl() const;

private:
    std::vector<TraceEvent> events_;
};

struct RunResult {
    std::string outcome;  // "confirmed" | "failed:<Error>" | "error:<Error>"
    bool expectation_met = false;
    nlohmann::json summary;
    TraceLog trace;
};

// Execute one scenario end to end: PKI registration and sync, channel
// construction with fault injection, handshake, summary. Deterministic for
// a fixed (scenario, seed).
RunResult run_scenario(const Scenario& scenario, std::optional<uint64_t> seed_override = {});

struct BerRow {
    std::string channel;
    std::string config;
    size_t payload_bits = 0;
    size_t errored_bits = 0;
    double ber = 0.0;
};

// Codec-only error-rate measurement across channel configurations. Noise
// draws are coupled across sigma values so the sweep is monotone-comparable.
std::vector<BerRow> measure_ber_visual(const Scenario& scenario, size_t payloads,
                                       size_t bits_per_payload,
                                       const std::vector<double>& noise_sigmas);
std::vector<BerRow> measure_ber_acoustic(const Scenario& scenario, size_t payloads,
                                         size_t bits_per_payload,
                                         const std::vector<double>& jitters);
void write_ber_csv(std::ostream& out, const std::vector<BerRow>& rows);

struct AttackVerdict {
    std::string scenario;
    std::string expected;
    std::string actual;
    bool pass = false;
};

// Run every scenario and compare against its expected outcome.
std::vector<AttackVerdict> attack_suite(const std::vector<Scenario>& scenarios);
void write_verdict_table(std::ostream& out, const std::vector<AttackVerdict>& verdicts);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Attacker utility: mutate one byte of a revealed entry inside the chain
// copy and re-mine that block and everything above it so the chain itself
// still verifies; only the historic commit gives the tamper away.
Chain remine_with_mutated_reveal(const Chain& source, size_t byte_index);

// Crude source tamper: flip one byte inside a block's stored prev_hash.
std::vector<uint8_t> tamper_block_bytes(const Chain& source, size_t block_index);

}  // namespace sidelink
