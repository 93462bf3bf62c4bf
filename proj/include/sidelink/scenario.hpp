#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "sidelink/acoustic.hpp"
#include "sidelink/handshake.hpp"
#include "sidelink/pki.hpp"
#include "sidelink/visual.hpp"

namespace sidelink {

// Plain-text key-value scenario format: [section.sub] tables, `key = value`
// lines, `#` comments. Values are integers, floats, booleans, quoted
// strings, or [lists]. Errors carry file:line positions.
class Config {
public:
    using Value = std::variant<int64_t, double, bool, std::string, std::vector<std::string>>;

    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& name = "<string>");

    bool has(const std::string& section, const std::string& key) const;
    int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
    std::string require_string(const std::string& section, const std::string& key) const;

private:
    const Value* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void missing(const std::string& section, const std::string& key) const;

    std::string name_;
    std::map<std::string, std::map<std::string, Value>> sections_;
    std::map<std::string, int> lines_;  // "section.key" -> line, for diagnostics
};

// Fully resolved scenario: seeded, self-contained description of one run.
struct Scenario {
    std::string name = "scenario";
    uint64_t seed = 1;

    struct Vehicle {
        std::string plate;
        uint32_t salt = 0;
    };
    Vehicle lead{"LEAD42", 0x12345678};
    Vehicle follow{"FOLW77", 0xA1B2C3D4};

    CameraConfig camera;
    VehicleGeometry geometry;
    PoseNoise pose_noise;
    int frames_per_slot = 1;
    double phase = 0.5;  // transition offset within a frame period

    TransducerConfig transducer;

    ChainParams chain;
    std::string ca_name = "RootCA";
    std::vector<std::string> accepted_cas{"RootCA"};
    FeeSchedule fees;

    Timeouts timeouts;
    ScryptParams scrypt;

    // Fault injections.
    int tamper_block = -1;          // flip a byte inside this block of the sync source
    bool tamper_entry = false;      // mutate a revealed entry and re-mine its block
    int flip_payload_bit = -1;      // bit 0..159 of one acoustic payload
    std::string flip_direction = "follow_to_lead";
    std::string occlude_plate = "none";   // none | lead | follow
    std::string impersonation = "none";   // none | forged_cert | replay
    bool rf_jam = false;                  // documented no-op: no RF in the model

    std::string expect_outcome = "confirmed";

    static Scenario from_config(const Config& config, const std::string& name);
    static Scenario load(const std::string& path);
};

}  // namespace sidelink
