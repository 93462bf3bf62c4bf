#include "sidelink/scenario.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "sidelink/error.hpp"

namespace sidelink {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool looks_like_int(const std::string& s) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (s.size() > i + 1 && s[i] == '0' && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
        for (size_t j = i + 2; j < s.size(); ++j) {
            if (!std::isxdigit(static_cast<unsigned char>(s[j]))) return false;
        }
        return s.size() > i + 2;
    }
    for (size_t j = i; j < s.size(); ++j) {
        if (!std::isdigit(static_cast<unsigned char>(s[j]))) return false;
    }
    return s.size() > i;
}

bool looks_like_float(const std::string& s) {
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end && *end == '\0' && end != s.c_str();
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::config_error, "cannot open scenario file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& name) {
    Config config;
    config.name_ = name;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    auto error_at = [&](const std::string& msg) -> void {
        fail(Errc::config_error, name + ":" + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            // Keep # inside quoted strings.
            bool in_quote = false;
            size_t cut = std::string::npos;
            for (size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '"') in_quote = !in_quote;
                if (line[i] == '#' && !in_quote) {
                    cut = i;
                    break;
                }
            }
            if (cut != std::string::npos) line = line.substr(0, cut);
        }
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') error_at("unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty()) error_at("empty section name");
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) error_at("expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string raw = trim(t.substr(eq + 1));
        if (key.empty()) error_at("empty key");
        if (raw.empty()) error_at("empty value for key '" + key + "'");

        Value value;
        if (raw.front() == '"') {
            if (raw.size() < 2 || raw.back() != '"') error_at("unterminated string");
            value = raw.substr(1, raw.size() - 2);
        } else if (raw.front() == '[') {
            if (raw.back() != ']') error_at("unterminated list");
            std::vector<std::string> items;
            std::string inner = raw.substr(1, raw.size() - 2);
            std::string item;
            std::istringstream iss(inner);
            while (std::getline(iss, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                if (item.front() == '"' && item.back() == '"' && item.size() >= 2) {
                    item = item.substr(1, item.size() - 2);
                }
                items.push_back(item);
            }
            value = items;
        } else if (raw == "true" || raw == "false") {
            value = (raw == "true");
        } else if (looks_like_int(raw)) {
            value = static_cast<int64_t>(std::stoll(raw, nullptr, 0));
        } else if (looks_like_float(raw)) {
            value = std::stod(raw);
        } else {
            error_at("cannot parse value '" + raw + "'");
        }
        config.sections_[section][key] = std::move(value);
        config.lines_[section + "." + key] = lineno;
    }
    return config;
}

const Config::Value* Config::find(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    if (sit == sections_.end()) return nullptr;
    auto kit = sit->second.find(key);
    if (kit == sit->second.end()) return nullptr;
    return &kit->second;
}

void Config::missing(const std::string& section, const std::string& key) const {
    fail(Errc::config_error, name_ + ": missing required key [" + section + "] " + key);
}

bool Config::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

int64_t Config::get_int(const std::string& section, const std::string& key,
                        int64_t fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (auto i = std::get_if<int64_t>(v)) return *i;
    fail(Errc::config_error, name_ + ":" + std::to_string(lines_.at(section + "." + key)) +
                                 ": [" + section + "] " + key + " must be an integer");
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (auto d = std::get_if<double>(v)) return *d;
    if (auto i = std::get_if<int64_t>(v)) return static_cast<double>(*i);
    fail(Errc::config_error, name_ + ":" + std::to_string(lines_.at(section + "." + key)) +
                                 ": [" + section + "] " + key + " must be a number");
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (auto b = std::get_if<bool>(v)) return *b;
    fail(Errc::config_error, name_ + ":" + std::to_string(lines_.at(section + "." + key)) +
                                 ": [" + section + "] " + key + " must be true or false");
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    const Value* v = find(section, key);
    if (!v) return fallback;
    if (auto s = std::get_if<std::string>(v)) return *s;
    fail(Errc::config_error, name_ + ":" + std::to_string(lines_.at(section + "." + key)) +
                                 ": [" + section + "] " + key + " must be a string");
}

std::vector<std::string> Config::get_list(const std::string& section,
                                          const std::string& key) const {
    const Value* v = find(section, key);
    if (!v) return {};
    if (auto l = std::get_if<std::vector<std::string>>(v)) return *l;
    if (auto s = std::get_if<std::string>(v)) return {*s};
    fail(Errc::config_error, name_ + ":" + std::to_string(lines_.at(section + "." + key)) +
                                 ": [" + section + "] " + key + " must be a list");
}

std::string Config::require_string(const std::string& section, const std::string& key) const {
    if (!has(section, key)) missing(section, key);
    return get_string(section, key, "");
}

Scenario Scenario::from_config(const Config& config, const std::string& name) {
    Scenario sc;
    sc.name = name;
    sc.seed = static_cast<uint64_t>(config.get_int("", "seed", 1));

    sc.lead.plate = config.get_string("vehicle.lead", "plate", sc.lead.plate);
    sc.lead.salt = static_cast<uint32_t>(config.get_int("vehicle.lead", "salt", sc.lead.salt));
    sc.follow.plate = config.get_string("vehicle.follow", "plate", sc.follow.plate);
    sc.follow.salt =
        static_cast<uint32_t>(config.get_int("vehicle.follow", "salt", sc.follow.salt));

    sc.camera.frame_rate = config.get_double("camera", "fps", sc.camera.frame_rate);
    sc.camera.exposure = config.get_double("camera", "exposure", sc.camera.exposure);
    sc.camera.levels = static_cast<int>(config.get_int("camera", "levels", sc.camera.levels));
    sc.camera.lookahead =
        static_cast<int>(config.get_int("camera", "lookahead", sc.camera.lookahead));
    sc.camera.downsample =
        static_cast<int>(config.get_int("camera", "downsample", sc.camera.downsample));
    sc.camera.noise_sigma = config.get_double("camera", "noise_sigma", sc.camera.noise_sigma);
    sc.camera.width = static_cast<int>(config.get_int("camera", "width", sc.camera.width));
    sc.camera.height = static_cast<int>(config.get_int("camera", "height", sc.camera.height));
    sc.frames_per_slot =
        static_cast<int>(config.get_int("camera", "frames_per_slot", sc.frames_per_slot));
    sc.phase = config.get_double("camera", "phase", sc.phase);
    sc.pose_noise.sigma_xy = config.get_double("camera", "pose_sigma_xy", 0.0);

    sc.transducer.modulation_period =
        config.get_double("transducer", "modulation_period", sc.transducer.modulation_period);
    sc.transducer.sample_rate =
        config.get_double("transducer", "sample_rate", sc.transducer.sample_rate);
    sc.transducer.angle_deg = config.get_double("transducer", "angle_deg", 0.0);
    sc.transducer.distance_m = config.get_double("transducer", "distance_m", 1.0);
    sc.transducer.edge_jitter_s = config.get_double("transducer", "edge_jitter_s", 0.0);

    sc.chain.initial_difficulty_bits =
        static_cast<uint32_t>(config.get_int("pki", "difficulty", 12));
    sc.chain.reveal_delay = static_cast<uint32_t>(config.get_int("pki", "reveal_delay", 6));
    sc.chain.retarget_window =
        static_cast<uint32_t>(config.get_int("pki", "retarget_window", 10));
    sc.ca_name = config.get_string("pki", "ca", sc.ca_name);
    auto accepted = config.get_list("pki", "accepted_cas");
    if (!accepted.empty()) sc.accepted_cas = accepted;
    sc.fees = FeeSchedule::from_usd(config.get_string("pki", "fee", "0.09"));

    sc.timeouts.acoustic_s = config.get_double("handshake", "acoustic_timeout", 10.0);
    sc.timeouts.visual_s = config.get_double("handshake", "visual_timeout", 5.0);
    sc.scrypt.n = static_cast<uint64_t>(config.get_int("handshake", "scrypt_n", 1 << 14));

    sc.tamper_block = static_cast<int>(config.get_int("faults", "tamper_block", -1));
    sc.tamper_entry = config.get_bool("faults", "tamper_entry", false);
    sc.flip_payload_bit = static_cast<int>(config.get_int("faults", "flip_payload_bit", -1));
    sc.flip_direction = config.get_string("faults", "flip_direction", sc.flip_direction);
    sc.occlude_plate = config.get_string("faults", "occlude_plate", "none");
    sc.impersonation = config.get_string("faults", "impersonation", "none");
    sc.rf_jam = config.get_bool("faults", "rf_jam", false);

    sc.expect_outcome = config.get_string("expect", "outcome", "confirmed");

    if (sc.flip_direction != "follow_to_lead" && sc.flip_direction != "lead_to_follow") {
        fail(Errc::config_error, name + ": flip_direction must be follow_to_lead or lead_to_follow");
    }
    if (sc.occlude_plate != "none" && sc.occlude_plate != "lead" && sc.occlude_plate != "follow") {
        fail(Errc::config_error, name + ": occlude_plate must be none, lead or follow");
    }
    if (sc.impersonation != "none" && sc.impersonation != "forged_cert" &&
        sc.impersonation != "replay") {
        fail(Errc::config_error, name + ": impersonation must be none, forged_cert or replay");
    }
    return sc;
}

Scenario Scenario::load(const std::string& path) {
    auto slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    auto dot = base.find_last_of('.');
    if (dot != std::string::npos) base = base.substr(0, dot);
    return from_config(Config::parse_file(path), base);
}

}  // namespace sidelink
