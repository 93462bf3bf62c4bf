#pragma once

#include <stdexcept>
#include <string>

namespace sidelink {

// Failure kinds surfaced across the library. Each maps to one named error
// condition of the module contracts; the CLI prints the symbolic name.
enum class Errc {
    odd_length,
    missing_mid_transition,
    degenerate_input,
    config_error,
    plate_not_visible,
    empty_region,
    decode_failure,
    salt_size,
    duplicate_commit,
    no_commit,
    commit_too_recent,
    hash_mismatch,
    chain_verification,
    not_found,
    collision,
    cert_invalid,
    ca_not_accepted,
    timeout,
    tag_mismatch,
    degenerate_secret,
};

const char* errc_name(Errc kind);

class Error : public std::runtime_error {
public:
    Error(Errc kind, const std::string& msg)
        : std::runtime_error(std::string(errc_name(kind)) + ": " + msg), kind_(kind) {}

    Errc kind() const noexcept { return kind_; }

private:
    Errc kind_;
};

[[noreturn]] inline void fail(Errc kind, const std::string& msg) { throw Error(kind, msg); }

inline const char* errc_name(Errc kind) {
    switch (kind) {
        case Errc::odd_length: return "OddLengthError";
        case Errc::missing_mid_transition: return "MissingMidTransition";
        case Errc::degenerate_input: return "DegenerateInput";
        case Errc::config_error: return "ConfigError";
        case Errc::plate_not_visible: return "PlateNotVisible";
        case Errc::empty_region: return "EmptyRegion";
        case Errc::decode_failure: return "DecodeFailure";
        case Errc::salt_size: return "SaltSizeError";
        case Errc::duplicate_commit: return "DuplicateCommit";
        case Errc::no_commit: return "NoCommit";
        case Errc::commit_too_recent: return "CommitTooRecent";
        case Errc::hash_mismatch: return "HashMismatch";
        case Errc::chain_verification: return "ChainVerificationError";
        case Errc::not_found: return "NotFound";
        case Errc::collision: return "CollisionError";
        case Errc::cert_invalid: return "CertInvalid";
        case Errc::ca_not_accepted: return "CANotAccepted";
        case Errc::timeout: return "Timeout";
        case Errc::tag_mismatch: return "TagMismatch";
        case Errc::degenerate_secret: return "DegenerateSecret";
    }
    return "UnknownError";
}

}  // namespace sidelink
