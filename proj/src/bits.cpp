#include "sidelink/bits.hpp"

#include <stdexcept>

#include "sidelink/error.hpp"

namespace sidelink {

namespace {

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

BitString::BitString(std::vector<uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) b &= 1;
}

BitString BitString::from_hex(std::string_view hex) {
    BitString out;
    out.bits_.reserve(hex.size() * 4);
    for (char c : hex) {
        int v = hex_digit(c);
        if (v < 0) fail(Errc::config_error, "invalid hex digit in bit string");
        for (int b = 3; b >= 0; --b) out.bits_.push_back(static_cast<uint8_t>((v >> b) & 1));
    }
    return out;
}

BitString BitString::from_uint(uint64_t value, size_t nbits) {
    BitString out;
    out.bits_.reserve(nbits);
    for (size_t i = 0; i < nbits; ++i) {
        out.bits_.push_back(static_cast<uint8_t>((value >> (nbits - 1 - i)) & 1));
    }
    return out;
}

BitString BitString::from_bytes(std::span<const uint8_t> bytes) {
    BitString out;
    out.bits_.reserve(bytes.size() * 8);
    for (uint8_t byte : bytes) {
        for (int b = 7; b >= 0; --b) out.bits_.push_back(static_cast<uint8_t>((byte >> b) & 1));
    }
    return out;
}

BitString BitString::random(Rng& rng, size_t nbits) {
    BitString out;
    out.bits_.reserve(nbits);
    for (size_t i = 0; i < nbits; ++i) out.bits_.push_back(static_cast<uint8_t>(rng.next_u64() & 1));
    return out;
}

std::string BitString::to_hex() const {
    if (bits_.size() % 4 != 0) fail(Errc::config_error, "bit string not nibble aligned");
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bits_.size() / 4);
    for (size_t i = 0; i < bits_.size(); i += 4) {
        int v = (bits_[i] << 3) | (bits_[i + 1] << 2) | (bits_[i + 2] << 1) | bits_[i + 3];
        out.push_back(digits[v]);
    }
    return out;
}

std::vector<uint8_t> BitString::to_bytes() const {
    if (bits_.size() % 8 != 0) fail(Errc::config_error, "bit string not byte aligned");
    std::vector<uint8_t> out(bits_.size() / 8, 0);
    for (size_t i = 0; i < bits_.size(); ++i) {
        out[i / 8] = static_cast<uint8_t>((out[i / 8] << 1) | bits_[i]);
    }
    return out;
}

uint64_t BitString::to_uint() const {
    if (bits_.size() > 64) fail(Errc::config_error, "bit string wider than 64 bits");
    uint64_t v = 0;
    for (uint8_t b : bits_) v = (v << 1) | b;
    return v;
}

void BitString::append(const BitString& other) {
    bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
}

BitString BitString::slice(size_t from, size_t len) const {
    if (from + len > bits_.size()) throw std::out_of_range("BitString::slice");
    BitString out;
    out.bits_.assign(bits_.begin() + from, bits_.begin() + from + len);
    return out;
}

std::string hex_encode(std::span<const uint8_t> bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

std::vector<uint8_t> hex_decode(std::string_view hex) {
    if (hex.size() % 2 != 0) fail(Errc::config_error, "odd-length hex string");
    std::vector<uint8_t> out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) {
        int hi = hex_digit(hex[2 * i]);
        int lo = hex_digit(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) fail(Errc::config_error, "invalid hex digit");
        out[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return out;
}

}  // namespace sidelink
