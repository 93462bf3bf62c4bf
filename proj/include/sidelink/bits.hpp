#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sidelink/rng.hpp"

namespace sidelink {

// Ordered sequence of binary digits. Serialized as hexadecimal with the
// most significant bit first; all wire payloads here are nibble-aligned.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::vector<uint8_t> bits);

    static BitString from_hex(std::string_view hex);
    static BitString from_uint(uint64_t value, size_t nbits);
    static BitString from_bytes(std::span<const uint8_t> bytes);
    static BitString random(Rng& rng, size_t nbits);

    std::string to_hex() const;               // requires size() % 4 == 0
    std::vector<uint8_t> to_bytes() const;    // requires size() % 8 == 0
    uint64_t to_uint() const;                 // requires size() <= 64

    size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }
    uint8_t operator[](size_t i) const { return bits_[i]; }
    uint8_t& operator[](size_t i) { return bits_[i]; }

    void push_back(uint8_t bit) { bits_.push_back(bit & 1); }
    void append(const BitString& other);
    BitString slice(size_t from, size_t len) const;
    void flip(size_t i) { bits_[i] ^= 1; }

    const std::vector<uint8_t>& raw() const { return bits_; }

    bool operator==(const BitString&) const = default;

    auto begin() const { return bits_.begin(); }
    auto end() const { return bits_.end(); }

private:
    std::vector<uint8_t> bits_;
};

std::string hex_encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> hex_decode(std::string_view hex);

}  // namespace sidelink
