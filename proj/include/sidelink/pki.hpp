#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sidelink/bits.hpp"
#include "sidelink/crypto.hpp"

namespace sidelink {

// Prim = SHA-256(license plate bytes || big-endian 32-bit identity salt).
crypto::Bytes32 compute_primary_key(std::string_view plate, const BitString& salt);
crypto::Bytes32 compute_primary_key(std::string_view plate, uint32_t salt);

// Certificate binding a primary key to a Curve25519 public key, signed by a
// certificate authority. Minimal length-prefixed binary layout; kept far
// below the 8 kB entry cap.
struct Certificate {
    crypto::Bytes32 subject_prim{};
    crypto::Bytes32 subject_pub{};
    std::string issuer;
    crypto::Bytes64 signature{};

    std::vector<uint8_t> signed_payload() const;
    std::vector<uint8_t> serialize() const;
    static Certificate deserialize(std::span<const uint8_t> bytes);
};

inline constexpr size_t kMaxEntryBytes = 8192;

struct DhtEntry {
    crypto::Bytes32 primary_key{};
    crypto::Bytes32 public_key{};
    Certificate certificate;

    std::vector<uint8_t> serialize() const;
    static DhtEntry deserialize(std::span<const uint8_t> bytes);
    crypto::Bytes32 hash() const;
};

struct Transaction {
    enum Kind : uint8_t { kCommit = 1, kReveal = 2 };
    Kind kind = kCommit;
    std::vector<uint8_t> body;  // commit: 32-byte entry hash; reveal: entry bytes

    crypto::Bytes32 hash() const;
    std::vector<uint8_t> serialize() const;
    static Transaction deserialize(std::span<const uint8_t> bytes);

    static Transaction make_commit(const crypto::Bytes32& entry_hash);
    static Transaction make_reveal(const DhtEntry& entry);
};

struct Block {
    uint64_t height = 0;
    crypto::Bytes32 prev_hash{};
    uint32_t difficulty_bits = 0;
    uint64_t timestamp_ms = 0;
    uint64_t nonce = 0;
    std::vector<Transaction> txs;

    crypto::Bytes32 header_hash() const;
    std::vector<uint8_t> serialize() const;
    static Block deserialize(std::span<const uint8_t> bytes);
};

// USD amounts handled in integer cents so attack-economics output is exact.
struct FeeSchedule {
    uint64_t insertion_fee_cents = 9;

    static FeeSchedule from_usd(const std::string& usd);
    std::string fee_usd() const;
};

// Grouped decimal rendering of an exact cent amount, e.g. "386,547,056.64".
std::string usd_string(uint64_t cents);

// fee * 2^salt_bits, formatted as a grouped decimal USD amount.
std::string brick_attack_cost(unsigned salt_bits, const FeeSchedule& fee);

struct ChainParams {
    uint32_t initial_difficulty_bits = 12;
    uint32_t retarget_window = 10;
    double target_spacing_s = 1.0;
    uint32_t reveal_delay = 6;  // D, blocks between commit and reveal
};

// Local single-process proof-of-work chain with commit/reveal name
// insertion. Difficulty retargets every `retarget_window` blocks toward the
// target spacing; the schedule is recomputable by any verifier.
class Chain {
public:
    explicit Chain(ChainParams params = {});

    const ChainParams& params() const { return params_; }
    const std::vector<Block>& blocks() const { return blocks_; }
    uint64_t height() const { return blocks_.size(); }

    void submit(Transaction tx);
    const Block& mine_block(double now_s);
    uint32_t next_difficulty() const;

    // Full structural verification: linkage, proof of work, difficulty
    // schedule. Throws ChainVerificationError.
    void verify() const;

    // Height of the block containing a commit for this hash, if any.
    std::optional<uint64_t> find_commit(const crypto::Bytes32& entry_hash) const;
    bool has_commit(const crypto::Bytes32& entry_hash) const;

    std::vector<uint8_t> serialize() const;
    static Chain deserialize(std::span<const uint8_t> bytes, ChainParams params = {});
    // Assemble from raw blocks without verification (attacker tooling).
    static Chain from_blocks(std::vector<Block> blocks, ChainParams params = {});

    // Store file carries the chain parameters alongside the block records.
    void save(const std::string& path) const;
    static Chain load(const std::string& path);

private:
    ChainParams params_;
    std::vector<Block> blocks_;
    std::vector<Transaction> mempool_;
};

struct CommitTicket {
    crypto::Bytes32 entry_hash{};
    uint64_t height = 0;
};

struct DroppedEntry {
    DhtEntry entry;
    std::string reason;
};

// Verified local copy of the distributed hash table.
struct Dht {
    std::map<crypto::Bytes32, DhtEntry> entries;
    std::vector<DroppedEntry> dropped;

    std::optional<DhtEntry> find(const crypto::Bytes32& primary_key) const;
    DhtEntry lookup(const crypto::Bytes32& primary_key) const;  // throws NotFound
};

// Rebuild a verified DHT copy from an untrusted chain: chain structure must
// verify, every admitted entry needs a commit at depth >= D and a
// certificate from an accepted issuer. Everything else is dropped and
// reported. Signatures are re-checked at resolve time by the handshake.
Dht filtered_sync(const Chain& source, const std::set<std::string>& accepted_cas);

// Well-known certificate authority with a deterministic keypair.
class CertificateAuthority {
public:
    CertificateAuthority(std::string id, uint64_t key_seed);
    static CertificateAuthority from_name(const std::string& id);  // seed from name

    const std::string& id() const { return id_; }
    const crypto::Bytes32& verify_key() const { return keys_.pub; }

    // Signs the (prim, pub) binding; CollisionError if this authority
    // already registered the primary key.
    Certificate issue(std::string_view plate, const BitString& salt,
                      const crypto::Bytes32& public_key);

private:
    std::string id_;
    crypto::Ed25519KeyPair keys_;
    std::set<crypto::Bytes32> issued_;
};

// Out-of-band directory of accepted CA verification keys.
using CaDirectory = std::map<std::string, crypto::Bytes32>;

bool verify_certificate(const Certificate& cert, const CaDirectory& directory);

// Single authoritative node: chain plus fee accounting; commit/reveal with
// ticket attribution so tampering is distinguishable from a missing commit.
class PkiNode {
public:
    explicit PkiNode(ChainParams params = {}, FeeSchedule fees = {});
    PkiNode(Chain chain, FeeSchedule fees);

    CommitTicket commit(const DhtEntry& entry, double now_s);  // DuplicateCommit
    // NoCommit / CommitTooRecent / HashMismatch
    void reveal(const DhtEntry& entry, const CommitTicket& ticket, double now_s);
    void mine_filler(double now_s) { chain_.mine_block(now_s); }

    // Commit, mine D blocks, reveal, mine. One insertion fee.
    void register_entry(const DhtEntry& entry, double now_s);

    Chain& chain() { return chain_; }
    const Chain& chain() const { return chain_; }
    uint64_t fees_paid_cents() const { return fees_paid_cents_; }
    const FeeSchedule& fees() const { return fees_; }

private:
    Chain chain_;
    FeeSchedule fees_;
    uint64_t fees_paid_cents_ = 0;
};

}  // namespace sidelink
