#include "sidelink/pki.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "sidelink/error.hpp"

namespace sidelink {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

struct Reader {
    std::span<const uint8_t> data;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > data.size()) fail(Errc::config_error, "truncated record");
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>((data[pos] << 8) | data[pos + 1]);
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | data[pos + i];
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = (v << 8) | data[pos + i];
        pos += 8;
        return v;
    }
    std::span<const uint8_t> bytes(size_t n) {
        need(n);
        auto s = data.subspan(pos, n);
        pos += n;
        return s;
    }
};

int leading_zero_bits(const crypto::Bytes32& hash) {
    int bits = 0;
    for (uint8_t byte : hash) {
        if (byte == 0) {
            bits += 8;
            continue;
        }
        for (int b = 7; b >= 0; --b) {
            if (byte & (1u << b)) return bits;
            ++bits;
        }
    }
    return bits;
}

}  // namespace

crypto::Bytes32 compute_primary_key(std::string_view plate, const BitString& salt) {
    if (plate.empty()) fail(Errc::config_error, "empty license plate value");
    if (salt.size() != 32) {
        fail(Errc::salt_size,
             "identity salt must be exactly 32 bits, got " + std::to_string(salt.size()));
    }
    std::vector<uint8_t> buf(plate.begin(), plate.end());
    auto salt_bytes = salt.to_bytes();
    buf.insert(buf.end(), salt_bytes.begin(), salt_bytes.end());
    return crypto::sha256(buf);
}

crypto::Bytes32 compute_primary_key(std::string_view plate, uint32_t salt) {
    return compute_primary_key(plate, BitString::from_uint(salt, 32));
}

std::vector<uint8_t> Certificate::signed_payload() const {
    std::vector<uint8_t> out;
    out.insert(out.end(), subject_prim.begin(), subject_prim.end());
    out.insert(out.end(), subject_pub.begin(), subject_pub.end());
    out.insert(out.end(), issuer.begin(), issuer.end());
    return out;
}

std::vector<uint8_t> Certificate::serialize() const {
    std::vector<uint8_t> out;
    put_u16(out, 32);
    out.insert(out.end(), subject_prim.begin(), subject_prim.end());
    put_u16(out, 32);
    out.insert(out.end(), subject_pub.begin(), subject_pub.end());
    put_u16(out, static_cast<uint16_t>(issuer.size()));
    out.insert(out.end(), issuer.begin(), issuer.end());
    put_u16(out, 64);
    out.insert(out.end(), signature.begin(), signature.end());
    return out;
}

Certificate Certificate::deserialize(std::span<const uint8_t> bytes) {
    Reader r{bytes};
    Certificate cert;
    if (r.u16() != 32) fail(Errc::config_error, "bad primary key length");
    auto prim = r.bytes(32);
    std::copy(prim.begin(), prim.end(), cert.subject_prim.begin());
    if (r.u16() != 32) fail(Errc::config_error, "bad public key length");
    auto pub = r.bytes(32);
    std::copy(pub.begin(), pub.end(), cert.subject_pub.begin());
    uint16_t issuer_len = r.u16();
    auto issuer = r.bytes(issuer_len);
    cert.issuer.assign(issuer.begin(), issuer.end());
    if (r.u16() != 64) fail(Errc::config_error, "bad signature length");
    auto sig = r.bytes(64);
    std::copy(sig.begin(), sig.end(), cert.signature.begin());
    return cert;
}

std::vector<uint8_t> DhtEntry::serialize() const {
    std::vector<uint8_t> out;
    out.insert(out.end(), primary_key.begin(), primary_key.end());
    out.insert(out.end(), public_key.begin(), public_key.end());
    auto cert = certificate.serialize();
    put_u16(out, static_cast<uint16_t>(cert.size()));
    out.insert(out.end(), cert.begin(), cert.end());
    if (out.size() > kMaxEntryBytes) fail(Errc::config_error, "entry exceeds 8 kB cap");
    return out;
}

DhtEntry DhtEntry::deserialize(std::span<const uint8_t> bytes) {
    if (bytes.size() > kMaxEntryBytes) fail(Errc::config_error, "entry exceeds 8 kB cap");
    Reader r{bytes};
    DhtEntry entry;
    auto prim = r.bytes(32);
    std::copy(prim.begin(), prim.end(), entry.primary_key.begin());
    auto pub = r.bytes(32);
    std::copy(pub.begin(), pub.end(), entry.public_key.begin());
    uint16_t cert_len = r.u16();
    entry.certificate = Certificate::deserialize(r.bytes(cert_len));
    return entry;
}

crypto::Bytes32 DhtEntry::hash() const { return crypto::sha256(serialize()); }

Transaction Transaction::make_commit(const crypto::Bytes32& entry_hash) {
    Transaction tx;
    tx.kind = kCommit;
    tx.body.assign(entry_hash.begin(), entry_hash.end());
    return tx;
}

Transaction Transaction::make_reveal(const DhtEntry& entry) {
    Transaction tx;
    tx.kind = kReveal;
    tx.body = entry.serialize();
    return tx;
}

crypto::Bytes32 Transaction::hash() const {
    std::vector<uint8_t> buf;
    buf.push_back(static_cast<uint8_t>(kind));
    buf.insert(buf.end(), body.begin(), body.end());
    return crypto::sha256(buf);
}

std::vector<uint8_t> Transaction::serialize() const {
    std::vector<uint8_t> out;
    out.push_back(static_cast<uint8_t>(kind));
    put_u32(out, static_cast<uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

Transaction Transaction::deserialize(std::span<const uint8_t> bytes) {
    Reader r{bytes};
    Transaction tx;
    auto kind = r.bytes(1);
    if (kind[0] != kCommit && kind[0] != kReveal) fail(Errc::config_error, "bad tx kind");
    tx.kind = static_cast<Kind>(kind[0]);
    uint32_t len = r.u32();
    auto body = r.bytes(len);
    tx.body.assign(body.begin(), body.end());
    return tx;
}

crypto::Bytes32 Block::header_hash() const {
    std::vector<uint8_t> buf;
    put_u64(buf, height);
    buf.insert(buf.end(), prev_hash.begin(), prev_hash.end());
    put_u32(buf, difficulty_bits);
    put_u64(buf, timestamp_ms);
    put_u64(buf, nonce);
    put_u32(buf, static_cast<uint32_t>(txs.size()));
    for (const auto& tx : txs) {
        auto h = tx.hash();
        buf.insert(buf.end(), h.begin(), h.end());
    }
    return crypto::sha256(buf);
}

std::vector<uint8_t> Block::serialize() const {
    std::vector<uint8_t> out;
    put_u64(out, height);
    out.insert(out.end(), prev_hash.begin(), prev_hash.end());
    put_u32(out, difficulty_bits);
    put_u64(out, timestamp_ms);
    put_u64(out, nonce);
    put_u32(out, static_cast<uint32_t>(txs.size()));
    for (const auto& tx : txs) {
        auto bytes = tx.serialize();
        put_u32(out, static_cast<uint32_t>(bytes.size()));
        out.insert(out.end(), bytes.begin(), bytes.end());
    }
    return out;
}

Block Block::deserialize(std::span<const uint8_t> bytes) {
    Reader r{bytes};
    Block block;
    block.height = r.u64();
    auto prev = r.bytes(32);
    std::copy(prev.begin(), prev.end(), block.prev_hash.begin());
    block.difficulty_bits = r.u32();
    block.timestamp_ms = r.u64();
    block.nonce = r.u64();
    uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t len = r.u32();
        block.txs.push_back(Transaction::deserialize(r.bytes(len)));
    }
    return block;
}

FeeSchedule FeeSchedule::from_usd(const std::string& usd) {
    // Parse a decimal USD amount exactly, at cent resolution.
    auto dot = usd.find('.');
    std::string whole = dot == std::string::npos ? usd : usd.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : usd.substr(dot + 1);
    if (frac.size() > 2) fail(Errc::config_error, "fee has sub-cent precision: " + usd);
    while (frac.size() < 2) frac.push_back('0');
    if (whole.empty()) whole = "0";
    for (char c : whole + frac) {
        if (c < '0' || c > '9') fail(Errc::config_error, "invalid fee amount: " + usd);
    }
    FeeSchedule fees;
    fees.insertion_fee_cents = std::stoull(whole) * 100 + std::stoull(frac);
    if (fees.insertion_fee_cents == 0) fail(Errc::config_error, "fee must be positive");
    return fees;
}

namespace {

std::string format_cents(unsigned __int128 cents) {
    unsigned __int128 whole = cents / 100;
    auto frac = static_cast<unsigned>(cents % 100);
    std::string digits;
    if (whole == 0) digits = "0";
    while (whole > 0) {
        digits.push_back(static_cast<char>('0' + static_cast<unsigned>(whole % 10)));
        whole /= 10;
    }
    std::reverse(digits.begin(), digits.end());
    std::string grouped;
    for (size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) grouped.push_back(',');
        grouped.push_back(digits[i]);
    }
    char tail[8];
    std::snprintf(tail, sizeof(tail), ".%02u", frac);
    return grouped + tail;
}

}  // namespace

std::string FeeSchedule::fee_usd() const { return format_cents(insertion_fee_cents); }

std::string usd_string(uint64_t cents) { return format_cents(cents); }

std::string brick_attack_cost(unsigned salt_bits, const FeeSchedule& fee) {
    if (salt_bits > 80) fail(Errc::config_error, "salt width out of supported range");
    unsigned __int128 combos = static_cast<unsigned __int128>(1) << salt_bits;
    return format_cents(combos * fee.insertion_fee_cents);
}

Chain::Chain(ChainParams params) : params_(params) {
    if (params_.retarget_window < 2) fail(Errc::config_error, "retarget window too small");
}

void Chain::submit(Transaction tx) { mempool_.push_back(std::move(tx)); }

uint32_t Chain::next_difficulty() const {
    const uint32_t n = params_.retarget_window;
    uint32_t difficulty = params_.initial_difficulty_bits;
    // Replay the retarget schedule; it only depends on block timestamps.
    for (uint64_t h = n; h <= blocks_.size(); h += n) {
        double span_s =
            (blocks_[h - 1].timestamp_ms - blocks_[h - n].timestamp_ms) / 1000.0;
        double target_s = params_.target_spacing_s * (n - 1);
        if (span_s < target_s / 2.0) {
            difficulty += 1;
        } else if (span_s > target_s * 2.0 && difficulty > 1) {
            difficulty -= 1;
        }
    }
    return difficulty;
}

const Block& Chain::mine_block(double now_s) {
    Block block;
    block.height = blocks_.size();
    block.prev_hash = blocks_.empty() ? crypto::Bytes32{} : blocks_.back().header_hash();
    block.difficulty_bits = next_difficulty();
    block.timestamp_ms = static_cast<uint64_t>(now_s * 1000.0);
    block.txs = std::move(mempool_);
    mempool_.clear();
    block.nonce = 0;
    while (leading_zero_bits(block.header_hash()) < static_cast<int>(block.difficulty_bits)) {
        ++block.nonce;
    }
    blocks_.push_back(std::move(block));
    return blocks_.back();
}

void Chain::verify() const {
    crypto::Bytes32 prev{};
    uint32_t difficulty = params_.initial_difficulty_bits;
    const uint32_t n = params_.retarget_window;
    for (size_t h = 0; h < blocks_.size(); ++h) {
        const Block& block = blocks_[h];
        if (h >= n && h % n == 0) {
            double span_s =
                (blocks_[h - 1].timestamp_ms - blocks_[h - n].timestamp_ms) / 1000.0;
            double target_s = params_.target_spacing_s * (n - 1);
            if (span_s < target_s / 2.0) {
                difficulty += 1;
            } else if (span_s > target_s * 2.0 && difficulty > 1) {
                difficulty -= 1;
            }
        }
        if (block.height != h) {
            fail(Errc::chain_verification, "block height out of order at " + std::to_string(h));
        }
        if (block.prev_hash != prev) {
            fail(Errc::chain_verification, "broken hash linkage at height " + std::to_string(h));
        }
        if (block.difficulty_bits != difficulty) {
            fail(Errc::chain_verification,
                 "difficulty schedule violation at height " + std::to_string(h));
        }
        crypto::Bytes32 hash = block.header_hash();
        if (leading_zero_bits(hash) < static_cast<int>(block.difficulty_bits)) {
            fail(Errc::chain_verification,
                 "proof of work not met at height " + std::to_string(h));
        }
        prev = hash;
    }
}

std::optional<uint64_t> Chain::find_commit(const crypto::Bytes32& entry_hash) const {
    for (const Block& block : blocks_) {
        for (const Transaction& tx : block.txs) {
            if (tx.kind == Transaction::kCommit && tx.body.size() == 32 &&
                std::equal(tx.body.begin(), tx.body.end(), entry_hash.begin())) {
                return block.height;
            }
        }
    }
    return std::nullopt;
}

bool Chain::has_commit(const crypto::Bytes32& entry_hash) const {
    if (find_commit(entry_hash)) return true;
    for (const Transaction& tx : mempool_) {
        if (tx.kind == Transaction::kCommit && tx.body.size() == 32 &&
            std::equal(tx.body.begin(), tx.body.end(), entry_hash.begin())) {
            return true;
        }
    }
    return false;
}

std::vector<uint8_t> Chain::serialize() const {
    std::vector<uint8_t> out;
    for (const Block& block : blocks_) {
        auto bytes = block.serialize();
        out.push_back(1);  // record type: block
        put_u32(out, static_cast<uint32_t>(bytes.size()));
        out.insert(out.end(), bytes.begin(), bytes.end());
    }
    return out;
}

Chain Chain::deserialize(std::span<const uint8_t> bytes, ChainParams params) {
    Chain chain(params);
    Reader r{bytes};
    while (r.pos < bytes.size()) {
        auto type = r.bytes(1);
        if (type[0] != 1) fail(Errc::config_error, "unknown store record type");
        uint32_t len = r.u32();
        chain.blocks_.push_back(Block::deserialize(r.bytes(len)));
    }
    return chain;
}

Chain Chain::from_blocks(std::vector<Block> blocks, ChainParams params) {
    Chain chain(params);
    chain.blocks_ = std::move(blocks);
    return chain;
}

void Chain::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::config_error, "cannot write store file " + path);
    // Store file = params header record (type 2) + append-only block records.
    std::vector<uint8_t> header;
    header.push_back(2);
    put_u32(header, 20);
    put_u32(header, params_.initial_difficulty_bits);
    put_u32(header, params_.retarget_window);
    put_u64(header, static_cast<uint64_t>(params_.target_spacing_s * 1000.0));
    put_u32(header, params_.reveal_delay);
    out.write(reinterpret_cast<const char*>(header.data()),
              static_cast<std::streamsize>(header.size()));
    auto bytes = serialize();
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

Chain Chain::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::config_error, "cannot read store file " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    Reader r{bytes};
    auto type = r.bytes(1);
    if (type[0] != 2) fail(Errc::config_error, "store file missing params header");
    if (r.u32() != 20) fail(Errc::config_error, "bad params header length");
    ChainParams params;
    params.initial_difficulty_bits = r.u32();
    params.retarget_window = r.u32();
    params.target_spacing_s = r.u64() / 1000.0;
    params.reveal_delay = r.u32();
    return deserialize(bytes.empty() ? std::span<const uint8_t>{}
                                     : std::span<const uint8_t>(bytes).subspan(r.pos),
                       params);
}

std::optional<DhtEntry> Dht::find(const crypto::Bytes32& primary_key) const {
    auto it = entries.find(primary_key);
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

DhtEntry Dht::lookup(const crypto::Bytes32& primary_key) const {
    auto entry = find(primary_key);
    if (!entry) fail(Errc::not_found, "no DHT entry for primary key");
    return *entry;
}

Dht filtered_sync(const Chain& source, const std::set<std::string>& accepted_cas) {
    source.verify();

    // Commit heights by entry hash, first occurrence wins.
    std::map<crypto::Bytes32, uint64_t> commits;
    for (const Block& block : source.blocks()) {
        for (const Transaction& tx : block.txs) {
            if (tx.kind != Transaction::kCommit || tx.body.size() != 32) continue;
            crypto::Bytes32 h;
            std::copy(tx.body.begin(), tx.body.end(), h.begin());
            commits.emplace(h, block.height);
        }
    }

    Dht dht;
    const uint64_t delay = source.params().reveal_delay;
    for (const Block& block : source.blocks()) {
        for (const Transaction& tx : block.txs) {
            if (tx.kind != Transaction::kReveal) continue;
            DhtEntry entry;
            try {
                entry = DhtEntry::deserialize(tx.body);
            } catch (const Error&) {
                continue;  // unparseable reveal carries no identity to report
            }
            auto it = commits.find(entry.hash());
            if (it == commits.end()) {
                dht.dropped.push_back({entry, "no matching commit (tampered or never committed)"});
                continue;
            }
            if (it->second + delay > block.height) {
                dht.dropped.push_back({entry, "commit too recent at reveal time"});
                continue;
            }
            if (!accepted_cas.contains(entry.certificate.issuer)) {
                dht.dropped.push_back({entry, "issuer not accepted: " + entry.certificate.issuer});
                continue;
            }
            dht.entries.emplace(entry.primary_key, entry);
        }
    }
    return dht;
}

CertificateAuthority::CertificateAuthority(std::string id, uint64_t key_seed) : id_(std::move(id)) {
    crypto::Bytes32 seed{};
    Rng rng(key_seed);
    rng.fill(seed);
    keys_ = crypto::ed25519_keypair(seed);
}

CertificateAuthority CertificateAuthority::from_name(const std::string& id) {
    std::vector<uint8_t> tag(id.begin(), id.end());
    auto digest = crypto::sha256(tag);
    uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | digest[i];
    return CertificateAuthority(id, seed);
}

Certificate CertificateAuthority::issue(std::string_view plate, const BitString& salt,
                                        const crypto::Bytes32& public_key) {
    crypto::Bytes32 prim = compute_primary_key(plate, salt);
    if (issued_.contains(prim)) {
        fail(Errc::collision, "primary key already registered with authority " + id_);
    }
    Certificate cert;
    cert.subject_prim = prim;
    cert.subject_pub = public_key;
    cert.issuer = id_;
    cert.signature = crypto::ed25519_sign(cert.signed_payload(), keys_.priv);
    issued_.insert(prim);
    return cert;
}

bool verify_certificate(const Certificate& cert, const CaDirectory& directory) {
    auto it = directory.find(cert.issuer);
    if (it == directory.end()) return false;
    return crypto::ed25519_verify(cert.signed_payload(), cert.signature, it->second);
}

PkiNode::PkiNode(ChainParams params, FeeSchedule fees) : chain_(params), fees_(fees) {}

PkiNode::PkiNode(Chain chain, FeeSchedule fees) : chain_(std::move(chain)), fees_(fees) {}

CommitTicket PkiNode::commit(const DhtEntry& entry, double now_s) {
    crypto::Bytes32 hash = entry.hash();
    if (chain_.has_commit(hash)) fail(Errc::duplicate_commit, "entry hash already committed");
    chain_.submit(Transaction::make_commit(hash));
    const Block& block = chain_.mine_block(now_s);
    return CommitTicket{hash, block.height};
}

void PkiNode::reveal(const DhtEntry& entry, const CommitTicket& ticket, double now_s) {
    if (entry.hash() != ticket.entry_hash) {
        fail(Errc::hash_mismatch, "entry altered since commit, tamper detected");
    }
    auto committed = chain_.find_commit(ticket.entry_hash);
    if (!committed) fail(Errc::no_commit, "no on-chain commit for this entry");
    // The reveal lands in the next block; it needs commit depth >= D there.
    uint64_t reveal_height = chain_.height();
    if (*committed + chain_.params().reveal_delay > reveal_height) {
        fail(Errc::commit_too_recent,
             "only " + std::to_string(reveal_height - *committed) + " blocks since commit");
    }
    chain_.submit(Transaction::make_reveal(entry));
    chain_.mine_block(now_s);
    fees_paid_cents_ += fees_.insertion_fee_cents;
}

void PkiNode::register_entry(const DhtEntry& entry, double now_s) {
    CommitTicket ticket = commit(entry, now_s);
    for (uint32_t i = 0; i + 1 < chain_.params().reveal_delay; ++i) {
        mine_filler(now_s + i + 1);
    }
    reveal(entry, ticket, now_s + chain_.params().reveal_delay);
}

}  // namespace sidelink
