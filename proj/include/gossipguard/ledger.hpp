#pragma once

// Append-only hash chain of confirmed events.
//
// Block header (76 bytes, all integers big-endian):
//   index u32 | timestamp u64 | prev_hash [32] | hash [32]
// hash = SHA-256(index | timestamp | prev_hash | payload). Block 0 chains to
// 32 zero bytes.

#include "gossipguard/error.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gossipguard::ledger {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

inline constexpr std::size_t kHeaderBytes = 4 + 8 + 32 + 32;

inline Digest sha256(std::span<const std::uint8_t> data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
        throw std::runtime_error("SHA-256 digest failed");
    return out;
}

namespace detail {

template <typename UInt>
void put_be(Bytes& out, UInt v) {
    for (int shift = int(sizeof(UInt)) * 8 - 8; shift >= 0; shift -= 8) out.push_back(std::uint8_t(v >> shift));
}

inline char hex_digit(unsigned v) { return "0123456789abcdef"[v & 0xF]; }

}  // namespace detail

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(detail::hex_digit(b >> 4));
        s.push_back(detail::hex_digit(b));
    }
    return s;
}

inline std::optional<Bytes> from_hex(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) return std::nullopt;
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t k = 0; k < hex.size(); k += 2) {
        int hi = nibble(hex[k]), lo = nibble(hex[k + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(std::uint8_t(hi << 4 | lo));
    }
    return out;
}

struct LedgerBlock {
    std::uint32_t index = 0;
    std::uint64_t timestamp = 0;
    Digest prev_hash{};
    Bytes payload;
    Digest hash{};

    friend bool operator==(const LedgerBlock&, const LedgerBlock&) = default;
};

inline Digest block_digest(std::uint32_t index, std::uint64_t timestamp, const Digest& prev,
                           std::span<const std::uint8_t> payload) {
    Bytes buf;
    buf.reserve(4 + 8 + prev.size() + payload.size());
    detail::put_be(buf, index);
    detail::put_be(buf, timestamp);
    buf.insert(buf.end(), prev.begin(), prev.end());
    buf.insert(buf.end(), payload.begin(), payload.end());
    return sha256(buf);
}

struct VerifyResult {
    bool ok = true;
    std::optional<std::size_t> first_bad;

    explicit operator bool() const noexcept { return ok; }
};

inline VerifyResult verify(std::span<const LedgerBlock> blocks) {
    Digest expected_prev{};
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const auto& b = blocks[k];
        if (b.index != k || b.prev_hash != expected_prev ||
            block_digest(b.index, b.timestamp, b.prev_hash, b.payload) != b.hash)
            return {false, k};
        expected_prev = b.hash;
    }
    return {};
}

// Single-writer chain; blocks can only be appended.
class Ledger {
public:
    Ledger() = default;

    // Adopt blocks read from storage without checking them; run verify().
    static Ledger from_blocks(std::vector<LedgerBlock> blocks) {
        Ledger l;
        l.blocks_ = std::move(blocks);
        return l;
    }

    const LedgerBlock& append(Bytes payload, std::uint64_t timestamp) {
        if (blocks_.size() >= std::size_t(UINT32_MAX)) throw InputError("ledger: index space exhausted");
        LedgerBlock b;
        b.index = std::uint32_t(blocks_.size());
        b.timestamp = timestamp;
        if (!blocks_.empty()) b.prev_hash = blocks_.back().hash;
        b.payload = std::move(payload);
        b.hash = block_digest(b.index, b.timestamp, b.prev_hash, b.payload);
        blocks_.push_back(std::move(b));
        return blocks_.back();
    }

    std::span<const LedgerBlock> blocks() const noexcept { return blocks_; }
    std::size_t size() const noexcept { return blocks_.size(); }
    bool empty() const noexcept { return blocks_.empty(); }

private:
    std::vector<LedgerBlock> blocks_;
};

inline VerifyResult verify(const Ledger& ledger) { return verify(ledger.blocks()); }

struct Overhead {
    std::size_t total_bytes = 0;
    double per_event_overhead = 0.0;  // header bytes / payload bytes
};

inline Overhead overhead_bytes(const Ledger& ledger) {
    std::size_t payload = 0;
    for (const auto& b : ledger.blocks()) payload += b.payload.size();
    const std::size_t header = kHeaderBytes * ledger.size();
    return {header + payload, payload == 0 ? 0.0 : double(header) / double(payload)};
}

// ---------------------------------------------------------------------------
// JSON-lines storage: {"index":k,"ts":t,"prev":"<hex64>","payload":"<hex>","hash":"<hex64>"}

inline std::string to_jsonl_line(const LedgerBlock& b) {
    std::string line = "{\"index\":" + std::to_string(b.index) + ",\"ts\":" + std::to_string(b.timestamp) +
                       ",\"prev\":\"" + to_hex(b.prev_hash) + "\",\"payload\":\"" + to_hex(b.payload) +
                       "\",\"hash\":\"" + to_hex(b.hash) + "\"}";
    return line;
}

inline void write_jsonl(std::ostream& out, const Ledger& ledger) {
    for (const auto& b : ledger.blocks()) out << to_jsonl_line(b) << '\n';
}

struct LoadedLedger {
    Ledger ledger;
    std::optional<std::size_t> malformed_at;  // first line that failed to parse
};

inline std::optional<LedgerBlock> parse_jsonl_line(std::string_view line) {
    auto doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    for (const char* key : {"index", "ts", "prev", "payload", "hash"})
        if (!doc.contains(key)) return std::nullopt;
    if (!doc["index"].is_number_unsigned() || !doc["ts"].is_number_unsigned() || !doc["prev"].is_string() ||
        !doc["payload"].is_string() || !doc["hash"].is_string())
        return std::nullopt;
    LedgerBlock b;
    const auto index = doc["index"].get<std::uint64_t>();
    if (index > UINT32_MAX) return std::nullopt;
    b.index = std::uint32_t(index);
    b.timestamp = doc["ts"].get<std::uint64_t>();
    auto prev = from_hex(doc["prev"].get<std::string>());
    auto payload = from_hex(doc["payload"].get<std::string>());
    auto hash = from_hex(doc["hash"].get<std::string>());
    if (!prev || !payload || !hash || prev->size() != 32 || hash->size() != 32) return std::nullopt;
    std::memcpy(b.prev_hash.data(), prev->data(), 32);
    std::memcpy(b.hash.data(), hash->data(), 32);
    b.payload = std::move(*payload);
    return b;
}

inline LoadedLedger read_jsonl(std::istream& in) {
    std::vector<LedgerBlock> blocks;
    std::optional<std::size_t> malformed;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto b = parse_jsonl_line(line);
        if (!b) {
            malformed = blocks.size();
            break;
        }
        blocks.push_back(std::move(*b));
    }
    return {Ledger::from_blocks(std::move(blocks)), malformed};
}

inline VerifyResult verify(const LoadedLedger& loaded) {
    auto r = verify(loaded.ledger);
    if (!r) return r;
    if (loaded.malformed_at) return {false, loaded.malformed_at};
    return r;
}

// ---------------------------------------------------------------------------
// Canonical event payloads: a kind byte, then length-prefixed fields in
// declaration order. Each field is u32 length + bytes; integers and doubles
// are 8-byte big-endian (doubles as their IEEE-754 bit pattern).

enum class EventKind : std::uint8_t { Admission = 1, TrustUpdate = 2, Verdict = 3, Isolation = 4 };

class PayloadWriter {
public:
    explicit PayloadWriter(EventKind kind) { bytes_.push_back(std::uint8_t(kind)); }

    PayloadWriter& field(std::span<const std::uint8_t> raw) {
        detail::put_be(bytes_, std::uint32_t(raw.size()));
        bytes_.insert(bytes_.end(), raw.begin(), raw.end());
        return *this;
    }

    PayloadWriter& field(std::string_view text) {
        return field(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }

    PayloadWriter& field(std::uint64_t v) {
        Bytes raw;
        detail::put_be(raw, v);
        return field(std::span<const std::uint8_t>(raw));
    }

    PayloadWriter& field(std::int64_t v) { return field(std::uint64_t(v)); }
    PayloadWriter& field(double v) { return field(std::bit_cast<std::uint64_t>(v)); }

    Bytes take() { return std::move(bytes_); }

private:
    Bytes bytes_;
};

struct DecodedPayload {
    EventKind kind;
    std::vector<Bytes> fields;
};

inline DecodedPayload decode_payload(std::span<const std::uint8_t> payload) {
    if (payload.empty()) throw InputError("decode_payload: empty payload");
    DecodedPayload out{EventKind(payload[0]), {}};
    std::size_t pos = 1;
    while (pos < payload.size()) {
        if (payload.size() - pos < 4) throw InputError("decode_payload: truncated length prefix");
        std::uint32_t len = 0;
        for (int k = 0; k < 4; ++k) len = len << 8 | payload[pos + std::size_t(k)];
        pos += 4;
        if (payload.size() - pos < len) throw InputError("decode_payload: truncated field");
        out.fields.emplace_back(payload.begin() + std::ptrdiff_t(pos), payload.begin() + std::ptrdiff_t(pos + len));
        pos += len;
    }
    return out;
}

inline std::uint64_t field_u64(const Bytes& field) {
    if (field.size() != 8) throw InputError("field_u64: expected 8 bytes");
    std::uint64_t v = 0;
    for (auto b : field) v = v << 8 | b;
    return v;
}

inline double field_f64(const Bytes& field) { return std::bit_cast<double>(field_u64(field)); }

}  // namespace gossipguard::ledger
