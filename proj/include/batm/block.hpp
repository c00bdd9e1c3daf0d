#pragma once

#include <optional>
#include <vector>

#include "batm/params.hpp"
#include "batm/payload.hpp"

namespace batm {

// Canonical header layout (84 bytes, big-endian):
//   version u32 | prev_header_hash 32 | merkle_root 32 | timestamp u64
//   | difficulty_bits u32 | nonce u32
struct BlockHeader {
    std::uint32_t version = 1;
    Digest prev_header_hash;  // zero digest for genesis
    Digest merkle_root;
    Hours timestamp = 0;
    std::uint32_t difficulty_bits = 0;
    std::uint32_t nonce = 0;

    bool operator==(const BlockHeader&) const = default;
};

inline constexpr std::size_t kHeaderBytes = 84;

inline Bytes encode_header(const BlockHeader& h) {
    ByteWriter w;
    w.put_u32(h.version);
    w.put_bytes(h.prev_header_hash.span());
    w.put_bytes(h.merkle_root.span());
    w.put_u64(h.timestamp);
    w.put_u32(h.difficulty_bits);
    w.put_u32(h.nonce);
    return w.take();
}

inline BlockHeader decode_header(ByteSpan bytes) {
    if (bytes.size() != kHeaderBytes) throw Error(Errc::malformed, "header must be 84 bytes");
    ByteReader r(bytes);
    BlockHeader h;
    h.version = r.get_u32();
    h.prev_header_hash = detail::decode_digest(r);
    h.merkle_root = detail::decode_digest(r);
    h.timestamp = r.get_u64();
    h.difficulty_bits = r.get_u32();
    h.nonce = r.get_u32();
    r.expect_done();
    return h;
}

inline Digest header_hash(const BlockHeader& h) { return hash(encode_header(h)); }

inline int leading_zero_bits(const Digest& d) {
    int bits = 0;
    for (std::uint8_t byte : d.bytes) {
        if (byte == 0) {
            bits += 8;
            continue;
        }
        for (int i = 7; i >= 0; --i) {
            if (byte & (1u << i)) return bits;
            ++bits;
        }
    }
    return bits;
}

inline bool meets_difficulty(const Digest& header_digest, std::uint32_t difficulty_bits) {
    return leading_zero_bits(header_digest) >= static_cast<int>(difficulty_bits);
}

// A block: proof-of-work header over the Merkle root of its records. The
// genesis block additionally carries the encoded protocol parameters as the
// first Merkle leaf.
struct Block {
    BlockHeader header;
    std::optional<Bytes> params_record;  // genesis only
    std::vector<Payload> payloads;

    bool is_genesis() const { return header.prev_header_hash.is_zero(); }
    bool operator==(const Block&) const = default;
};

// Leaves of the payload Merkle tree, in block order. The parameters record,
// when present, is leaf zero, so a single flipped parameter byte invalidates
// the block like any payload mutation would.
inline std::vector<Bytes> merkle_leaves(const Block& b) {
    std::vector<Bytes> leaves;
    leaves.reserve(b.payloads.size() + (b.params_record ? 1 : 0));
    if (b.params_record) leaves.push_back(*b.params_record);
    for (const auto& p : b.payloads) leaves.push_back(encode_payload(p));
    return leaves;
}

inline Digest block_merkle_root(const Block& b) { return merkle_root(merkle_leaves(b)); }

inline Bytes encode_block(const Block& b) {
    ByteWriter w;
    w.put_bytes(ByteSpan(encode_header(b.header)));
    w.put_u8(b.params_record ? 1 : 0);
    if (b.params_record) w.put_var32(ByteSpan(b.params_record->data(), b.params_record->size()));
    if (b.payloads.size() > 0xffffffffull) throw Error(Errc::malformed, "too many payloads");
    w.put_u32(static_cast<std::uint32_t>(b.payloads.size()));
    for (const auto& p : b.payloads) {
        Bytes pb = encode_payload(p);
        w.put_var32(ByteSpan(pb.data(), pb.size()));
    }
    return w.take();
}

inline Block decode_block(ByteSpan bytes) {
    ByteReader r(bytes);
    Block b;
    Bytes hdr = r.get_bytes(kHeaderBytes);
    b.header = decode_header(ByteSpan(hdr.data(), hdr.size()));
    auto flag = r.get_u8();
    if (flag > 1) throw Error(Errc::malformed, "bad params flag");
    if (flag == 1) b.params_record = r.get_var32();
    auto count = r.get_u32();
    b.payloads.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Bytes pb = r.get_var32();
        b.payloads.push_back(decode_payload(ByteSpan(pb.data(), pb.size())));
    }
    r.expect_done();
    return b;
}

inline std::size_t block_size_bytes(const Block& b) { return encode_block(b).size(); }

// Finds the block's (sole) miner-approval payload, if any.
inline const Payload* find_miner_approval(const Block& b) {
    const Payload* found = nullptr;
    for (const auto& p : b.payloads) {
        if (p.kind() != PayloadKind::miner_approval) continue;
        if (found) return nullptr;  // more than one: structurally invalid
        found = &p;
    }
    return found;
}

// Nonce search. Re-hashes only the second SHA-256 input block per attempt by
// reusing the midstate over the first 64 header bytes (the nonce sits in the
// final 20-byte tail).
inline std::uint32_t solve_proof_of_work(BlockHeader& h) {
    crypto_init();
    Bytes prefix = encode_header(h);
    crypto_hash_sha256_state base;
    crypto_hash_sha256_init(&base);
    crypto_hash_sha256_update(&base, prefix.data(), 64);

    std::array<std::uint8_t, kHeaderBytes - 64> tail;
    std::copy(prefix.begin() + 64, prefix.end(), tail.begin());

    for (std::uint64_t nonce = 0; nonce <= 0xffffffffull; ++nonce) {
        tail[16] = static_cast<std::uint8_t>(nonce >> 24);
        tail[17] = static_cast<std::uint8_t>(nonce >> 16);
        tail[18] = static_cast<std::uint8_t>(nonce >> 8);
        tail[19] = static_cast<std::uint8_t>(nonce);
        crypto_hash_sha256_state st = base;
        crypto_hash_sha256_update(&st, tail.data(), tail.size());
        Digest d;
        crypto_hash_sha256_final(&st, d.bytes.data());
        if (meets_difficulty(d, h.difficulty_bits)) {
            h.nonce = static_cast<std::uint32_t>(nonce);
            return h.nonce;
        }
    }
    throw Error(Errc::validation_failed, "nonce space exhausted");
}

}  // namespace batm
