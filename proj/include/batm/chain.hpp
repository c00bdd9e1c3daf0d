#pragma once

#include <vector>

#include "batm/block.hpp"

namespace batm {

// Append-only sequence of blocks from genesis. Values are snapshots:
// validation never mutates, and extension happens through push_block on an
// owned copy.
struct Chain {
    std::vector<Block> blocks;
    ChainParams params;  // decoded from the genesis record

    std::size_t length() const { return blocks.size(); }
    const Block& tip() const { return blocks.back(); }
    const Block& at(std::size_t height) const {
        if (height >= blocks.size()) throw Error(Errc::out_of_range, "no block at that height");
        return blocks[height];
    }
};

// Structural checks for block zero. Genesis is exempt from proof-of-work;
// everything else (record integrity, founder credentials, seed approval)
// must hold.
inline CheckResult validate_genesis(const Block& b) {
    CheckResult res;
    if (!b.header.prev_header_hash.is_zero()) res.fail("genesis: prev hash must be zero");
    // Genesis skips proof of work, so every header field must be pinned here
    // or a flipped byte would only surface through block 1's linkage.
    if (b.header.version != 1) res.fail("genesis: version must be 1");
    if (b.header.nonce != 0) res.fail("genesis: nonce must be zero");
    if (b.header.timestamp != 0) res.fail("genesis: timestamp must be zero");
    if (!b.params_record) {
        res.fail("genesis: missing parameters record");
        return res;
    }
    ChainParams params;
    try {
        params = decode_params(ByteSpan(b.params_record->data(), b.params_record->size()));
    } catch (const Error& e) {
        res.fail(std::string("genesis: undecodable parameters record (") + e.what() + ")");
        return res;
    }
    for (const auto& v : params_violations(params)) res.fail("genesis: " + v);
    if (b.header.difficulty_bits != params.difficulty_bits)
        res.fail("genesis: difficulty field does not match parameters");
    if (block_merkle_root(b) != b.header.merkle_root) res.fail("genesis: merkle root mismatch");
    if (block_size_bytes(b) > params.max_block_bytes) res.fail("genesis: block exceeds size cap");

    const Payload* ma = nullptr;
    const Payload* cp = nullptr;
    for (const auto& p : b.payloads) {
        switch (p.kind()) {
            case PayloadKind::miner_approval:
                if (ma) res.fail("genesis: more than one miner approval");
                ma = &p;
                break;
            case PayloadKind::credentials:
                if (cp) res.fail("genesis: more than one credentials payload");
                cp = &p;
                break;
            default:
                res.fail("genesis: unexpected payload kind");
        }
    }
    if (!ma || !cp) {
        res.fail("genesis: needs exactly one miner approval and one credentials payload");
        return res;
    }

    const auto& cb = std::get<CredentialsBody>(cp->body);
    if (key_id(ByteSpan(cb.master_public.data(), cb.master_public.size())) != cp->issuer_id)
        res.fail("genesis: credentials issuer id does not match master key");
    Digest sig_cert_digest = subkey_cert_digest(
        KeyRole::signature_subkey,
        ByteSpan(cb.signature_subkey_public.data(), cb.signature_subkey_public.size()),
        cb.subkey_valid_from, cb.subkey_valid_until);
    Digest enc_cert_digest = subkey_cert_digest(
        KeyRole::encryption_subkey,
        ByteSpan(cb.encryption_subkey_public.data(), cb.encryption_subkey_public.size()),
        cb.subkey_valid_from, cb.subkey_valid_until);
    ByteSpan master(cb.master_public.data(), cb.master_public.size());
    if (!verify(master, sig_cert_digest.span(), cb.signature_cert))
        res.fail("genesis: signature subkey certificate invalid");
    if (!verify(master, enc_cert_digest.span(), cb.encryption_cert))
        res.fail("genesis: encryption subkey certificate invalid");
    if (cb.subkey_valid_until - cb.subkey_valid_from != params.t_subkey)
        res.fail("genesis: founder subkey window length is not t_subkey");
    ByteSpan founder_sub(cb.signature_subkey_public.data(), cb.signature_subkey_public.size());
    if (!payload_signature_ok(*cp, founder_sub)) res.fail("genesis: credentials signature invalid");

    const auto& mb = std::get<MinerApprovalBody>(ma->body);
    if (!mb.prev_random_signature.empty())
        res.fail("genesis: approval must have an empty previous-random signature");
    if (ma->issuer_id != cp->issuer_id) res.fail("genesis: approval issuer is not the founder");
    if (!payload_signature_ok(*ma, founder_sub)) res.fail("genesis: approval signature invalid");
    return res;
}

// Crafts block zero: parameters record, founder credentials, and a seed
// approval payload whose previous-signature field is empty.
inline Block make_genesis(const ChainParams& params, const NodeIdentity& founder,
                          const std::array<std::uint8_t, 32>& seed_random) {
    require_valid_params(params);
    Block b;
    b.params_record = encode_params(params);
    b.payloads.push_back(make_genesis_approval(founder, seed_random, 0));
    b.payloads.push_back(issue_credentials(founder, 0));
    b.header.version = 1;
    b.header.timestamp = 0;
    b.header.difficulty_bits = params.difficulty_bits;
    b.header.nonce = 0;
    b.header.merkle_root = block_merkle_root(b);
    auto res = validate_genesis(b);
    if (!res) throw Error(Errc::invalid_params, res.joined());
    return b;
}

inline Chain chain_from_genesis(const Block& genesis) {
    auto res = validate_genesis(genesis);
    if (!res) throw Error(Errc::validation_failed, res.joined(), 0);
    Chain c;
    c.params = decode_params(ByteSpan(genesis.params_record->data(), genesis.params_record->size()));
    c.blocks.push_back(genesis);
    return c;
}

// Longest-chain rule; equal lengths fall back to the lexicographically
// smaller tip header hash so fork resolution is deterministic.
inline Chain select_chain(const std::vector<Chain>& candidates) {
    if (candidates.empty()) throw Error(Errc::out_of_range, "no candidate chains");
    for (const auto& c : candidates)
        if (c.blocks.empty()) throw Error(Errc::genesis_mismatch, "empty candidate chain");
    Digest genesis_hash = header_hash(candidates.front().blocks.front().header);
    const Chain* best = nullptr;
    Digest best_tip;
    for (const auto& c : candidates) {
        if (header_hash(c.blocks.front().header) != genesis_hash)
            throw Error(Errc::genesis_mismatch, "candidates disagree on genesis");
        Digest tip = header_hash(c.tip().header);
        if (!best || c.length() > best->length() ||
            (c.length() == best->length() && tip < best_tip)) {
            best = &c;
            best_tip = tip;
        }
    }
    return *best;
}

// Payloads that are confirmed from the perspective of `height`: a payload
// counts once at least one block follows its own, so only blocks strictly
// below `height` contribute.
inline std::vector<Payload> confirmed_payloads(const Chain& chain, std::size_t height) {
    if (height >= chain.length())
        throw Error(Errc::out_of_range, "height beyond chain tip");
    std::vector<Payload> out;
    for (std::size_t j = 0; j < height; ++j)
        for (const auto& p : chain.blocks[j].payloads) out.push_back(p);
    return out;
}

}  // namespace batm
