#pragma once

#include <algorithm>
#include <set>

#include "batm/ledger.hpp"

namespace batm {

namespace validate_detail {

// Mutations earlier payloads of the same block would apply, so intra-block
// ordering is respected by the timer and key rules.
struct Overlay {
    std::unordered_set<Digest, DigestHash> credentials_added;
    std::unordered_map<Digest, std::vector<ledger_detail::KeyWindow>, DigestHash> subkeys_added;
    std::unordered_map<Digest, std::vector<Hours>, DigestHash> renews_added;
    std::unordered_map<Digest, std::unordered_map<Digest, Hours, DigestHash>, DigestHash>
        blames_added;  // blamer -> target -> time
    std::unordered_set<Digest, DigestHash> revokes_added;
};

struct Context {
    const LedgerView& view;
    Overlay overlay;

    bool known(const Digest& id) const {
        const auto* rec = view.record(id);
        return (rec && rec->has_credentials()) || overlay.credentials_added.count(id) > 0;
    }
    bool revoked(const Digest& id) const {
        const auto* rec = view.record(id);
        return (rec && rec->revoked_at && *rec->revoked_at <= view.at()) ||
               overlay.revokes_added.count(id) > 0;
    }
    bool authenticated(const Digest& id) const { return known(id) && !revoked(id); }

    const Bytes* current_signature_key(const Digest& id, Hours t) const {
        const ledger_detail::KeyWindow* current = nullptr;
        if (const auto* rec = view.record(id)) {
            for (const auto& w : rec->signature_keys)
                if (w.from <= t) current = &w;
        }
        auto it = overlay.subkeys_added.find(id);
        if (it != overlay.subkeys_added.end())
            for (const auto& w : it->second)
                if (w.from <= t) current = &w;
        if (!current || t >= current->until) return nullptr;
        return &current->public_key;
    }

    std::optional<Hours> last_renew(const Digest& id) const {
        std::optional<Hours> last;
        if (const auto* rec = view.record(id); rec && !rec->renew_times.empty())
            last = rec->renew_times.back();
        auto it = overlay.renews_added.find(id);
        if (it != overlay.renews_added.end() && !it->second.empty())
            last = std::max(last.value_or(0), it->second.back());
        return last;
    }

    std::size_t renews_in_window(const Digest& id, Hours now, Hours t_renew) const {
        auto in_window = [&](Hours t) { return t <= now && now - t < t_renew; };
        std::size_t n = 0;
        if (const auto* rec = view.record(id))
            for (Hours t : rec->renew_times)
                if (in_window(t)) ++n;
        auto it = overlay.renews_added.find(id);
        if (it != overlay.renews_added.end())
            for (Hours t : it->second)
                if (in_window(t)) ++n;
        return n;
    }

    std::optional<Hours> last_blame(const Digest& blamer, const Digest& target) const {
        std::optional<Hours> last;
        if (const auto* rec = view.record(blamer)) {
            auto it = rec->last_blame_on.find(target);
            if (it != rec->last_blame_on.end()) last = it->second;
        }
        auto oit = overlay.blames_added.find(blamer);
        if (oit != overlay.blames_added.end()) {
            auto it = oit->second.find(target);
            if (it != oit->second.end()) last = std::max(last.value_or(0), it->second);
        }
        return last;
    }

    void apply(const Payload& p, Hours block_time) {
        switch (p.kind()) {
            case PayloadKind::credentials: {
                const auto& cb = std::get<CredentialsBody>(p.body);
                overlay.credentials_added.insert(p.issuer_id);
                overlay.subkeys_added[p.issuer_id].push_back(
                    {cb.signature_subkey_public, cb.subkey_valid_from, cb.subkey_valid_until});
                break;
            }
            case PayloadKind::renew: {
                const auto& rb = std::get<RenewBody>(p.body);
                overlay.subkeys_added[p.issuer_id].push_back(
                    {rb.signature_subkey_public, rb.subkey_valid_from, rb.subkey_valid_until});
                overlay.renews_added[p.issuer_id].push_back(block_time);
                break;
            }
            case PayloadKind::blame: {
                const auto& bb = std::get<BlameBody>(p.body);
                overlay.blames_added[p.issuer_id][bb.target_id] = block_time;
                break;
            }
            case PayloadKind::revoke: {
                const auto& rb = std::get<RevokeBody>(p.body);
                overlay.revokes_added.insert(rb.revoked_master_id);
                if (rb.replacement) {
                    Digest succ = key_id(ByteSpan(rb.replacement->master_public.data(),
                                                  rb.replacement->master_public.size()));
                    overlay.credentials_added.insert(succ);
                    overlay.subkeys_added[succ].push_back({rb.replacement->signature_subkey_public,
                                                           rb.replacement->subkey_valid_from,
                                                           rb.replacement->subkey_valid_until});
                }
                break;
            }
            default:
                break;
        }
    }
};

// Checks a credentials body's internal consistency: issuer binding, subkey
// certificates, validity windows.
inline void check_credentials_body(CheckResult& res, const CredentialsBody& cb,
                                   const Digest& expected_issuer, Hours issued_at, Hours at,
                                   Hours t_subkey, const char* what) {
    ByteSpan master(cb.master_public.data(), cb.master_public.size());
    if (key_id(master) != expected_issuer)
        res.fail(std::string(what) + ": issuer id does not match master key");
    Digest sig_d = subkey_cert_digest(
        KeyRole::signature_subkey,
        ByteSpan(cb.signature_subkey_public.data(), cb.signature_subkey_public.size()),
        cb.subkey_valid_from, cb.subkey_valid_until);
    Digest enc_d = subkey_cert_digest(
        KeyRole::encryption_subkey,
        ByteSpan(cb.encryption_subkey_public.data(), cb.encryption_subkey_public.size()),
        cb.subkey_valid_from, cb.subkey_valid_until);
    if (!verify(master, sig_d.span(), cb.signature_cert))
        res.fail(std::string(what) + ": signature subkey certificate invalid");
    if (!verify(master, enc_d.span(), cb.encryption_cert))
        res.fail(std::string(what) + ": encryption subkey certificate invalid");
    if (cb.subkey_valid_until - cb.subkey_valid_from != t_subkey)
        res.fail(std::string(what) + ": subkey window length is not t_subkey");
    if (cb.subkey_valid_from > issued_at)
        res.fail(std::string(what) + ": subkey window opens after issue time");
    if (at >= cb.subkey_valid_until) res.fail(std::string(what) + ": subkey already expired");
}

}  // namespace validate_detail

// Full per-payload validity check against confirmed chain state (plus any
// earlier payloads of the block under validation, via the context overlay).
// `prev_random` carries the previous block's approval random when the
// payload under test is a miner approval.
inline CheckResult verify_payload_in_context(validate_detail::Context& ctx, const Payload& p,
                                             Hours at,
                                             const std::array<std::uint8_t, 32>* prev_random) {
    CheckResult res;
    const ChainParams& params = ctx.view.chain().params;
    if (p.issued_at > at) {
        res.fail("payload issued in the future");
        return res;
    }

    auto check_subkey_signature = [&](const Digest& issuer) -> bool {
        const Bytes* pub = ctx.current_signature_key(issuer, at);
        if (!pub) {
            res.fail("issuer has no valid signature subkey");
            return false;
        }
        if (!payload_signature_ok(p, ByteSpan(pub->data(), pub->size()))) {
            res.fail("signed digest does not verify under the current subkey");
            return false;
        }
        return true;
    };

    switch (p.kind()) {
        case PayloadKind::credentials: {
            const auto& cb = std::get<CredentialsBody>(p.body);
            if (ctx.known(p.issuer_id)) res.fail("credentials: issuer already authenticated");
            if (ctx.revoked(p.issuer_id)) res.fail("credentials: master key was revoked");
            validate_detail::check_credentials_body(res, cb, p.issuer_id, p.issued_at, at,
                                                    params.t_subkey, "credentials");
            ByteSpan sub(cb.signature_subkey_public.data(), cb.signature_subkey_public.size());
            if (!payload_signature_ok(p, sub)) res.fail("credentials: signed digest invalid");
            break;
        }
        case PayloadKind::renew: {
            const auto& rb = std::get<RenewBody>(p.body);
            if (!ctx.authenticated(p.issuer_id)) {
                res.fail("renew: issuer not authenticated");
                break;
            }
            if (!check_subkey_signature(p.issuer_id)) break;
            const auto* rec = ctx.view.record(p.issuer_id);
            ByteSpan master(rec->master_public.data(), rec->master_public.size());
            if (at < rec->master_from || at >= rec->master_until) {
                res.fail("renew: master key expired");
                break;
            }
            Digest sig_d = subkey_cert_digest(
                KeyRole::signature_subkey,
                ByteSpan(rb.signature_subkey_public.data(), rb.signature_subkey_public.size()),
                rb.subkey_valid_from, rb.subkey_valid_until);
            Digest enc_d = subkey_cert_digest(
                KeyRole::encryption_subkey,
                ByteSpan(rb.encryption_subkey_public.data(), rb.encryption_subkey_public.size()),
                rb.subkey_valid_from, rb.subkey_valid_until);
            if (!verify(master, sig_d.span(), rb.signature_cert))
                res.fail("renew: signature subkey certificate invalid");
            if (!verify(master, enc_d.span(), rb.encryption_cert))
                res.fail("renew: encryption subkey certificate invalid");
            if (rb.subkey_valid_until - rb.subkey_valid_from != params.t_subkey)
                res.fail("renew: subkey window length is not t_subkey");
            if (rb.subkey_valid_from > p.issued_at)
                res.fail("renew: subkey window opens after issue time");
            // A node may renew early, but no sooner than half the renewal
            // period, which also caps renewals at two per sliding window.
            if (auto last = ctx.last_renew(p.issuer_id)) {
                if (2 * (at - *last) < params.t_renew)
                    res.fail("renew: sooner than t_renew/2 after the previous renewal");
            }
            if (ctx.renews_in_window(p.issuer_id, at, params.t_renew) >= 2)
                res.fail("renew: more than two renewals inside t_renew");
            break;
        }
        case PayloadKind::blame: {
            const auto& bb = std::get<BlameBody>(p.body);
            if (!ctx.authenticated(p.issuer_id)) {
                res.fail("blame: issuer not authenticated");
                break;
            }
            if (bb.target_id == p.issuer_id) res.fail("blame: node cannot blame itself");
            if (!check_subkey_signature(p.issuer_id)) break;
            if (auto last = ctx.last_blame(p.issuer_id, bb.target_id)) {
                if (at - *last < params.t_blame)
                    res.fail("blame: same blamer re-blamed target inside t_blame");
            }
            break;
        }
        case PayloadKind::ban: {
            const auto& bb = std::get<BanBody>(p.body);
            if (!ctx.authenticated(p.issuer_id)) {
                res.fail("ban: issuer not authenticated");
                break;
            }
            if (!check_subkey_signature(p.issuer_id)) break;
            std::set<EvidenceRef> distinct(bb.evidence.begin(), bb.evidence.end());
            if (distinct.size() < 2) {
                res.fail("ban: needs at least two distinct blame references");
                break;
            }
            for (const auto& e : distinct) {
                const Payload* ev = ctx.view.payload_at(e.height, e.payload_index);
                if (!ev) {
                    res.fail("ban: evidence reference is not a confirmed payload");
                    continue;
                }
                if (ev->kind() != PayloadKind::blame) {
                    res.fail("ban: evidence reference is not a blame");
                    continue;
                }
                if (std::get<BlameBody>(ev->body).target_id != bb.target_id)
                    res.fail("ban: evidence blame targets a different node");
            }
            break;
        }
        case PayloadKind::revoke: {
            const auto& rb = std::get<RevokeBody>(p.body);
            if (!ctx.authenticated(p.issuer_id)) {
                res.fail("revoke: issuer not authenticated");
                break;
            }
            if (rb.revoked_master_id != p.issuer_id)
                res.fail("revoke: node may only revoke its own master key");
            const auto* rec = ctx.view.record(p.issuer_id);
            if (!rec || rec->master_public.empty()) {
                res.fail("revoke: issuer master key unknown");
                break;
            }
            if (at < rec->master_from || at >= rec->master_until)
                res.fail("revoke: master key expired");
            ByteSpan master(rec->master_public.data(), rec->master_public.size());
            if (!payload_signature_ok(p, master))
                res.fail("revoke: signed digest does not verify under the master key");
            if (rb.replacement) {
                Digest succ = key_id(ByteSpan(rb.replacement->master_public.data(),
                                              rb.replacement->master_public.size()));
                if (succ == p.issuer_id)
                    res.fail("revoke: replacement reuses the revoked master key");
                if (ctx.known(succ)) res.fail("revoke: replacement master already registered");
                validate_detail::check_credentials_body(res, *rb.replacement, succ, p.issued_at,
                                                        at, params.t_subkey, "revoke replacement");
            }
            break;
        }
        case PayloadKind::miner_approval: {
            const auto& mb = std::get<MinerApprovalBody>(p.body);
            if (!ctx.authenticated(p.issuer_id)) {
                res.fail("approval: miner not authenticated");
                break;
            }
            if (ctx.view.is_banned(p.issuer_id, at)) res.fail("approval: miner is banned");
            const Bytes* pub = ctx.current_signature_key(p.issuer_id, at);
            if (!pub) {
                res.fail("approval: miner has no valid signature subkey");
                break;
            }
            if (!payload_signature_ok(p, ByteSpan(pub->data(), pub->size())))
                res.fail("approval: signed digest invalid");
            if (!prev_random) {
                res.fail("approval: no previous block context");
                break;
            }
            if (mb.prev_random_signature.empty())
                res.fail("approval: missing previous-random signature");
            else if (!verify_prev_random_signature(mb, ByteSpan(pub->data(), pub->size()),
                                                   *prev_random))
                res.fail("approval: previous-random signature invalid");
            break;
        }
    }
    return res;
}

// Standalone payload check against a chain snapshot at hour `at`. For miner
// approvals the chain tip acts as the predecessor block.
inline CheckResult verify_payload(const Payload& p, const Chain& chain, Hours at) {
    LedgerView view = LedgerView::at_time(chain, at);
    validate_detail::Context ctx{view, {}};
    const std::array<std::uint8_t, 32>* prev_random = nullptr;
    if (p.kind() == PayloadKind::miner_approval) {
        if (const Payload* ma = find_miner_approval(chain.tip()))
            prev_random = &std::get<MinerApprovalBody>(ma->body).new_random;
    }
    return verify_payload_in_context(ctx, p, at, prev_random);
}

// Block validity against its predecessor (the chain tip):
//   1. proof-of-work on the header hash,
//   2. a valid miner approval from an authenticated, unbanned node,
//   3. no other payload issued by the miner,
//   4. every payload individually valid (timers included),
// plus linkage, timestamp ordering, Merkle root, and the size cap.
inline CheckResult validate_block(const Chain& chain, const Block& block) {
    CheckResult res;
    const ChainParams& params = chain.params;
    const Block& prev = chain.tip();

    if (block.header.prev_header_hash != header_hash(prev.header)) {
        res.fail("link: previous header hash mismatch");
        return res;
    }
    if (block.header.difficulty_bits != params.difficulty_bits)
        res.fail("pow: difficulty field does not match chain parameters");
    if (!meets_difficulty(header_hash(block.header), params.difficulty_bits))
        res.fail("pow: header hash does not meet difficulty");
    if (block.header.timestamp < prev.header.timestamp)
        res.fail("time: block timestamp precedes predecessor");
    if (block.params_record) res.fail("structure: parameters record outside genesis");
    if (block.payloads.empty()) {
        res.fail("structure: block has no payloads");
        return res;
    }
    if (block_merkle_root(block) != block.header.merkle_root)
        res.fail("merkle: root does not match payloads");
    if (block_size_bytes(block) > params.max_block_bytes) res.fail("size: block exceeds cap");

    const Payload* ma = find_miner_approval(block);
    if (!ma) {
        res.fail("approval: block needs exactly one miner approval payload");
        return res;
    }

    LedgerView view = LedgerView::for_candidate(chain, block.header.timestamp);
    validate_detail::Context ctx{view, {}};
    Hours at = block.header.timestamp;

    const Payload* prev_ma = find_miner_approval(prev);
    const std::array<std::uint8_t, 32>* prev_random =
        prev_ma ? &std::get<MinerApprovalBody>(prev_ma->body).new_random : nullptr;
    CheckResult ma_res = verify_payload_in_context(ctx, *ma, at, prev_random);
    for (auto& r : ma_res.reasons) res.fail(std::move(r));

    for (std::size_t i = 0; i < block.payloads.size(); ++i) {
        const Payload& p = block.payloads[i];
        if (p.kind() == PayloadKind::miner_approval) continue;
        std::string tag = "payload[" + std::to_string(i) + "] ";
        if (p.issuer_id == ma->issuer_id) {
            res.fail(tag + "issued by the block's own miner");
            continue;
        }
        CheckResult pr = verify_payload_in_context(ctx, p, at, nullptr);
        if (!pr) {
            for (auto& r : pr.reasons) res.fail(tag + std::move(r));
            continue;
        }
        ctx.apply(p, at);
    }
    return res;
}

// Appends after validation; throws with the failing height on rejection.
inline void push_block(Chain& chain, const Block& block) {
    CheckResult res = validate_block(chain, block);
    if (!res) throw Error(Errc::validation_failed, res.joined(), chain.length());
    chain.blocks.push_back(block);
}

inline Chain extended(const Chain& chain, const Block& block) {
    Chain next = chain;
    push_block(next, block);
    return next;
}

// Assembles, proves, and returns the next block. The caller supplies the
// payload set (already filtered) and the fresh approval random value.
inline Block mine_block(const Chain& chain, const NodeIdentity& miner,
                        const std::vector<Payload>& payloads, Hours now,
                        const std::array<std::uint8_t, 32>& new_random) {
    const ChainParams& params = chain.params;
    LedgerView view = LedgerView::for_candidate(chain, now);
    Digest miner_id = miner.id();
    if (!view.is_authenticated(miner_id))
        throw Error(Errc::miner_not_authenticated, "miner has no confirmed credentials");
    if (view.is_banned(miner_id, now))
        throw Error(Errc::miner_banned, "miner is inside its ban recovery window");
    for (const auto& p : payloads)
        if (p.issuer_id == miner_id)
            throw Error(Errc::self_payload_included, "miner cannot include its own payloads");

    // Sign with whichever subkey the chain currently recognises, which may
    // be older than the miner's local head if a renewal is still pending.
    const Bytes& expected_pub = view.key_for(miner_id, KeyRole::signature_subkey, now);
    const KeyPair* signer = miner.find_signature_key(ByteSpan(expected_pub.data(), expected_pub.size()));
    if (!signer) throw Error(Errc::missing_key, "miner does not hold the chain-current subkey");

    const Payload* prev_ma = find_miner_approval(chain.tip());
    if (!prev_ma) throw Error(Errc::validation_failed, "predecessor lacks a miner approval");
    const auto& prev_random = std::get<MinerApprovalBody>(prev_ma->body).new_random;

    Block b;
    b.payloads.push_back(make_miner_approval(miner, new_random, prev_random, now, signer));
    validate_detail::Context ctx{view, {}};
    for (const auto& p : payloads) {
        CheckResult pr = verify_payload_in_context(ctx, p, now, nullptr);
        if (!pr) throw Error(Errc::validation_failed, "payload rejected: " + pr.joined());
        ctx.apply(p, now);
        b.payloads.push_back(p);
    }

    b.header.version = 1;
    b.header.prev_header_hash = header_hash(chain.tip().header);
    b.header.timestamp = now;
    b.header.difficulty_bits = params.difficulty_bits;
    b.header.merkle_root = block_merkle_root(b);
    if (block_size_bytes(b) > params.max_block_bytes)
        throw Error(Errc::block_too_large, "assembled block exceeds size cap");
    solve_proof_of_work(b.header);
    return b;
}

inline Block mine_block(const Chain& chain, const NodeIdentity& miner,
                        const std::vector<Payload>& payloads, Hours now) {
    return mine_block(chain, miner, payloads, now, detail::random_seed());
}

// Revalidates a whole chain from genesis; used after simulation runs and on
// load from disk.
inline CheckResult revalidate_chain(const Chain& chain) {
    CheckResult res;
    if (chain.blocks.empty()) {
        res.fail("chain is empty");
        return res;
    }
    CheckResult g = validate_genesis(chain.blocks.front());
    for (auto& r : g.reasons) res.fail("block 0: " + std::move(r));
    Chain prefix;
    prefix.params = chain.params;
    prefix.blocks.push_back(chain.blocks.front());
    for (std::size_t h = 1; h < chain.length(); ++h) {
        CheckResult b = validate_block(prefix, chain.blocks[h]);
        if (!b) {
            for (auto& r : b.reasons)
                res.fail("block " + std::to_string(h) + ": " + std::move(r));
            return res;
        }
        prefix.blocks.push_back(chain.blocks[h]);
    }
    return res;
}

}  // namespace batm
