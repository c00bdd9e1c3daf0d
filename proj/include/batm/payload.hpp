#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "batm/crypto.hpp"
#include "batm/identity.hpp"

namespace batm {

enum class PayloadKind : std::uint8_t {
    miner_approval = 0x01,
    credentials = 0x02,
    renew = 0x03,
    blame = 0x04,
    ban = 0x05,
    revoke = 0x06,
};

inline const char* payload_kind_name(PayloadKind k) {
    switch (k) {
        case PayloadKind::miner_approval: return "miner_approval";
        case PayloadKind::credentials: return "credentials";
        case PayloadKind::renew: return "renew";
        case PayloadKind::blame: return "blame";
        case PayloadKind::ban: return "ban";
        case PayloadKind::revoke: return "revoke";
    }
    return "unknown";
}

// Proves the miner is an authenticated node: signs the random value carried
// by the previous block's approval payload and commits a fresh one.
struct MinerApprovalBody {
    std::array<std::uint8_t, 32> new_random{};
    Signature prev_random_signature;  // empty only in the genesis block

    bool operator==(const MinerApprovalBody&) const = default;
};

// Public keys a node needs to operate: master plus both subkeys, each subkey
// certified by the master.
struct CredentialsBody {
    Bytes master_public;
    Bytes signature_subkey_public;
    Bytes encryption_subkey_public;
    Hours subkey_valid_from = 0;
    Hours subkey_valid_until = 0;
    Signature signature_cert;
    Signature encryption_cert;

    bool operator==(const CredentialsBody&) const = default;
};

// Next subkey generation, certified by the (unchanged) master.
struct RenewBody {
    Bytes signature_subkey_public;
    Bytes encryption_subkey_public;
    Hours subkey_valid_from = 0;
    Hours subkey_valid_until = 0;
    Signature signature_cert;
    Signature encryption_cert;

    bool operator==(const RenewBody&) const = default;
};

struct BlameBody {
    Digest target_id;
    std::uint16_t reason_code = 0;

    bool operator==(const BlameBody&) const = default;
};

// Reference to a confirmed payload by position, so bans stay auditable from
// chain data alone.
struct EvidenceRef {
    std::uint64_t height = 0;
    std::uint32_t payload_index = 0;

    auto operator<=>(const EvidenceRef&) const = default;
};

struct BanBody {
    Digest target_id;
    std::vector<EvidenceRef> evidence;  // at least two confirmed blames on target

    bool operator==(const BanBody&) const = default;
};

struct RevokeBody {
    Digest revoked_master_id;
    std::optional<CredentialsBody> replacement;

    bool operator==(const RevokeBody&) const = default;
};

using PayloadBody = std::variant<MinerApprovalBody, CredentialsBody, RenewBody, BlameBody,
                                 BanBody, RevokeBody>;

// One chain event. The signed digest always comes last and covers every
// preceding canonical byte.
struct Payload {
    Digest issuer_id;  // hash of the issuer's master public key
    Hours issued_at = 0;
    PayloadBody body;
    Signature signed_digest;

    PayloadKind kind() const {
        return static_cast<PayloadKind>(body.index() + 1);
    }
    bool operator==(const Payload&) const = default;
};

namespace detail {

inline void encode_signature(ByteWriter& w, const Signature& sig) {
    w.put_bytes(sig.signer_key_id.span());
    w.put_var16(ByteSpan(sig.bytes.data(), sig.bytes.size()));
}

inline Signature decode_signature(ByteReader& r) {
    Signature sig;
    Bytes id = r.get_bytes(32);
    std::copy(id.begin(), id.end(), sig.signer_key_id.bytes.begin());
    sig.bytes = r.get_var16();
    return sig;
}

inline void encode_credentials_body(ByteWriter& w, const CredentialsBody& b) {
    w.put_var16(ByteSpan(b.master_public.data(), b.master_public.size()));
    w.put_var16(ByteSpan(b.signature_subkey_public.data(), b.signature_subkey_public.size()));
    w.put_var16(ByteSpan(b.encryption_subkey_public.data(), b.encryption_subkey_public.size()));
    w.put_u64(b.subkey_valid_from);
    w.put_u64(b.subkey_valid_until);
    encode_signature(w, b.signature_cert);
    encode_signature(w, b.encryption_cert);
}

inline CredentialsBody decode_credentials_body(ByteReader& r) {
    CredentialsBody b;
    b.master_public = r.get_var16();
    b.signature_subkey_public = r.get_var16();
    b.encryption_subkey_public = r.get_var16();
    b.subkey_valid_from = r.get_u64();
    b.subkey_valid_until = r.get_u64();
    b.signature_cert = decode_signature(r);
    b.encryption_cert = decode_signature(r);
    return b;
}

inline void encode_body(ByteWriter& w, const PayloadBody& body) {
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, MinerApprovalBody>) {
                w.put_bytes(ByteSpan(b.new_random.data(), b.new_random.size()));
                encode_signature(w, b.prev_random_signature);
            } else if constexpr (std::is_same_v<T, CredentialsBody>) {
                encode_credentials_body(w, b);
            } else if constexpr (std::is_same_v<T, RenewBody>) {
                w.put_var16(ByteSpan(b.signature_subkey_public.data(), b.signature_subkey_public.size()));
                w.put_var16(ByteSpan(b.encryption_subkey_public.data(), b.encryption_subkey_public.size()));
                w.put_u64(b.subkey_valid_from);
                w.put_u64(b.subkey_valid_until);
                encode_signature(w, b.signature_cert);
                encode_signature(w, b.encryption_cert);
            } else if constexpr (std::is_same_v<T, BlameBody>) {
                w.put_bytes(b.target_id.span());
                w.put_u16(b.reason_code);
            } else if constexpr (std::is_same_v<T, BanBody>) {
                w.put_bytes(b.target_id.span());
                if (b.evidence.size() > 0xffff)
                    throw Error(Errc::malformed, "too many evidence references");
                w.put_u16(static_cast<std::uint16_t>(b.evidence.size()));
                for (const auto& e : b.evidence) {
                    w.put_u64(e.height);
                    w.put_u32(e.payload_index);
                }
            } else if constexpr (std::is_same_v<T, RevokeBody>) {
                w.put_bytes(b.revoked_master_id.span());
                w.put_u8(b.replacement ? 1 : 0);
                if (b.replacement) {
                    ByteWriter inner;
                    encode_credentials_body(inner, *b.replacement);
                    w.put_var32(ByteSpan(inner.data().data(), inner.data().size()));
                }
            }
        },
        body);
}

inline Digest decode_digest(ByteReader& r) {
    Bytes raw = r.get_bytes(32);
    Digest d;
    std::copy(raw.begin(), raw.end(), d.bytes.begin());
    return d;
}

inline PayloadBody decode_body(PayloadKind kind, ByteReader& r) {
    switch (kind) {
        case PayloadKind::miner_approval: {
            MinerApprovalBody b;
            Bytes rnd = r.get_bytes(32);
            std::copy(rnd.begin(), rnd.end(), b.new_random.begin());
            b.prev_random_signature = decode_signature(r);
            return b;
        }
        case PayloadKind::credentials:
            return decode_credentials_body(r);
        case PayloadKind::renew: {
            RenewBody b;
            b.signature_subkey_public = r.get_var16();
            b.encryption_subkey_public = r.get_var16();
            b.subkey_valid_from = r.get_u64();
            b.subkey_valid_until = r.get_u64();
            b.signature_cert = decode_signature(r);
            b.encryption_cert = decode_signature(r);
            return b;
        }
        case PayloadKind::blame: {
            BlameBody b;
            b.target_id = decode_digest(r);
            b.reason_code = r.get_u16();
            return b;
        }
        case PayloadKind::ban: {
            BanBody b;
            b.target_id = decode_digest(r);
            auto n = r.get_u16();
            b.evidence.reserve(n);
            for (std::uint16_t i = 0; i < n; ++i) {
                EvidenceRef e;
                e.height = r.get_u64();
                e.payload_index = r.get_u32();
                b.evidence.push_back(e);
            }
            return b;
        }
        case PayloadKind::revoke: {
            RevokeBody b;
            b.revoked_master_id = decode_digest(r);
            auto flag = r.get_u8();
            if (flag > 1) throw Error(Errc::malformed, "bad replacement flag");
            if (flag == 1) {
                Bytes inner = r.get_var32();
                ByteReader ir(ByteSpan(inner.data(), inner.size()));
                b.replacement = decode_credentials_body(ir);
                ir.expect_done();
            }
            return b;
        }
    }
    throw Error(Errc::malformed, "unknown payload tag");
}

}  // namespace detail

// Canonical bytes covered by the signed digest: tag, issuer, time, body.
inline Bytes payload_signing_bytes(const Payload& p) {
    ByteWriter w;
    w.put_u8(static_cast<std::uint8_t>(p.kind()));
    w.put_bytes(p.issuer_id.span());
    w.put_u64(p.issued_at);
    detail::encode_body(w, p.body);
    return w.take();
}

inline Digest payload_digest(const Payload& p) { return hash(payload_signing_bytes(p)); }

inline Bytes encode_payload(const Payload& p) {
    ByteWriter w;
    w.put_bytes(ByteSpan(payload_signing_bytes(p)));
    detail::encode_signature(w, p.signed_digest);
    return w.take();
}

inline Payload decode_payload(ByteSpan bytes) {
    ByteReader r(bytes);
    auto tag = r.get_u8();
    if (tag < 0x01 || tag > 0x06) throw Error(Errc::malformed, "unknown payload tag");
    Payload p;
    p.issuer_id = detail::decode_digest(r);
    p.issued_at = r.get_u64();
    p.body = detail::decode_body(static_cast<PayloadKind>(tag), r);
    p.signed_digest = detail::decode_signature(r);
    r.expect_done();
    return p;
}

inline void sign_payload(Payload& p, const KeyPair& key) {
    p.signed_digest = sign(key, payload_digest(p).span());
}

// Signature check only; chain-contextual rules live in the validation module.
inline bool payload_signature_ok(const Payload& p, ByteSpan public_key) {
    return verify(public_key, payload_digest(p).span(), p.signed_digest);
}

namespace detail {

inline const KeyPair& signing_key(const NodeIdentity& identity, const KeyPair* override_key,
                                  Hours now) {
    const KeyPair& key = override_key ? *override_key : identity.current_subkeys().signature_key;
    if (key.secret_key.empty()) throw Error(Errc::missing_key, "no signature subkey available");
    if (!key.valid_at(now)) throw Error(Errc::key_expired, "signature subkey not valid now");
    return key;
}

}  // namespace detail

inline CredentialsBody credentials_body_from(const NodeIdentity& identity) {
    const SubkeyGeneration& gen = identity.current_subkeys();
    CredentialsBody b;
    b.master_public = identity.master().public_key;
    b.signature_subkey_public = gen.signature_key.public_key;
    b.encryption_subkey_public = gen.encryption_key.public_key;
    b.subkey_valid_from = gen.signature_key.valid_from;
    b.subkey_valid_until = gen.signature_key.valid_until;
    b.signature_cert = gen.signature_cert;
    b.encryption_cert = gen.encryption_cert;
    return b;
}

inline Payload issue_credentials(const NodeIdentity& identity, Hours now) {
    Payload p;
    p.issuer_id = identity.id();
    p.issued_at = now;
    p.body = credentials_body_from(identity);
    sign_payload(p, detail::signing_key(identity, nullptr, now));
    return p;
}

// Rotates the identity's subkeys and emits the renewal, signed with the key
// that was current before the rotation (the one the chain still knows).
inline Payload issue_renew(NodeIdentity& identity, Hours now, const ChainParams& params,
                           const KeyPair* signer = nullptr) {
    const KeyPair signing = detail::signing_key(identity, signer, now);  // copy before rotate
    const SubkeyGeneration& next = identity.rotate_subkeys(now, params);
    Payload p;
    p.issuer_id = identity.id();
    p.issued_at = now;
    RenewBody b;
    b.signature_subkey_public = next.signature_key.public_key;
    b.encryption_subkey_public = next.encryption_key.public_key;
    b.subkey_valid_from = next.signature_key.valid_from;
    b.subkey_valid_until = next.signature_key.valid_until;
    b.signature_cert = next.signature_cert;
    b.encryption_cert = next.encryption_cert;
    p.body = std::move(b);
    sign_payload(p, signing);
    return p;
}

inline Payload issue_blame(const NodeIdentity& identity, const Digest& target,
                           std::uint16_t reason, Hours now, const KeyPair* signer = nullptr) {
    Payload p;
    p.issuer_id = identity.id();
    p.issued_at = now;
    p.body = BlameBody{target, reason};
    sign_payload(p, detail::signing_key(identity, signer, now));
    return p;
}

inline Payload issue_ban(const NodeIdentity& identity, const Digest& target,
                         std::vector<EvidenceRef> evidence, Hours now,
                         const KeyPair* signer = nullptr) {
    Payload p;
    p.issuer_id = identity.id();
    p.issued_at = now;
    p.body = BanBody{target, std::move(evidence)};
    sign_payload(p, detail::signing_key(identity, signer, now));
    return p;
}

struct RevokeResult {
    Payload payload;
    std::optional<NodeIdentity> successor;  // the re-keyed identity, when requested
};

// Retires the identity's master key. Signed with the master itself; when a
// replacement is requested, a successor identity (fresh master derived from
// the old secret) rides inline so miners can keep the node authenticated
// without a gap.
inline RevokeResult issue_revoke(const NodeIdentity& identity, Hours now,
                                 const ChainParams& params, bool with_replacement) {
    const KeyPair& master = identity.master();
    if (master.secret_key.empty()) throw Error(Errc::missing_key, "master secret unavailable");
    if (!master.valid_at(now)) throw Error(Errc::key_expired, "master key not valid now");

    RevokeResult out;
    RevokeBody b;
    b.revoked_master_id = identity.id();
    if (with_replacement) {
        ByteWriter seed_w;
        seed_w.put_bytes(ByteSpan(master.secret_key.data(), master.secret_key.size()));
        seed_w.put_bytes(to_bytes("batm.successor"));
        seed_w.put_u64(now);
        NodeIdentity successor =
            NodeIdentity::create(identity.descriptor(), now, params, hash(seed_w.data()).bytes);
        b.replacement = credentials_body_from(successor);
        out.successor = std::move(successor);
    }
    Payload p;
    p.issuer_id = identity.id();
    p.issued_at = now;
    p.body = std::move(b);
    sign_payload(p, master);
    out.payload = std::move(p);
    return out;
}

// Approval payload for a freshly mined block. `prev_random` is the random
// value committed by the previous block's approval payload.
inline Payload make_miner_approval(const NodeIdentity& miner,
                                   const std::array<std::uint8_t, 32>& new_random,
                                   const std::array<std::uint8_t, 32>& prev_random, Hours now,
                                   const KeyPair* signer = nullptr) {
    const KeyPair& key = detail::signing_key(miner, signer, now);
    MinerApprovalBody b;
    b.new_random = new_random;
    b.prev_random_signature = sign(key, hash(ByteSpan(prev_random.data(), prev_random.size())).span());
    Payload p;
    p.issuer_id = miner.id();
    p.issued_at = now;
    p.body = std::move(b);
    sign_payload(p, key);
    return p;
}

// Genesis approval: carries the seed random value, previous-signature empty.
inline Payload make_genesis_approval(const NodeIdentity& founder,
                                     const std::array<std::uint8_t, 32>& seed_random, Hours now) {
    MinerApprovalBody b;
    b.new_random = seed_random;
    Payload p;
    p.issuer_id = founder.id();
    p.issued_at = now;
    p.body = std::move(b);
    sign_payload(p, detail::signing_key(founder, nullptr, now));
    return p;
}

inline bool verify_prev_random_signature(const MinerApprovalBody& ma, ByteSpan miner_subkey_public,
                                         const std::array<std::uint8_t, 32>& prev_random) {
    return verify(miner_subkey_public,
                  hash(ByteSpan(prev_random.data(), prev_random.size())).span(),
                  ma.prev_random_signature);
}

}  // namespace batm
