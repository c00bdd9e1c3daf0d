#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <mutex>
#include <utility>

#include <sodium.h>

#include "batm/bytes.hpp"
#include "batm/errors.hpp"
#include "batm/params.hpp"

namespace batm {

inline void crypto_init() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw Error(Errc::io_error, "libsodium init failed");
    });
}

// 32-byte SHA-256 digest. Equality is byte equality; ordering is lexicographic
// so digests can serve as deterministic tie-breakers.
struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    bool is_zero() const {
        return std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; });
    }
    std::string hex() const { return to_hex(ByteSpan(bytes.data(), bytes.size())); }
    ByteSpan span() const { return ByteSpan(bytes.data(), bytes.size()); }

    static Digest from_hex(std::string_view s) {
        Bytes raw = batm::from_hex(s);
        if (raw.size() != 32) throw Error(Errc::malformed, "digest must be 32 bytes");
        Digest d;
        std::copy(raw.begin(), raw.end(), d.bytes.begin());
        return d;
    }
};

struct DigestHash {
    std::size_t operator()(const Digest& d) const {
        std::size_t v;
        std::memcpy(&v, d.bytes.data(), sizeof v);
        return v;
    }
};

inline Digest hash(ByteSpan data) {
    crypto_init();
    Digest d;
    crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
    return d;
}

inline Digest hash(const Bytes& data) { return hash(ByteSpan(data.data(), data.size())); }

inline Digest hash_concat(const Digest& a, const Digest& b) {
    std::array<std::uint8_t, 64> buf;
    std::copy(a.bytes.begin(), a.bytes.end(), buf.begin());
    std::copy(b.bytes.begin(), b.bytes.end(), buf.begin() + 32);
    return hash(ByteSpan(buf.data(), buf.size()));
}

// Binary Merkle tree over the given leaf byte strings. Leaf node = hash(leaf),
// internal node = hash(left || right); an odd level duplicates its last digest.
inline Digest merkle_root(const std::vector<Bytes>& leaves) {
    if (leaves.empty()) throw Error(Errc::empty_leaves, "merkle tree needs at least one leaf");
    std::vector<Digest> level;
    level.reserve(leaves.size());
    for (const auto& leaf : leaves) level.push_back(hash(leaf));
    while (level.size() > 1) {
        std::vector<Digest> next;
        next.reserve((level.size() + 1) / 2);
        for (std::size_t i = 0; i < level.size(); i += 2) {
            const Digest& left = level[i];
            const Digest& right = (i + 1 < level.size()) ? level[i + 1] : level[i];
            next.push_back(hash_concat(left, right));
        }
        level = std::move(next);
    }
    return level[0];
}

enum class KeyRole : std::uint8_t {
    master = 1,
    signature_subkey = 2,
    encryption_subkey = 3,
};

// Public/secret key pair with a validity window in hours. Key and signature
// bytes are opaque to every caller; the scheme is sealed inside this module.
struct KeyPair {
    KeyRole role = KeyRole::master;
    Bytes public_key;
    Bytes secret_key;
    Hours valid_from = 0;
    Hours valid_until = 0;

    bool valid_at(Hours t) const { return t >= valid_from && t < valid_until; }
};

inline Digest key_id(ByteSpan public_key) { return hash(public_key); }
inline Digest key_id(const KeyPair& kp) { return key_id(ByteSpan(kp.public_key.data(), kp.public_key.size())); }

// Detached signature plus the id (public-key hash) of the key that made it.
struct Signature {
    Digest signer_key_id;
    Bytes bytes;

    bool empty() const { return bytes.empty() && signer_key_id.is_zero(); }
    bool operator==(const Signature&) const = default;
};

namespace detail {

inline KeyPair make_keypair(KeyRole role, const std::array<std::uint8_t, 32>& seed,
                            Hours from, Hours until) {
    crypto_init();
    KeyPair kp;
    kp.role = role;
    kp.valid_from = from;
    kp.valid_until = until;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

inline std::array<std::uint8_t, 32> random_seed() {
    crypto_init();
    std::array<std::uint8_t, 32> seed;
    randombytes_buf(seed.data(), seed.size());
    return seed;
}

// Seed for a subkey: bound to the master secret, the role, and the hour it
// was derived, so the whole key schedule is reproducible from the master.
inline std::array<std::uint8_t, 32> subkey_seed(const KeyPair& master, KeyRole role, Hours now) {
    ByteWriter w;
    w.put_bytes(ByteSpan(master.secret_key.data(), master.secret_key.size()));
    w.put_u8(static_cast<std::uint8_t>(role));
    w.put_u64(now);
    return hash(w.data()).bytes;
}

}  // namespace detail

// Fresh long-lived identity key, valid for t_masterkey from `now`.
inline KeyPair generate_master(Hours now, const ChainParams& params,
                               const std::array<std::uint8_t, 32>& seed) {
    return detail::make_keypair(KeyRole::master, seed, now, now + params.t_masterkey);
}

inline KeyPair generate_master(Hours now, const ChainParams& params) {
    return generate_master(now, params, detail::random_seed());
}

inline Signature sign(const KeyPair& key, ByteSpan data) {
    crypto_init();
    if (key.secret_key.size() != crypto_sign_SECRETKEYBYTES)
        throw Error(Errc::missing_key, "no usable secret key");
    Signature sig;
    sig.signer_key_id = key_id(key);
    sig.bytes.resize(crypto_sign_BYTES);
    unsigned long long len = 0;
    crypto_sign_detached(sig.bytes.data(), &len, data.data(), data.size(), key.secret_key.data());
    sig.bytes.resize(len);
    return sig;
}

inline bool verify(ByteSpan public_key, ByteSpan data, const Signature& sig) {
    crypto_init();
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES) return false;
    if (sig.bytes.size() != crypto_sign_BYTES) return false;
    if (sig.signer_key_id != key_id(public_key)) return false;
    return crypto_sign_verify_detached(sig.bytes.data(), data.data(), data.size(),
                                       public_key.data()) == 0;
}

inline bool verify(const KeyPair& key, ByteSpan data, const Signature& sig) {
    return verify(ByteSpan(key.public_key.data(), key.public_key.size()), data, sig);
}

// Message a master key signs to certify a subkey: role, public key, window.
inline Digest subkey_cert_digest(const KeyPair& subkey) {
    ByteWriter w;
    w.put_u8(static_cast<std::uint8_t>(subkey.role));
    w.put_var16(ByteSpan(subkey.public_key.data(), subkey.public_key.size()));
    w.put_u64(subkey.valid_from);
    w.put_u64(subkey.valid_until);
    return hash(w.data());
}

inline Digest subkey_cert_digest(KeyRole role, ByteSpan public_key, Hours from, Hours until) {
    ByteWriter w;
    w.put_u8(static_cast<std::uint8_t>(role));
    w.put_var16(public_key);
    w.put_u64(from);
    w.put_u64(until);
    return hash(w.data());
}

inline Signature certify_subkey(const KeyPair& master, const KeyPair& subkey) {
    Digest d = subkey_cert_digest(subkey);
    return sign(master, d.span());
}

struct SubkeyPair {
    KeyPair signature_key;
    KeyPair encryption_key;
    Signature signature_cert;   // master over signature_key
    Signature encryption_cert;  // master over encryption_key
};

// Rotating subkeys, valid for t_subkey from `now`, certified by the master.
// Derivation is a pure function of (master secret, role, now).
inline SubkeyPair derive_subkeys(const KeyPair& master, Hours now, const ChainParams& params) {
    if (master.role != KeyRole::master)
        throw Error(Errc::missing_key, "subkeys must be derived from a master key");
    if (now >= master.valid_until)
        throw Error(Errc::master_expired, "master key expired");
    if (now < master.valid_from)
        throw Error(Errc::master_expired, "master key not yet valid");
    SubkeyPair out;
    out.signature_key = detail::make_keypair(KeyRole::signature_subkey,
                                             detail::subkey_seed(master, KeyRole::signature_subkey, now),
                                             now, now + params.t_subkey);
    out.encryption_key = detail::make_keypair(KeyRole::encryption_subkey,
                                              detail::subkey_seed(master, KeyRole::encryption_subkey, now),
                                              now, now + params.t_subkey);
    out.signature_cert = certify_subkey(master, out.signature_key);
    out.encryption_cert = certify_subkey(master, out.encryption_key);
    return out;
}

}  // namespace batm
