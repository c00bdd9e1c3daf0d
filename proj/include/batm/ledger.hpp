#pragma once

#include <unordered_map>
#include <unordered_set>

#include "batm/chain.hpp"

namespace batm {

enum class AuthStatus : std::uint8_t { unknown, pending, authenticated, banned, revoked };

inline const char* auth_status_name(AuthStatus s) {
    switch (s) {
        case AuthStatus::unknown: return "unknown";
        case AuthStatus::pending: return "pending";
        case AuthStatus::authenticated: return "authenticated";
        case AuthStatus::banned: return "banned";
        case AuthStatus::revoked: return "revoked";
    }
    return "?";
}

// Authentication state derived purely from confirmed chain contents. A ban
// is a mining prohibition, not a de-authentication: banned nodes still count
// as authenticated peers until the recovery timer runs out.
struct AuthState {
    AuthStatus status = AuthStatus::unknown;
    std::optional<Hours> authenticated_at;  // first block after the credentials block
    std::optional<Hours> banned_until;
    std::optional<Digest> successor;  // set when revoked with replacement credentials
};

namespace ledger_detail {

struct KeyWindow {
    Bytes public_key;
    Hours from = 0;
    Hours until = 0;
};

struct BlameReceived {
    Digest blamer;
    Hours at = 0;
    std::uint64_t height = 0;
    std::uint32_t payload_index = 0;
};

struct NodeRecord {
    std::optional<std::uint64_t> cp_height;
    Hours cp_block_time = 0;
    std::optional<Hours> t_first;  // timestamp of the block after the credentials block
    Bytes master_public;
    Hours master_from = 0;
    Hours master_until = 0;
    std::vector<KeyWindow> signature_keys;  // in confirmation order
    std::vector<KeyWindow> encryption_keys;
    std::vector<Hours> renew_times;
    std::vector<BlameReceived> blames_received;
    std::unordered_map<Digest, Hours, DigestHash> last_blame_on;  // target -> latest blame time
    std::vector<Hours> ban_times;
    std::optional<Hours> revoked_at;
    std::optional<Digest> successor;

    bool has_credentials() const { return cp_height.has_value(); }
};

}  // namespace ledger_detail

// Snapshot of everything the confirmed part of a chain says about its nodes,
// as of a given hour. Two construction modes:
//  - at_time: block j counts iff block j+1 exists with timestamp <= at
//    (standalone queries);
//  - for_candidate: every stored block counts, because the block being
//    validated is the successor that confirms the current tip.
class LedgerView {
public:
    using NodeRecord = ledger_detail::NodeRecord;

    static LedgerView at_time(const Chain& chain, Hours at) {
        LedgerView v(chain, at);
        std::size_t confirmed = 0;
        while (confirmed + 1 < chain.length() &&
               chain.blocks[confirmed + 1].header.timestamp <= at)
            ++confirmed;
        v.build(confirmed, /*fill_t_first=*/true);
        // Unconfirmed credentials (in existing blocks as of `at`) show as pending.
        for (std::size_t j = confirmed; j < chain.length(); ++j) {
            if (chain.blocks[j].header.timestamp > at) break;
            for (const auto& p : chain.blocks[j].payloads) {
                if (p.kind() == PayloadKind::credentials) v.pending_.insert(p.issuer_id);
                if (p.kind() == PayloadKind::revoke) {
                    const auto& rb = std::get<RevokeBody>(p.body);
                    if (rb.replacement)
                        v.pending_.insert(key_id(ByteSpan(rb.replacement->master_public.data(),
                                                          rb.replacement->master_public.size())));
                }
            }
        }
        return v;
    }

    static LedgerView for_candidate(const Chain& chain, Hours candidate_time) {
        LedgerView v(chain, candidate_time);
        v.build(chain.length(), /*fill_t_first=*/false);
        return v;
    }

    const Chain& chain() const { return *chain_; }
    Hours at() const { return at_; }
    std::size_t confirmed_blocks() const { return confirmed_; }

    const NodeRecord* record(const Digest& id) const {
        auto it = nodes_.find(id);
        return it == nodes_.end() ? nullptr : &it->second;
    }

    AuthState auth_state(const Digest& id) const {
        AuthState s;
        const NodeRecord* rec = record(id);
        if (!rec || !rec->has_credentials()) {
            s.status = pending_.count(id) ? AuthStatus::pending : AuthStatus::unknown;
            return s;
        }
        s.authenticated_at = rec->t_first;
        if (rec->revoked_at && *rec->revoked_at <= at_) {
            s.status = AuthStatus::revoked;
            s.successor = rec->successor;
            return s;
        }
        Hours until = 0;
        for (Hours b : rec->ban_times)
            until = std::max(until, b + chain_->params.t_banrecover);
        if (until > 0) s.banned_until = until;
        s.status = (until > at_) ? AuthStatus::banned : AuthStatus::authenticated;
        return s;
    }

    // Authenticated and not revoked; bans do not remove authentication.
    bool is_authenticated(const Digest& id) const {
        const NodeRecord* rec = record(id);
        return rec && rec->has_credentials() && !(rec->revoked_at && *rec->revoked_at <= at_);
    }

    bool is_banned(const Digest& id, Hours t) const {
        const NodeRecord* rec = record(id);
        if (!rec) return false;
        for (Hours b : rec->ban_times)
            if (b <= t && t < b + chain_->params.t_banrecover) return true;
        return false;
    }

    // The public key that is current for the node at hour t. A renewed
    // window supersedes its predecessor as soon as it opens, and expired
    // windows are never returned.
    const Bytes& key_for(const Digest& id, KeyRole role, Hours t) const {
        const NodeRecord* rec = record(id);
        if (!rec || !rec->has_credentials())
            throw Error(Errc::no_such_node, "no confirmed credentials for node");
        if (role == KeyRole::master) {
            if (t < rec->master_from || t >= rec->master_until)
                throw Error(Errc::no_valid_key, "master key not valid at that time");
            return rec->master_public;
        }
        const auto& windows =
            (role == KeyRole::signature_subkey) ? rec->signature_keys : rec->encryption_keys;
        const ledger_detail::KeyWindow* current = nullptr;
        for (const auto& w : windows)
            if (w.from <= t) current = &w;  // later windows supersede earlier ones
        if (!current || t >= current->until)
            throw Error(Errc::no_valid_key, "no subkey valid at that time");
        return current->public_key;
    }

    std::size_t n_auth() const {
        std::size_t n = 0;
        for (const auto& [id, rec] : nodes_)
            if (rec.has_credentials() && !(rec.revoked_at && *rec.revoked_at <= at_)) ++n;
        return n;
    }

    // Confirmed payload by position; null when out of confirmed range.
    const Payload* payload_at(std::uint64_t height, std::uint32_t index) const {
        if (height >= confirmed_) return nullptr;
        const auto& payloads = chain_->blocks[height].payloads;
        if (index >= payloads.size()) return nullptr;
        return &payloads[index];
    }

    // Issuer of block j's miner approval, for confirmed blocks.
    const std::vector<Digest>& block_miners() const { return block_miners_; }

    const std::unordered_map<Digest, NodeRecord, DigestHash>& nodes() const { return nodes_; }

private:
    LedgerView(const Chain& chain, Hours at) : chain_(&chain), at_(at) {}

    NodeRecord& ensure(const Digest& id) { return nodes_[id]; }

    void adopt_credentials(NodeRecord& rec, const CredentialsBody& cb, std::uint64_t height,
                           Hours block_time, std::optional<Hours> t_first) {
        rec.cp_height = height;
        rec.cp_block_time = block_time;
        rec.t_first = t_first;
        rec.master_public = cb.master_public;
        rec.master_from = block_time;
        rec.master_until = block_time + chain_->params.t_masterkey;
        rec.signature_keys.push_back(
            {cb.signature_subkey_public, cb.subkey_valid_from, cb.subkey_valid_until});
        rec.encryption_keys.push_back(
            {cb.encryption_subkey_public, cb.subkey_valid_from, cb.subkey_valid_until});
    }

    void build(std::size_t confirmed, bool fill_t_first) {
        confirmed_ = confirmed;
        block_miners_.resize(confirmed);
        for (std::size_t j = 0; j < confirmed; ++j) {
            const Block& blk = chain_->blocks[j];
            Hours bt = blk.header.timestamp;
            std::optional<Hours> t_first;
            if (fill_t_first || j + 1 < chain_->length())
                t_first = chain_->blocks[j + 1].header.timestamp;
            for (std::uint32_t idx = 0; idx < blk.payloads.size(); ++idx) {
                const Payload& p = blk.payloads[idx];
                switch (p.kind()) {
                    case PayloadKind::miner_approval:
                        block_miners_[j] = p.issuer_id;
                        break;
                    case PayloadKind::credentials:
                        adopt_credentials(ensure(p.issuer_id), std::get<CredentialsBody>(p.body),
                                          j, bt, t_first);
                        break;
                    case PayloadKind::renew: {
                        const auto& rb = std::get<RenewBody>(p.body);
                        NodeRecord& rec = ensure(p.issuer_id);
                        rec.signature_keys.push_back(
                            {rb.signature_subkey_public, rb.subkey_valid_from, rb.subkey_valid_until});
                        rec.encryption_keys.push_back(
                            {rb.encryption_subkey_public, rb.subkey_valid_from, rb.subkey_valid_until});
                        rec.renew_times.push_back(bt);
                        break;
                    }
                    case PayloadKind::blame: {
                        const auto& bb = std::get<BlameBody>(p.body);
                        ensure(bb.target_id)
                            .blames_received.push_back({p.issuer_id, bt, j, idx});
                        ensure(p.issuer_id).last_blame_on[bb.target_id] = bt;
                        break;
                    }
                    case PayloadKind::ban:
                        ensure(std::get<BanBody>(p.body).target_id).ban_times.push_back(bt);
                        break;
                    case PayloadKind::revoke: {
                        const auto& rb = std::get<RevokeBody>(p.body);
                        NodeRecord& rec = ensure(rb.revoked_master_id);
                        rec.revoked_at = bt;
                        if (rb.replacement) {
                            Digest succ = key_id(ByteSpan(rb.replacement->master_public.data(),
                                                          rb.replacement->master_public.size()));
                            rec.successor = succ;
                            adopt_credentials(ensure(succ), *rb.replacement, j, bt, t_first);
                        }
                        break;
                    }
                }
            }
        }
    }

    const Chain* chain_;
    Hours at_;
    std::size_t confirmed_ = 0;
    std::unordered_map<Digest, NodeRecord, DigestHash> nodes_;
    std::unordered_set<Digest, DigestHash> pending_;
    std::vector<Digest> block_miners_;
};

// Authentication state of a node at a given hour, recomputed from chain
// contents alone.
inline AuthState auth_state(const Digest& node_id, const Chain& chain, Hours at) {
    return LedgerView::at_time(chain, at).auth_state(node_id);
}

// The node's public key of the given role that was current at `at`.
inline Bytes key_for(const Digest& node_id, KeyRole role, Hours at, const Chain& chain) {
    return LedgerView::at_time(chain, at).key_for(node_id, role, at);
}

}  // namespace batm
