#pragma once

#include <deque>
#include <filesystem>
#include <random>

#include "batm/scenario.hpp"
#include "batm/store.hpp"
#include "batm/trust.hpp"
#include "batm/validate.hpp"

namespace batm {

struct BanInterval {
    Hours from = 0;
    Hours until = 0;
};

// Key seed for a scenario node: a pure function of (scenario seed, name), so
// node identities are reproducible across runs and tools.
inline std::array<std::uint8_t, 32> node_key_seed(std::uint64_t scenario_seed,
                                                  const std::string& name) {
    ByteWriter w;
    w.put_bytes(to_bytes("batm.node"));
    w.put_u64(scenario_seed);
    w.put_bytes(to_bytes(name));
    return hash(w.data()).bytes;
}

// Everything a run produces. Replaying the same scenario with the same seed
// reproduces this byte for byte.
struct SimReport {
    Chain chain;
    std::vector<ReputationSeries> series;  // scenario node order
    std::vector<std::string> log;
    std::vector<std::pair<std::string, Digest>> node_ids;  // name -> id, scenario order
    std::unordered_map<Digest, std::vector<BanInterval>, DigestHash> ban_intervals;
    std::size_t stalled_hours = 0;

    std::size_t ban_count(const Digest& id) const {
        auto it = ban_intervals.find(id);
        return it == ban_intervals.end() ? 0 : it->second.size();
    }
};

// Deterministic discrete-event simulator. One candidate block per interval;
// the miner rotates round-robin among eligible nodes (the node that has not
// mined for the longest time goes next, so a node leaving its ban window is
// picked immediately). Payloads failing verification or trust gates are
// dropped with a logged reason; payloads orphaned by a reorg re-enter the
// pending queue once.
class Simulator {
public:
    explicit Simulator(Scenario scenario) : sc_(std::move(scenario)) {
        if (sc_.nodes.empty())
            throw Error(Errc::scenario_invalid, "scenario declares no nodes");
        require_valid_params(sc_.params);
        for (const auto& ev : sc_.events) events_.push_back(ev);
    }

    // Schedules a competing branch: at `at`, `node` re-mines the current tip
    // away and extends `length` alternative blocks; the longest-chain rule
    // then decides which branch survives.
    void inject_fork(Hours at, std::uint64_t length, const std::string& node) {
        if (at >= sc_.horizon) throw Error(Errc::scenario_invalid, "fork scheduled past horizon");
        if (!sc_.find_node(node)) throw Error(Errc::scenario_invalid, "unknown fork node " + node);
        ScenarioEvent ev;
        ev.at = at;
        ev.node = node;
        ev.action = ScenarioAction::fork;
        ev.fork_length = length;
        events_.push_back(ev);
    }

    SimReport run() {
        rng_.seed(sc_.seed);
        setup_nodes();
        make_genesis_block();
        for (Hours h = 0; h < sc_.horizon; ++h) {
            process_events(h);
            apply_ban_policy(h);
            if (h > 0 && h % sc_.block_interval == 0) produce_block(h);
            sample_reputation(h);
        }
        finalize_report();
        return std::move(report_);
    }

private:
    struct SimNode {
        NodeDescriptor descriptor;
        NodeIdentity identity;
        bool joined = false;
        bool has_mined = false;
        Hours last_mined = 0;
        std::size_t index = 0;
    };

    struct PendingPayload {
        Payload payload;
        std::string origin;  // for log lines
    };

    std::array<std::uint8_t, 32> random32() {
        std::array<std::uint8_t, 32> out;
        for (int i = 0; i < 4; ++i) {
            std::uint64_t v = rng_();
            for (int b = 0; b < 8; ++b)
                out[i * 8 + b] = static_cast<std::uint8_t>(v >> (56 - 8 * b));
        }
        return out;
    }

    void logf(const std::string& line) { report_.log.push_back(line); }

    static std::string short_id(const Digest& d) { return d.hex().substr(0, 12); }

    void setup_nodes() {
        nodes_.clear();
        for (std::size_t i = 0; i < sc_.nodes.size(); ++i) {
            SimNode n;
            n.descriptor = sc_.nodes[i];
            n.index = i;
            nodes_.push_back(std::move(n));
        }
        // The first declared node crafts the genesis block.
        nodes_[0].identity =
            NodeIdentity::create(nodes_[0].descriptor, 0, sc_.params, node_key_seed(sc_.seed, nodes_[0].descriptor.name));
        nodes_[0].joined = true;
    }

    void make_genesis_block() {
        Block genesis = make_genesis(sc_.params, nodes_[0].identity, random32());
        chain_ = chain_from_genesis(genesis);
        nodes_[0].has_mined = true;
        nodes_[0].last_mined = 0;
        logf("hour=0 event=genesis founder=" + nodes_[0].descriptor.name +
             " id=" + short_id(nodes_[0].identity.id()));
        if (nodes_[0].descriptor.is_service()) register_service(nodes_[0].descriptor);
    }

    void register_service(const NodeDescriptor& d) {
        try {
            registry_.register_service(d);
            logf("event=service_registered name=" + d.name);
        } catch (const Error& e) {
            logf(std::string("event=service_rejected name=") + d.name + " reason=" + e.what());
        }
    }

    SimNode* find_sim_node(const std::string& name) {
        for (auto& n : nodes_)
            if (n.descriptor.name == name) return &n;
        return nullptr;
    }

    // The signature subkey the chain currently expects from this node, or
    // null (with a log line) when it has none.
    const KeyPair* chain_signer(const SimNode& n, Hours h) {
        try {
            Bytes pub = LedgerView::at_time(chain_, h).key_for(n.identity.id(),
                                                               KeyRole::signature_subkey, h);
            const KeyPair* kp = n.identity.find_signature_key(ByteSpan(pub.data(), pub.size()));
            if (!kp)
                logf("hour=" + std::to_string(h) + " event=key_missing node=" + n.descriptor.name);
            return kp;
        } catch (const Error& e) {
            logf("hour=" + std::to_string(h) + " event=no_chain_key node=" + n.descriptor.name +
                 " reason=" + e.what());
            return nullptr;
        }
    }

    void enqueue(Payload p, std::string origin) {
        pending_.push_back(PendingPayload{std::move(p), std::move(origin)});
    }

    void process_events(Hours h) {
        for (const auto& ev : events_) {
            if (ev.at != h) continue;
            SimNode* node = find_sim_node(ev.node);
            if (!node) continue;  // parse already validated; defensive for injected forks
            switch (ev.action) {
                case ScenarioAction::join: handle_join(*node, h); break;
                case ScenarioAction::renew: handle_renew(*node, h); break;
                case ScenarioAction::blame: handle_blame(*node, ev.target, h); break;
                case ScenarioAction::misbehave: handle_misbehave(*node, h); break;
                case ScenarioAction::fork: handle_fork(*node, ev.fork_length, h); break;
            }
        }
    }

    void handle_join(SimNode& node, Hours h) {
        if (node.joined) {
            logf("hour=" + std::to_string(h) + " event=join_skipped node=" + node.descriptor.name +
                 " reason=already_joined");
            return;
        }
        node.identity = NodeIdentity::create(node.descriptor, h, sc_.params,
                                             node_key_seed(sc_.seed, node.descriptor.name));
        node.joined = true;
        enqueue(issue_credentials(node.identity, h), node.descriptor.name + " join");
        logf("hour=" + std::to_string(h) + " event=join node=" + node.descriptor.name +
             " id=" + short_id(node.identity.id()));
        if (node.descriptor.is_service()) register_service(node.descriptor);
    }

    void handle_renew(SimNode& node, Hours h) {
        if (!node.joined) return;
        const KeyPair* signer = chain_signer(node, h);
        if (!signer) return;
        enqueue(issue_renew(node.identity, h, sc_.params, signer), node.descriptor.name + " renew");
        logf("hour=" + std::to_string(h) + " event=renew_issued node=" + node.descriptor.name);
    }

    void handle_blame(SimNode& node, const std::string& target_name, Hours h) {
        SimNode* target = find_sim_node(target_name);
        if (!node.joined || !target || !target->joined) {
            logf("hour=" + std::to_string(h) + " event=blame_skipped node=" + node.descriptor.name +
                 " reason=blamer_or_target_not_joined");
            return;
        }
        const KeyPair* signer = chain_signer(node, h);
        if (!signer) return;
        enqueue(issue_blame(node.identity, target->identity.id(), 1, h, signer),
                node.descriptor.name + " blame " + target_name);
        logf("hour=" + std::to_string(h) + " event=blame_issued blamer=" + node.descriptor.name +
             " target=" + target_name);
    }

    // A misbehaving node submits a renewal signed with a key the chain does
    // not know. The payload is rejected at inclusion time, and the first
    // eligible peer responds with a blame.
    void handle_misbehave(SimNode& node, Hours h) {
        if (!node.joined) return;
        KeyPair rogue = detail::make_keypair(KeyRole::signature_subkey, random32(), h,
                                             h + sc_.params.t_subkey);
        Payload p;
        p.issuer_id = node.identity.id();
        p.issued_at = h;
        RenewBody b;
        b.signature_subkey_public = rogue.public_key;
        b.encryption_subkey_public = rogue.public_key;
        b.subkey_valid_from = h;
        b.subkey_valid_until = h + sc_.params.t_subkey;
        b.signature_cert = sign(rogue, subkey_cert_digest(rogue).span());
        b.encryption_cert = b.signature_cert;
        p.body = std::move(b);
        sign_payload(p, rogue);
        enqueue(std::move(p), node.descriptor.name + " misbehave");
        logf("hour=" + std::to_string(h) + " event=misbehave node=" + node.descriptor.name);

        for (SimNode* blamer : eligible_nodes(h)) {
            if (blamer == &node) continue;
            const KeyPair* signer = chain_signer(*blamer, h);
            if (!signer) continue;
            enqueue(issue_blame(blamer->identity, node.identity.id(), 2, h, signer),
                    blamer->descriptor.name + " blame(misbehave) " + node.descriptor.name);
            logf("hour=" + std::to_string(h) + " event=blame_issued blamer=" +
                 blamer->descriptor.name + " target=" + node.descriptor.name + " reason=misbehave");
            break;
        }
    }

    // Nodes allowed to mine at hour h, in round-robin order. Services
    // authenticate like nodes but never mine.
    std::vector<SimNode*> eligible_nodes(Hours h) {
        LedgerView view = LedgerView::for_candidate(chain_, h);
        std::vector<SimNode*> out;
        for (auto& n : nodes_) {
            if (!n.joined || n.descriptor.is_service()) continue;
            Digest id = n.identity.id();
            if (!view.is_authenticated(id)) continue;
            if (view.is_banned(id, h)) continue;
            bool has_key = false;
            try {
                Bytes pub = view.key_for(id, KeyRole::signature_subkey, h);
                has_key = n.identity.find_signature_key(ByteSpan(pub.data(), pub.size())) != nullptr;
            } catch (const Error&) {
                has_key = false;
            }
            if (!has_key) continue;
            if (sc_.trust_gates && !gate_ok(id, TrustEventKind::approval, h)) continue;
            out.push_back(&n);
        }
        std::sort(out.begin(), out.end(), [](const SimNode* a, const SimNode* b) {
            if (a->has_mined != b->has_mined) return !a->has_mined;
            if (a->has_mined && a->last_mined != b->last_mined)
                return a->last_mined < b->last_mined;
            return a->index < b->index;
        });
        return out;
    }

    // Default ban policy: two confirmed blames on one node within
    // t_banrecover of each other cause the next eligible peer to issue a
    // ban citing those blames.
    void apply_ban_policy(Hours h) {
        LedgerView view = LedgerView::at_time(chain_, h);
        for (auto& target : nodes_) {
            if (!target.joined) continue;
            Digest target_id = target.identity.id();
            const auto* rec = view.record(target_id);
            if (!rec || rec->blames_received.size() < 2) continue;
            if (view.is_banned(target_id, h)) continue;
            if (pending_ban_for(target_id)) continue;

            std::vector<const ledger_detail::BlameReceived*> fresh;
            for (const auto& b : rec->blames_received)
                if (!consumed_blames_.count({b.height, b.payload_index}))
                    fresh.push_back(&b);
            if (fresh.size() < 2) continue;
            const auto* b1 = fresh[fresh.size() - 2];
            const auto* b2 = fresh[fresh.size() - 1];
            if (b2->at - b1->at > sc_.params.t_banrecover) continue;

            for (SimNode* issuer : eligible_nodes(h)) {
                if (issuer->identity.id() == target_id) continue;
                if (sc_.trust_gates && !gate_ok(issuer->identity.id(), TrustEventKind::ban, h))
                    continue;
                const KeyPair* signer = chain_signer(*issuer, h);
                if (!signer) continue;
                std::vector<EvidenceRef> evidence{{b1->height, b1->payload_index},
                                                  {b2->height, b2->payload_index}};
                enqueue(issue_ban(issuer->identity, target_id, evidence, h, signer),
                        issuer->descriptor.name + " ban " + target.descriptor.name);
                consumed_blames_.insert({b1->height, b1->payload_index});
                consumed_blames_.insert({b2->height, b2->payload_index});
                logf("hour=" + std::to_string(h) + " event=ban_issued issuer=" +
                     issuer->descriptor.name + " target=" + target.descriptor.name);
                break;
            }
        }
    }

    bool pending_ban_for(const Digest& target) const {
        for (const auto& pp : pending_)
            if (pp.payload.kind() == PayloadKind::ban &&
                std::get<BanBody>(pp.payload.body).target_id == target)
                return true;
        return false;
    }

    bool tip_has_unconfirmed_work() const {
        for (const auto& p : chain_.tip().payloads)
            if (p.kind() != PayloadKind::miner_approval) return true;
        return false;
    }

    void produce_block(Hours h) {
        if (!sc_.mine_when_idle && pending_.empty() && !tip_has_unconfirmed_work()) return;
        auto eligible = eligible_nodes(h);
        if (eligible.empty()) {
            ++report_.stalled_hours;
            logf("hour=" + std::to_string(h) + " event=stall reason=no_eligible_miner");
            return;
        }
        SimNode& miner = *eligible.front();
        Digest miner_id = miner.identity.id();

        LedgerView view = LedgerView::for_candidate(chain_, h);
        validate_detail::Context ctx{view, {}};
        std::vector<Payload> selected;
        std::deque<PendingPayload> keep;
        std::size_t budget = sc_.params.max_block_bytes > 2048
                                 ? sc_.params.max_block_bytes - 2048
                                 : sc_.params.max_block_bytes;
        std::size_t used = 0;
        while (!pending_.empty()) {
            PendingPayload pp = std::move(pending_.front());
            pending_.pop_front();
            const Payload& p = pp.payload;
            if (p.issuer_id == miner_id) {  // the miner may not include its own events
                keep.push_back(std::move(pp));
                continue;
            }
            std::size_t sz = encode_payload(p).size() + 4;
            if (used + sz > budget) {
                keep.push_back(std::move(pp));
                continue;
            }
            if (sc_.trust_gates && !passes_trust_gate(p, miner_id, h)) {
                if (p.kind() == PayloadKind::credentials) {
                    keep.push_back(std::move(pp));  // gate binds the miner, retry later
                } else {
                    logf("hour=" + std::to_string(h) + " event=payload_rejected origin=\"" +
                         pp.origin + "\" reason=trust_gate");
                }
                continue;
            }
            CheckResult pr = verify_payload_in_context(ctx, p, h, nullptr);
            if (!pr) {
                logf("hour=" + std::to_string(h) + " event=payload_rejected origin=\"" + pp.origin +
                     "\" reason=\"" + pr.joined() + "\"");
                continue;
            }
            ctx.apply(p, h);
            used += sz;
            selected.push_back(p);
        }
        pending_ = std::move(keep);

        Block block = mine_block(chain_, miner.identity, selected, h, random32());
        push_block(chain_, block);
        miner.has_mined = true;
        miner.last_mined = h;
        logf("hour=" + std::to_string(h) + " event=block_mined height=" +
             std::to_string(chain_.length() - 1) + " miner=" + miner.descriptor.name +
             " payloads=" + std::to_string(block.payloads.size()));
        for (const auto& p : selected)
            logf("hour=" + std::to_string(h) + " event=payload_accepted kind=" +
                 payload_kind_name(p.kind()) + " issuer=" + short_id(p.issuer_id) + " height=" +
                 std::to_string(chain_.length() - 1));
    }

    // Trust gate with a bootstrap carve-out: a node whose credentials sit in
    // the not-yet-confirmed tip has no confirmed history to judge, so it acts
    // at its base trust value. Without this the founder could never mine
    // block one and the chain would deadlock.
    bool gate_ok(const Digest& id, TrustEventKind kind, Hours h) {
        AuthState st = auth_state(id, chain_, h);
        if (st.status == AuthStatus::pending) return true;
        if (st.status != AuthStatus::authenticated && st.status != AuthStatus::banned) return false;
        return permitted(chain_, id, kind, h, sc_.params);
    }

    // Renew/blame/ban are gated on the issuer's standing; including someone
    // else's credentials is gated on the miner (it vouches for the newcomer).
    bool passes_trust_gate(const Payload& p, const Digest& miner_id, Hours h) {
        switch (p.kind()) {
            case PayloadKind::credentials:
                return gate_ok(miner_id, TrustEventKind::auth, h);
            case PayloadKind::renew:
                return gate_ok(p.issuer_id, TrustEventKind::renew, h);
            case PayloadKind::blame:
                return gate_ok(p.issuer_id, TrustEventKind::blame, h);
            case PayloadKind::ban:
                return gate_ok(p.issuer_id, TrustEventKind::ban, h);
            default:
                return true;
        }
    }

    void handle_fork(SimNode& node, std::uint64_t length, Hours h) {
        logf("hour=" + std::to_string(h) + " event=fork_injected node=" + node.descriptor.name +
             " length=" + std::to_string(length));
        if (length == 0) {
            logf("hour=" + std::to_string(h) + " event=fork_noop reason=zero_length");
            return;
        }
        if (chain_.length() < 2) {
            logf("hour=" + std::to_string(h) + " event=fork_noop reason=chain_too_short");
            return;
        }
        Chain branch;
        branch.params = chain_.params;
        branch.blocks.assign(chain_.blocks.begin(), chain_.blocks.end() - 1);
        try {
            for (std::uint64_t k = 0; k < length; ++k) {
                Block alt = mine_block(branch, node.identity, {}, h, random32());
                push_block(branch, alt);
            }
        } catch (const Error& e) {
            logf("hour=" + std::to_string(h) + " event=fork_failed reason=" + e.what());
            return;
        }
        // The branch is static while the main chain keeps growing, so it can
        // only ever win if it is strictly longer right now.
        if (branch.length() <= chain_.length()) {
            logf("hour=" + std::to_string(h) + " event=fork_lost main_length=" +
                 std::to_string(chain_.length()) + " branch_length=" + std::to_string(branch.length()));
            return;
        }
        // Reorg: the old tip is orphaned; its non-approval payloads return
        // to the pending queue exactly once.
        const Block& orphaned = chain_.tip();
        std::size_t requeued = 0;
        std::deque<PendingPayload> fresh;
        for (const auto& p : orphaned.payloads) {
            if (p.kind() == PayloadKind::miner_approval) continue;
            Digest d = payload_digest(p);
            if (!requeued_digests_.insert(d).second) {
                logf("hour=" + std::to_string(h) + " event=orphan_dropped reason=already_requeued" +
                     " payload=" + short_id(d));
                continue;
            }
            fresh.push_back(PendingPayload{p, "orphaned height " +
                                                  std::to_string(chain_.length() - 1)});
            ++requeued;
        }
        for (auto& pp : pending_) fresh.push_back(std::move(pp));
        pending_ = std::move(fresh);
        chain_ = std::move(branch);
        logf("hour=" + std::to_string(h) + " event=reorg new_length=" +
             std::to_string(chain_.length()) + " orphaned_payloads=" + std::to_string(requeued));
    }

    void sample_reputation(Hours h) {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            double value = 0.0;
            if (nodes_[i].joined) {
                try {
                    value = reputation(chain_, nodes_[i].identity.id(), h, sc_.params);
                } catch (const Error& e) {
                    if (e.code() != Errc::not_authenticated) throw;
                }
            }
            if (report_.series.size() <= i) report_.series.resize(nodes_.size());
            report_.series[i].samples.emplace_back(h, value);
        }
    }

    void finalize_report() {
        CheckResult full = revalidate_chain(chain_);
        if (!full)
            throw Error(Errc::validation_failed, "post-run revalidation failed: " + full.joined());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            Digest id = nodes_[i].joined ? nodes_[i].identity.id() : Digest{};
            report_.node_ids.emplace_back(nodes_[i].descriptor.name, id);
            report_.series[i].node_id = id;
        }
        // Ban windows straight from the confirmed chain.
        for (std::size_t j = 0; j + 1 < chain_.length(); ++j) {
            for (const auto& p : chain_.blocks[j].payloads) {
                if (p.kind() != PayloadKind::ban) continue;
                Hours t = chain_.blocks[j].header.timestamp;
                report_.ban_intervals[std::get<BanBody>(p.body).target_id].push_back(
                    {t, t + sc_.params.t_banrecover});
            }
        }
        report_.chain = chain_;
    }

    Scenario sc_;
    std::vector<ScenarioEvent> events_;
    std::vector<SimNode> nodes_;
    Chain chain_;
    std::deque<PendingPayload> pending_;
    std::unordered_set<Digest, DigestHash> requeued_digests_;
    std::set<std::pair<std::uint64_t, std::uint32_t>> consumed_blames_;
    ServiceRegistry registry_;
    SimReport report_;
    std::mt19937_64 rng_;
};

inline SimReport run_simulation(const Scenario& scenario) { return Simulator(scenario).run(); }

// Writes chain.batm, reputation.csv, and actions.log into `dir`.
inline void export_report(const SimReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(Errc::io_error, "cannot create " + dir.string());
    save_chain(report.chain, dir / "chain.batm");
    {
        std::ofstream csv(dir / "reputation.csv", std::ios::binary | std::ios::trunc);
        if (!csv) throw Error(Errc::io_error, "cannot write reputation.csv");
        write_reputation_csv(report.series, csv);
    }
    {
        std::ofstream log(dir / "actions.log", std::ios::binary | std::ios::trunc);
        if (!log) throw Error(Errc::io_error, "cannot write actions.log");
        for (const auto& line : report.log) log << line << '\n';
    }
}

}  // namespace batm
