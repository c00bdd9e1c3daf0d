#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "batm/ledger.hpp"

namespace batm {

enum class TrustEventKind : std::uint8_t { approval, auth, renew, blame, ban };

inline const char* trust_event_name(TrustEventKind k) {
    switch (k) {
        case TrustEventKind::approval: return "approval";
        case TrustEventKind::auth: return "auth";
        case TrustEventKind::renew: return "renew";
        case TrustEventKind::blame: return "blame";
        case TrustEventKind::ban: return "ban";
    }
    return "?";
}

inline std::int64_t event_factor(TrustEventKind k, const ChainParams& p) {
    switch (k) {
        case TrustEventKind::approval: return p.c_approval;
        case TrustEventKind::auth: return p.c_auth;
        case TrustEventKind::renew: return p.c_renew;
        case TrustEventKind::blame: return p.c_blame;
        case TrustEventKind::ban: return p.c_ban;
    }
    return 0;
}

// A behavioural event read off the chain: something the node did (mined,
// renewed) or something done to it (blame, ban), stamped with its block hour.
struct TrustEvent {
    TrustEventKind kind = TrustEventKind::approval;
    Digest subject_id;
    Hours at = 0;

    bool operator==(const TrustEvent&) const = default;
};

// Per-node reputation samples over time, hours strictly increasing.
struct ReputationSeries {
    Digest node_id;
    std::vector<std::pair<Hours, double>> samples;
};

// Behavioural events for one node from confirmed payloads with block time
// <= at. Mining a block yields an approval event; credentials yield no event
// (authentication is the constant term of the reputation formula).
inline std::vector<TrustEvent> events_for(const Chain& chain, const Digest& node_id, Hours at) {
    std::vector<TrustEvent> events;
    for (std::size_t j = 0; j + 1 < chain.length(); ++j) {
        if (chain.blocks[j + 1].header.timestamp > at) break;  // successor not yet mined
        const Block& blk = chain.blocks[j];
        Hours bt = blk.header.timestamp;
        for (const auto& p : blk.payloads) {
            switch (p.kind()) {
                case PayloadKind::miner_approval:
                    if (p.issuer_id == node_id)
                        events.push_back({TrustEventKind::approval, node_id, bt});
                    break;
                case PayloadKind::renew:
                    if (p.issuer_id == node_id)
                        events.push_back({TrustEventKind::renew, node_id, bt});
                    break;
                case PayloadKind::blame:
                    if (std::get<BlameBody>(p.body).target_id == node_id)
                        events.push_back({TrustEventKind::blame, node_id, bt});
                    break;
                case PayloadKind::ban:
                    if (std::get<BanBody>(p.body).target_id == node_id)
                        events.push_back({TrustEventKind::ban, node_id, bt});
                    break;
                default:
                    break;
            }
        }
    }
    return events;
}

inline std::vector<TrustEvent> events_for(const Chain& chain, const Digest& node_id) {
    return events_for(chain, node_id, std::numeric_limits<Hours>::max());
}

// Sum of event factors for the node's events at exactly hour t.
inline double block_coefficient(const std::vector<TrustEvent>& events, const Digest& node_id,
                                Hours t, const ChainParams& params) {
    double c = 0.0;
    for (const auto& e : events)
        if (e.subject_id == node_id && e.at == t) c += static_cast<double>(event_factor(e.kind, params));
    return c;
}

// Reputation formula core: the authentication constant plus every event in
// [t_first, t_now], exponentially decayed with constant decay_tau.
inline double reputation_from_events(const std::vector<TrustEvent>& events, Hours t_first,
                                     Hours t_now, const ChainParams& params) {
    double rep = static_cast<double>(params.c_auth);
    double tau = static_cast<double>(params.decay_tau);
    for (const auto& e : events) {
        if (e.at < t_first || e.at > t_now) continue;
        double age = static_cast<double>(t_now - e.at);
        rep += static_cast<double>(event_factor(e.kind, params)) * std::exp(-age / tau);
    }
    return rep;
}

// Reputation of a node at t_now, from confirmed chain contents only. The
// node must have been authenticated by then (bans do not suspend the score).
inline double reputation(const Chain& chain, const Digest& node_id, Hours t_now,
                         const ChainParams& params) {
    AuthState st = LedgerView::at_time(chain, t_now).auth_state(node_id);
    if (st.status != AuthStatus::authenticated && st.status != AuthStatus::banned)
        throw Error(Errc::not_authenticated,
                    std::string("node is ") + auth_status_name(st.status) + " at that time");
    return reputation_from_events(events_for(chain, node_id, t_now), *st.authenticated_at, t_now,
                                  params);
}

// Minimum reputation required to be trusted with an action of the given
// kind, scaled by how many nodes are currently authenticated.
inline double trust_level(TrustEventKind kind, std::size_t n_auth, const ChainParams& params) {
    if (n_auth < 1) throw Error(Errc::out_of_range, "n_auth must be at least 1");
    double c = static_cast<double>(event_factor(kind, params));
    if (c == 0.0) throw Error(Errc::zero_coefficient,
                              std::string("event factor for ") + trust_event_name(kind) + " is zero");
    return c + params.a_app * static_cast<double>(n_auth - 1) / c;
}

// Threshold comparison is inclusive: sitting exactly on the trust level is
// enough.
inline bool meets_trust_level(double reputation_value, double threshold) {
    return reputation_value >= threshold;
}

inline bool permitted(const Chain& chain, const Digest& node_id, TrustEventKind kind, Hours at,
                      const ChainParams& params) {
    double rep;
    try {
        rep = reputation(chain, node_id, at, params);
    } catch (const Error& e) {
        if (e.code() == Errc::not_authenticated) return false;
        throw;
    }
    std::size_t n = LedgerView::at_time(chain, at).n_auth();
    return meets_trust_level(rep, trust_level(kind, n, params));
}

// A hosted service's reputation echoes onto the host: deviations of the
// service score from the base trust value shift the host's effective score
// by echo_weight.
inline double service_reputation_echo(const Chain& chain, const Digest& service_id,
                                      const Digest& host_id, Hours t_now,
                                      const ChainParams& params) {
    double host = reputation(chain, host_id, t_now, params);
    double service = reputation(chain, service_id, t_now, params);
    return host + params.echo_weight * (service - static_cast<double>(params.c_auth));
}

inline std::string format_reputation(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

// CSV rows ordered by hour, then by series order. Values are fixed-point
// with six decimals.
inline void write_reputation_csv(const std::vector<ReputationSeries>& series, std::ostream& out) {
    out << "hour,node_id,reputation\n";
    std::size_t max_len = 0;
    for (const auto& s : series) max_len = std::max(max_len, s.samples.size());
    for (std::size_t i = 0; i < max_len; ++i) {
        for (const auto& s : series) {
            if (i >= s.samples.size()) continue;
            out << s.samples[i].first << ',' << s.node_id.hex() << ','
                << format_reputation(s.samples[i].second) << '\n';
        }
    }
}

}  // namespace batm
