#pragma once

#include <random>

#include "batm/batm.hpp"

namespace testsup {

using namespace batm;

inline ChainParams fast_params() {
    ChainParams p;
    p.difficulty_bits = 8;  // desk-scale proof of work for unit tests
    return p;
}

inline NodeDescriptor nn(const std::string& name) {
    NodeDescriptor d;
    d.kind = NodeKind::network_node;
    d.name = name;
    d.abilities = {"camera", "storage"};
    return d;
}

inline std::array<std::uint8_t, 32> seed_of(std::uint8_t b) {
    std::array<std::uint8_t, 32> s{};
    s.fill(b);
    return s;
}

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
    Bytes out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

inline std::array<std::uint8_t, 32> random32(std::mt19937_64& rng) {
    std::array<std::uint8_t, 32> out;
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

// Small fixed network: founder plus n-1 peers, everyone authenticated after
// two blocks (credentials in block 1, confirmed by block 2).
struct TestNet {
    ChainParams params;
    std::vector<NodeIdentity> ids;
    Chain chain;
    Hours now = 0;
    std::mt19937_64 rng{12345};

    explicit TestNet(std::size_t n_nodes, ChainParams p = fast_params()) : params(p) {
        for (std::size_t i = 0; i < n_nodes; ++i)
            ids.push_back(NodeIdentity::create(nn("node" + std::to_string(i)), 0, params,
                                               seed_of(static_cast<std::uint8_t>(i + 1))));
        chain = chain_from_genesis(make_genesis(params, ids[0], seed_of(0xaa)));
        if (n_nodes > 1) {
            std::vector<Payload> cps;
            for (std::size_t i = 1; i < n_nodes; ++i)
                cps.push_back(issue_credentials(ids[i], 0));
            mine(0, cps);  // block 1 carries the credentials
            mine(0, {});   // block 2 confirms them
        }
    }

    // Mines the next block at now+1 and appends it.
    Block mine(std::size_t miner, const std::vector<Payload>& payloads) {
        ++now;
        Block b = mine_block(chain, ids[miner], payloads, now, random32(rng));
        push_block(chain, b);
        return b;
    }

    // Mines at an explicit hour (timestamps must be non-decreasing).
    Block mine_at(std::size_t miner, const std::vector<Payload>& payloads, Hours at) {
        now = at;
        Block b = mine_block(chain, ids[miner], payloads, at, random32(rng));
        push_block(chain, b);
        return b;
    }

    Digest id(std::size_t i) const { return ids[i].id(); }
};

}  // namespace testsup
