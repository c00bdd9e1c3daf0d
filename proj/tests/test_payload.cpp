#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace batm;
using testsup::nn;
using testsup::seed_of;
using testsup::TestNet;

TEST_CASE("freshly issued payloads verify against the chain") {
    TestNet net(3);
    NodeIdentity late = NodeIdentity::create(nn("late"), 3, net.params, seed_of(70));
    CHECK(verify_payload(issue_credentials(late, 3), net.chain, 3).ok);

    const KeyPair& k1 = net.ids[1].current_subkeys().signature_key;
    CHECK(verify_payload(issue_blame(net.ids[1], net.id(2), 1, 3, &k1), net.chain, 3).ok);

    NodeIdentity n2 = net.ids[2];
    CHECK(verify_payload(issue_renew(n2, 3, net.params), net.chain, 3).ok);

    CHECK(verify_payload(issue_revoke(net.ids[2], 3, net.params, true).payload, net.chain, 3).ok);
}

TEST_CASE("credentials are rejected for already-authenticated issuers") {
    TestNet net(2);
    Payload again = issue_credentials(net.ids[1], 3);
    CheckResult r = verify_payload(again, net.chain, 3);
    REQUIRE_FALSE(r.ok);
    CHECK(r.joined().find("already authenticated") != std::string::npos);
}

TEST_CASE("blame rate limiting per (blamer, target) pair") {
    TestNet net(3);
    const KeyPair& k1 = net.ids[1].current_subkeys().signature_key;
    net.mine_at(0, {issue_blame(net.ids[1], net.id(2), 1, 100, &k1)}, 100);
    net.mine_at(0, {}, 101);  // confirm

    SECTION("same blamer, same target, 10 hours later: rejected") {
        Payload repeat = issue_blame(net.ids[1], net.id(2), 1, 110, &k1);
        CheckResult r = verify_payload(repeat, net.chain, 110);
        REQUIRE_FALSE(r.ok);
        CHECK(r.joined().find("t_blame") != std::string::npos);
    }
    SECTION("same pair at exactly t_blame: accepted") {
        Payload later = issue_blame(net.ids[1], net.id(2), 1, 142, &k1);
        CHECK(verify_payload(later, net.chain, 142).ok);
    }
    SECTION("a different blamer is not rate limited") {
        const KeyPair& k0 = net.ids[0].current_subkeys().signature_key;
        Payload other = issue_blame(net.ids[0], net.id(2), 1, 110, &k0);
        CHECK(verify_payload(other, net.chain, 110).ok);
    }
    SECTION("a different target is not rate limited") {
        Payload other = issue_blame(net.ids[1], net.id(0), 1, 110, &k1);
        CHECK(verify_payload(other, net.chain, 110).ok);
    }
    SECTION("nodes cannot blame themselves") {
        Payload self = issue_blame(net.ids[1], net.id(1), 1, 110, &k1);
        CHECK_FALSE(verify_payload(self, net.chain, 110).ok);
    }
}

TEST_CASE("renewals respect the half-period spacing and the two-per-window cap") {
    TestNet net(2);
    NodeIdentity& node = net.ids[1];

    SECTION("renewal at exactly t_renew/2 after the previous one is accepted") {
        NodeIdentity local = node;
        net.mine_at(0, {issue_renew(local, 100, net.params)}, 100);
        net.mine_at(0, {}, 101);
        Bytes chain_pub = key_for(local.id(), KeyRole::signature_subkey, 184, net.chain);
        const KeyPair* signer = local.find_signature_key(ByteSpan(chain_pub.data(), chain_pub.size()));
        REQUIRE(signer != nullptr);
        Payload second = issue_renew(local, 184, net.params, signer);
        CHECK(verify_payload(second, net.chain, 184).ok);
    }
    SECTION("renewal sooner than t_renew/2 is rejected") {
        NodeIdentity local = node;
        net.mine_at(0, {issue_renew(local, 100, net.params)}, 100);
        net.mine_at(0, {}, 101);
        Bytes chain_pub = key_for(local.id(), KeyRole::signature_subkey, 150, net.chain);
        const KeyPair* signer = local.find_signature_key(ByteSpan(chain_pub.data(), chain_pub.size()));
        Payload tooSoon = issue_renew(local, 150, net.params, signer);
        CheckResult r = verify_payload(tooSoon, net.chain, 150);
        REQUIRE_FALSE(r.ok);
        CHECK(r.joined().find("t_renew/2") != std::string::npos);
    }
    SECTION("a third renewal inside one t_renew window is rejected") {
        NodeIdentity local = node;
        net.mine_at(0, {issue_renew(local, 84, net.params)}, 84);
        net.mine_at(0, {}, 85);
        auto signer_at = [&](Hours t) {
            Bytes pub = key_for(local.id(), KeyRole::signature_subkey, t, net.chain);
            return local.find_signature_key(ByteSpan(pub.data(), pub.size()));
        };
        net.mine_at(0, {issue_renew(local, 168, net.params, signer_at(168))}, 168);
        net.mine_at(0, {}, 169);
        Payload third = issue_renew(local, 200, net.params, signer_at(200));
        CHECK_FALSE(verify_payload(third, net.chain, 200).ok);
    }
    SECTION("renewal by an unauthenticated node is rejected") {
        NodeIdentity stranger = NodeIdentity::create(nn("stranger"), 3, net.params, seed_of(71));
        Payload p = issue_renew(stranger, 3, net.params);
        CHECK_FALSE(verify_payload(p, net.chain, 3).ok);
    }
}

TEST_CASE("role separation: only revocations verify under the master key") {
    TestNet net(3);
    const NodeIdentity& node = net.ids[1];
    ByteSpan master(node.master().public_key.data(), node.master().public_key.size());
    const Bytes& sub = node.current_subkeys().signature_key.public_key;
    ByteSpan subkey(sub.data(), sub.size());

    Payload blame = issue_blame(node, net.id(2), 1, 3);
    CHECK(payload_signature_ok(blame, subkey));
    CHECK_FALSE(payload_signature_ok(blame, master));

    Payload cp = issue_credentials(node, 3);
    CHECK(payload_signature_ok(cp, subkey));
    CHECK_FALSE(payload_signature_ok(cp, master));

    Payload revoke = issue_revoke(node, 3, net.params, false).payload;
    CHECK(payload_signature_ok(revoke, master));
    CHECK_FALSE(payload_signature_ok(revoke, subkey));
}

TEST_CASE("a revocation signed with a subkey does not verify") {
    TestNet net(2);
    Payload revoke = issue_revoke(net.ids[1], 3, net.params, false).payload;
    sign_payload(revoke, net.ids[1].current_subkeys().signature_key);  // wrong role
    CheckResult r = verify_payload(revoke, net.chain, 3);
    REQUIRE_FALSE(r.ok);
    CHECK(r.joined().find("master") != std::string::npos);
}

TEST_CASE("revocations only cover the issuer's own master key") {
    TestNet net(3);
    Payload p = issue_revoke(net.ids[1], 3, net.params, false).payload;
    std::get<RevokeBody>(p.body).revoked_master_id = net.id(2);
    sign_payload(p, net.ids[1].master());
    CHECK_FALSE(verify_payload(p, net.chain, 3).ok);
}

TEST_CASE("payloads dated after the block hour are rejected") {
    TestNet net(3);
    const KeyPair& k1 = net.ids[1].current_subkeys().signature_key;
    Payload future = issue_blame(net.ids[1], net.id(2), 1, 50, &k1);
    CHECK_FALSE(verify_payload(future, net.chain, 10).ok);
    CHECK(verify_payload(future, net.chain, 50).ok);
}

TEST_CASE("consecutive confirmed blames from one blamer stay t_blame apart") {
    // chain-scan form of the rate-limit invariant
    TestNet net(3);
    const KeyPair& k1 = net.ids[1].current_subkeys().signature_key;
    net.mine_at(0, {issue_blame(net.ids[1], net.id(2), 1, 10, &k1)}, 10);
    net.mine_at(0, {}, 30);
    net.mine_at(0, {issue_blame(net.ids[1], net.id(2), 2, 52, &k1)}, 52);
    net.mine_at(0, {}, 53);

    std::map<std::pair<Digest, Digest>, std::vector<Hours>> blames;
    for (std::size_t j = 0; j + 1 < net.chain.length(); ++j)
        for (const auto& p : net.chain.blocks[j].payloads)
            if (p.kind() == PayloadKind::blame)
                blames[{p.issuer_id, std::get<BlameBody>(p.body).target_id}].push_back(
                    net.chain.blocks[j].header.timestamp);
    for (const auto& [pair, times] : blames)
        for (std::size_t i = 1; i < times.size(); ++i)
            CHECK(times[i] - times[i - 1] >= net.params.t_blame);
}

TEST_CASE("a standalone miner approval verifies against the chain tip") {
    TestNet net(3);
    auto tip_random = std::get<MinerApprovalBody>(
        find_miner_approval(net.chain.tip())->body).new_random;
    Payload good = make_miner_approval(net.ids[1], seed_of(0x50), tip_random, net.now + 1);
    CHECK(verify_payload(good, net.chain, net.now + 1).ok);

    Payload wrong = make_miner_approval(net.ids[1], seed_of(0x51), seed_of(0x52), net.now + 1);
    CHECK_FALSE(verify_payload(wrong, net.chain, net.now + 1).ok);
}
