#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace batm;

namespace {

std::filesystem::path scenario_dir() {
    if (const char* env = std::getenv("BATM_SCENARIOS")) return env;
    return "../scenarios";
}

Scenario load_scenario(const std::string& name) {
    std::ifstream in(scenario_dir() / name);
    REQUIRE(in.good());
    return parse_scenario(in);
}

std::string csv_of(const SimReport& report) {
    std::ostringstream out;
    write_reputation_csv(report.series, out);
    return out.str();
}

std::size_t count_confirmed(const Chain& chain, PayloadKind kind) {
    std::size_t n = 0;
    for (std::size_t j = 0; j + 1 < chain.length(); ++j)
        for (const auto& p : chain.blocks[j].payloads)
            if (p.kind() == kind) ++n;
    return n;
}

bool log_contains(const SimReport& r, const std::string& needle) {
    for (const auto& line : r.log)
        if (line.find(needle) != std::string::npos) return true;
    return false;
}

const char* kSmallNet = R"(
param difficulty_bits 10
param horizon 60
param seed 11
param trust_gates 0
node alice kind=NN abilities=camera
node bob   kind=NN abilities=storage
node carol kind=NN abilities=camera,storage
at 0 bob join
at 0 carol join
)";

}  // namespace

TEST_CASE("scenario parsing rejects malformed directives with line numbers") {
    auto expect_bad = [](const std::string& text, const std::string& fragment) {
        try {
            parse_scenario(text);
            FAIL("expected ScenarioInvalid for: " << text);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::scenario_invalid);
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };
    expect_bad("nonsense 1 2\n", "line 1");
    expect_bad("param t_renew\n", "line 1");
    expect_bad("param nosuch 5\n", "unknown parameter");
    expect_bad("node a kind=XX\n", "kind must be NN or AS");
    expect_bad("node a kind=NN\nnode a kind=NN\n", "duplicate node name");
    expect_bad("node a kind=NN\nat 5 b join\n", "unknown node b");
    expect_bad("node a kind=NN\nat 5 a blame ghost\n", "unknown blame target");
    expect_bad("param horizon 10\nnode a kind=NN\nat 12 a renew\n", "past the horizon");
    expect_bad("node a kind=NN\nat 1 a fork\n", "fork needs a length");
    expect_bad("node a kind=NN abilities=x provides=y\n", "NN nodes cannot carry");
}

TEST_CASE("scenario parsing accepts the bundled files") {
    for (const char* name :
         {"three_node_ban.scn", "single_node.scn", "fork_long.scn", "fork_short.scn", "params_default.scn"}) {
        CAPTURE(name);
        std::ifstream in(scenario_dir() / name);
        REQUIRE(in.good());
        CHECK_NOTHROW(parse_scenario(in));
    }
    Scenario ban_run = load_scenario("three_node_ban.scn");
    CHECK(ban_run.nodes.size() == 3);
    CHECK(ban_run.horizon == 500);
    CHECK(ban_run.params.difficulty_bits == 16);
    CHECK_FALSE(ban_run.trust_gates);
}

TEST_CASE("equal seeds reproduce the run bit for bit") {
    Scenario sc = parse_scenario(std::string(kSmallNet));
    SimReport a = run_simulation(sc);
    SimReport b = run_simulation(sc);
    CHECK(encode_chain(a.chain) == encode_chain(b.chain));
    CHECK(csv_of(a) == csv_of(b));
    CHECK(a.log == b.log);

    Scenario other = sc;
    other.seed = 12;
    SimReport c = run_simulation(other);
    CHECK(encode_chain(c.chain) != encode_chain(a.chain));
}

TEST_CASE("a single idle node keeps a flat base reputation") {
    Scenario sc = load_scenario("single_node.scn");
    SimReport r = run_simulation(sc);
    CHECK(r.chain.length() == 2);  // genesis + the block confirming the founder
    REQUIRE(r.series.size() == 1);
    REQUIRE(r.series[0].samples.size() == 100);
    CHECK(r.series[0].samples[0].second == 0.0);  // pending at hour zero
    for (std::size_t i = 1; i < r.series[0].samples.size(); ++i)
        CHECK(r.series[0].samples[i].second == 8.0);
}

TEST_CASE("continuous mining accrues approval reputation for the miners") {
    Scenario sc = parse_scenario(std::string(kSmallNet));
    SimReport r = run_simulation(sc);
    CHECK(r.chain.length() == 60);  // one block per hour
    // every node mines in round robin, so every node ends above the base value
    for (const auto& s : r.series) CHECK(s.samples.back().second > 8.0);
    // the simulator never emits an invalid chain
    CHECK(revalidate_chain(r.chain).ok);
}

TEST_CASE("two blames inside the recovery window trigger the ban policy") {
    std::string text = std::string(kSmallNet) +
                       "param t_banrecover 30\n"
                       "param horizon 120\n"
                       "at 30 alice blame carol\n"
                       "at 50 bob blame carol\n";
    Scenario sc = parse_scenario(text);
    SimReport r = run_simulation(sc);

    REQUIRE(count_confirmed(r.chain, PayloadKind::ban) == 1);
    Digest carol = r.node_ids[2].second;
    REQUIRE(r.ban_count(carol) == 1);
    BanInterval ban = r.ban_intervals.at(carol)[0];
    CHECK(ban.until - ban.from == 30);

    // the banned node mines nothing strictly inside the window and mines
    // again the hour it closes
    std::optional<Hours> first_after;
    for (std::size_t j = 1; j < r.chain.length(); ++j) {
        const Payload* ma = find_miner_approval(r.chain.blocks[j]);
        Hours t = r.chain.blocks[j].header.timestamp;
        if (ma->issuer_id == carol && t > ban.from) {
            first_after = t;
            break;
        }
    }
    REQUIRE(first_after.has_value());
    CHECK(*first_after == ban.until);
}

TEST_CASE("a third renewal inside the window never reaches the confirmed chain") {
    std::string text = std::string(kSmallNet) +
                       "param horizon 130\n"
                       "at 10 bob renew\n"
                       "at 94 bob renew\n"
                       "at 120 bob renew\n";  // 26 hours after the previous: rejected
    Scenario sc = parse_scenario(text);
    SimReport r = run_simulation(sc);
    CHECK(count_confirmed(r.chain, PayloadKind::renew) == 2);
    CHECK(log_contains(r, "t_renew/2"));
    CHECK(revalidate_chain(r.chain).ok);
}

TEST_CASE("a longer fork reorganizes the chain and recovers orphaned payloads") {
    Scenario sc = load_scenario("fork_long.scn");
    SimReport r = run_simulation(sc);
    REQUIRE(log_contains(r, "event=reorg"));
    CHECK(log_contains(r, "orphaned_payloads=1"));

    // the blame alice issued at hour 19 was orphaned, re-entered the queue,
    // and is confirmed in the final chain exactly once
    CHECK(count_confirmed(r.chain, PayloadKind::blame) == 1);
    CHECK(revalidate_chain(r.chain).ok);

    // it reappeared within two blocks of the reorg
    std::optional<Hours> blame_hour;
    for (std::size_t j = 0; j + 1 < r.chain.length(); ++j)
        for (const auto& p : r.chain.blocks[j].payloads)
            if (p.kind() == PayloadKind::blame) blame_hour = r.chain.blocks[j].header.timestamp;
    REQUIRE(blame_hour.has_value());
    CHECK(*blame_hour >= 21);
    CHECK(*blame_hour <= 23);
}

TEST_CASE("a fork that cannot outgrow the main chain is discarded") {
    Scenario sc = load_scenario("fork_short.scn");
    SimReport r = run_simulation(sc);
    CHECK(log_contains(r, "event=fork_lost"));
    CHECK_FALSE(log_contains(r, "event=reorg"));
    CHECK(r.chain.length() == 40);
    CHECK(revalidate_chain(r.chain).ok);
}

TEST_CASE("zero-length forks are no-ops") {
    std::string text = std::string(kSmallNet) + "at 20 bob fork 0\n";
    SimReport r = run_simulation(parse_scenario(text));
    CHECK(log_contains(r, "event=fork_noop"));
    CHECK_FALSE(log_contains(r, "event=reorg"));
}

TEST_CASE("misbehaving nodes get their payload rejected and earn a blame") {
    std::string text = std::string(kSmallNet) + "at 20 carol misbehave\n";
    SimReport r = run_simulation(parse_scenario(text));
    CHECK(log_contains(r, "event=misbehave node=carol"));
    CHECK(log_contains(r, "event=payload_rejected"));
    CHECK(count_confirmed(r.chain, PayloadKind::blame) == 1);
    CHECK(count_confirmed(r.chain, PayloadKind::renew) == 0);
}

TEST_CASE("the network stalls, and reports it, when nobody can mine") {
    // subkeys expire at hour 10 and nobody renews
    std::string text =
        "param difficulty_bits 10\n"
        "param horizon 15\n"
        "param seed 2\n"
        "param t_renew 2\n"
        "param t_blame 2\n"
        "param t_banrecover 2\n"
        "param t_subkey 10\n"
        "param t_masterkey 200\n"
        "node solo kind=NN abilities=storage\n";
    SimReport r = run_simulation(parse_scenario(text));
    CHECK(r.stalled_hours >= 1);
    CHECK(log_contains(r, "event=stall reason=no_eligible_miner"));
    CHECK(r.chain.length() == 10);  // blocks at hours 1..9 only
}

TEST_CASE("exported reports are deterministic and complete") {
    namespace fs = std::filesystem;
    Scenario sc = parse_scenario(std::string(kSmallNet));
    SimReport r = run_simulation(sc);
    fs::path d1 = fs::temp_directory_path() / "batm_sim_export1";
    fs::path d2 = fs::temp_directory_path() / "batm_sim_export2";
    export_report(r, d1);
    export_report(r, d2);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };
    for (const char* f : {"chain.batm", "reputation.csv", "actions.log"}) {
        CAPTURE(f);
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }

    // CSV carries one row per node per hour plus the header
    std::string csv = slurp(d1 / "reputation.csv");
    std::size_t rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(rows == 1 + 3 * 60);
    CHECK(csv.rfind("hour,node_id,reputation\n", 0) == 0);

    Chain reloaded = load_chain(d1 / "chain.batm");
    CHECK(encode_chain(reloaded) == encode_chain(r.chain));
}

TEST_CASE("an AS node authenticates through the same pipeline") {
    std::string text =
        "param difficulty_bits 10\n"
        "param horizon 30\n"
        "param seed 5\n"
        "node alice kind=NN abilities=camera,storage\n"
        "node cam kind=AS deps=camera provides=videostream,videorecording\n"
        "at 0 cam join\n";
    SimReport r = run_simulation(parse_scenario(text));
    Digest service = r.node_ids[1].second;
    CHECK(auth_state(service, r.chain, 20).status == AuthStatus::authenticated);
    CHECK(log_contains(r, "event=service_registered name=cam"));
    // event-free service: the echo term vanishes and the host keeps its score
    Digest host = r.node_ids[0].second;
    double echoed = service_reputation_echo(r.chain, service, host, 20, r.chain.params);
    CHECK(echoed == reputation(r.chain, host, 20, r.chain.params));
}

TEST_CASE("horizon of one yields just the genesis and one sample per node") {
    std::string text =
        "param difficulty_bits 10\n"
        "param horizon 1\n"
        "param seed 5\n"
        "node alice kind=NN abilities=camera\n";
    SimReport r = run_simulation(parse_scenario(text));
    CHECK(r.chain.length() == 1);
    REQUIRE(r.series.size() == 1);
    CHECK(r.series[0].samples.size() == 1);
}

TEST_CASE("inject_fork schedules a fork just like the directive") {
    Scenario sc = parse_scenario(std::string(kSmallNet));
    Simulator sim(sc);
    sim.inject_fork(25, 2, "bob");
    SimReport r = sim.run();
    CHECK(log_contains(r, "event=reorg"));
    CHECK(revalidate_chain(r.chain).ok);

    Simulator bad(sc);
    CHECK_THROWS_AS(bad.inject_fork(999, 2, "bob"), Error);
    CHECK_THROWS_AS(bad.inject_fork(10, 2, "nobody"), Error);
}

TEST_CASE("no node ever has three confirmed renewals inside one window") {
    std::string text = std::string(kSmallNet) +
                       "param horizon 60\n"
                       "at 5 bob renew\n"
                       "at 47 bob renew\n"
                       "at 52 bob renew\n"
                       "at 57 carol renew\n";
    Scenario sc = parse_scenario(text);
    sc.params.t_renew = 80;  // tight window so the third request violates it
    SimReport r = run_simulation(sc);
    std::map<Digest, std::vector<Hours>> renew_times;
    for (std::size_t j = 0; j + 1 < r.chain.length(); ++j)
        for (const auto& p : r.chain.blocks[j].payloads)
            if (p.kind() == PayloadKind::renew)
                renew_times[p.issuer_id].push_back(r.chain.blocks[j].header.timestamp);
    for (const auto& [node, times] : renew_times) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            std::size_t in_window = 0;
            for (std::size_t k = 0; k <= i; ++k)
                if (times[i] - times[k] < sc.params.t_renew) ++in_window;
            CHECK(in_window <= 2);
        }
    }
}
