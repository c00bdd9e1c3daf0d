// Command-line front end: genesis creation, scenario simulation, chain
// inspection, reputation queries, and full chain validation.
//
// Exit codes: 0 success, 2 domain error (bad parameters, invalid scenario,
// corrupt or invalid chain, unknown node), 3 I/O error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "batm/batm.hpp"

namespace {

using namespace batm;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 2;
constexpr int kExitIo = 3;

int exit_code_for(const Error& e) {
    return e.code() == Errc::io_error ? kExitIo : kExitDomain;
}

Scenario read_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot open " + path);
    return parse_scenario(in);
}

// Deterministic founder identity and seed randomness, shared with the
// simulator so `genesis` and `simulate` agree on the produced block.
Block build_genesis(const Scenario& sc) {
    NodeDescriptor founder_desc;
    if (!sc.nodes.empty()) {
        founder_desc = sc.nodes.front();
    } else {
        founder_desc.kind = NodeKind::network_node;
        founder_desc.name = "founder";
        founder_desc.abilities = {"storage"};
    }
    NodeIdentity founder = NodeIdentity::create(founder_desc, 0, sc.params,
                                                node_key_seed(sc.seed, founder_desc.name));
    std::mt19937_64 rng(sc.seed);
    std::array<std::uint8_t, 32> seed_random;
    for (int i = 0; i < 4; ++i) {
        std::uint64_t v = rng();
        for (int b = 0; b < 8; ++b)
            seed_random[i * 8 + b] = static_cast<std::uint8_t>(v >> (56 - 8 * b));
    }
    return make_genesis(sc.params, founder, seed_random);
}

int cmd_genesis(const std::string& params_path, const std::string& out_path) {
    Scenario sc = read_scenario(params_path);
    Block genesis = build_genesis(sc);
    Chain chain = chain_from_genesis(genesis);
    save_chain(chain, out_path);
    std::cout << "wrote " << out_path << " genesis=" << header_hash(genesis.header).hex()
              << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
    Scenario sc = read_scenario(scenario_path);
    if (seed) sc.seed = *seed;
    SimReport report = run_simulation(sc);
    export_report(report, out_dir);
    for (std::size_t i = 0; i < report.node_ids.size(); ++i) {
        const auto& [name, id] = report.node_ids[i];
        double final_rep = report.series[i].samples.empty()
                               ? 0.0
                               : report.series[i].samples.back().second;
        std::cout << "node=" << name << " id=" << id.hex().substr(0, 12)
                  << " final_reputation=" << format_reputation(final_rep)
                  << " bans=" << report.ban_count(id) << "\n";
    }
    if (report.stalled_hours > 0)
        std::cout << "stalled_hours=" << report.stalled_hours << "\n";
    return kExitOk;
}

std::string payload_kinds_of(const Block& b) {
    std::string kinds;
    for (const auto& p : b.payloads) {
        if (!kinds.empty()) kinds += "+";
        kinds += payload_kind_name(p.kind());
    }
    return kinds;
}

void print_payload_detail(const Payload& p, std::size_t index) {
    std::cout << "  payload[" << index << "] kind=" << payload_kind_name(p.kind())
              << " issuer=" << p.issuer_id.hex().substr(0, 16) << " issued_at=" << p.issued_at;
    switch (p.kind()) {
        case PayloadKind::blame: {
            const auto& b = std::get<BlameBody>(p.body);
            std::cout << " target=" << b.target_id.hex().substr(0, 16)
                      << " reason=" << b.reason_code;
            break;
        }
        case PayloadKind::ban: {
            const auto& b = std::get<BanBody>(p.body);
            std::cout << " target=" << b.target_id.hex().substr(0, 16) << " evidence=";
            for (std::size_t i = 0; i < b.evidence.size(); ++i)
                std::cout << (i ? "," : "") << b.evidence[i].height << ":"
                          << b.evidence[i].payload_index;
            break;
        }
        case PayloadKind::renew: {
            const auto& b = std::get<RenewBody>(p.body);
            std::cout << " window=" << b.subkey_valid_from << ".." << b.subkey_valid_until;
            break;
        }
        case PayloadKind::credentials: {
            const auto& b = std::get<CredentialsBody>(p.body);
            std::cout << " window=" << b.subkey_valid_from << ".." << b.subkey_valid_until;
            break;
        }
        case PayloadKind::revoke: {
            const auto& b = std::get<RevokeBody>(p.body);
            std::cout << " revoked=" << b.revoked_master_id.hex().substr(0, 16)
                      << " replacement=" << (b.replacement ? "yes" : "no");
            break;
        }
        case PayloadKind::miner_approval:
            break;
    }
    std::cout << "\n";
}

int cmd_inspect(const std::string& chain_path, std::optional<std::uint64_t> block,
                const std::string& format) {
    Chain chain = load_chain(chain_path);
    if (block) {
        if (*block >= chain.length())
            throw Error(Errc::out_of_range, "block height beyond the chain tip");
        const Block& b = chain.blocks[*block];
        std::cout << "height=" << *block << " time=" << b.header.timestamp
                  << " hash=" << header_hash(b.header).hex()
                  << " prev=" << b.header.prev_header_hash.hex() << " nonce=" << b.header.nonce
                  << "\n";
        for (std::size_t i = 0; i < b.payloads.size(); ++i) print_payload_detail(b.payloads[i], i);
        return kExitOk;
    }
    if (format == "csv") {
        std::cout << "height,timestamp,header_hash,payloads\n";
        for (std::size_t h = 0; h < chain.length(); ++h)
            std::cout << h << ',' << chain.blocks[h].header.timestamp << ','
                      << header_hash(chain.blocks[h].header).hex() << ','
                      << payload_kinds_of(chain.blocks[h]) << "\n";
    } else {
        for (std::size_t h = 0; h < chain.length(); ++h)
            std::cout << "height=" << h << " time=" << chain.blocks[h].header.timestamp
                      << " hash=" << header_hash(chain.blocks[h].header).hex().substr(0, 16)
                      << " payloads=" << payload_kinds_of(chain.blocks[h]) << "\n";
    }
    return kExitOk;
}

// All master-key ids the chain has ever seen credentials for.
std::vector<Digest> known_node_ids(const Chain& chain) {
    std::vector<Digest> ids;
    auto add = [&](const Digest& d) {
        if (std::find(ids.begin(), ids.end(), d) == ids.end()) ids.push_back(d);
    };
    for (const auto& blk : chain.blocks) {
        for (const auto& p : blk.payloads) {
            if (p.kind() == PayloadKind::credentials) add(p.issuer_id);
            if (p.kind() == PayloadKind::revoke) {
                const auto& rb = std::get<RevokeBody>(p.body);
                if (rb.replacement)
                    add(key_id(ByteSpan(rb.replacement->master_public.data(),
                                        rb.replacement->master_public.size())));
            }
        }
    }
    return ids;
}

int cmd_reputation(const std::string& chain_path, const std::string& node_prefix, Hours at) {
    Chain chain = load_chain(chain_path);
    std::vector<Digest> matches;
    for (const Digest& id : known_node_ids(chain))
        if (id.hex().rfind(node_prefix, 0) == 0) matches.push_back(id);
    if (matches.empty())
        throw Error(Errc::no_such_node, "no node id starts with " + node_prefix);
    if (matches.size() > 1)
        throw Error(Errc::no_such_node, "node id prefix is ambiguous: " + node_prefix);
    try {
        std::cout << format_reputation(reputation(chain, matches[0], at, chain.params)) << "\n";
    } catch (const Error& e) {
        if (e.code() != Errc::not_authenticated) throw;
        std::cout << "NotAuthenticated\n";
    }
    return kExitOk;
}

int cmd_validate(const std::string& chain_path) {
    Chain chain = load_chain(chain_path);  // load already revalidates
    CheckResult res = revalidate_chain(chain);
    if (!res) throw Error(Errc::validation_failed, res.joined());
    std::cout << "ok blocks=" << chain.length() << " tip="
              << header_hash(chain.tip().header).hex() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BATM chain tool: decentralized node authentication and trust"};
    app.require_subcommand(1);

    std::string params_path, out_path, scenario_path, out_dir, chain_path, node_prefix;
    std::string format = "table";
    std::optional<std::uint64_t> block_height, seed;
    Hours at = 0;

    auto* genesis = app.add_subcommand("genesis", "write a one-block chain from a parameters file");
    genesis->add_option("--params", params_path, "parameters file")->required();
    genesis->add_option("--out", out_path, "output chain file")->required();

    auto* simulate = app.add_subcommand("simulate", "run a scenario and export its report");
    simulate->add_option("--scenario", scenario_path, "scenario file")->required();
    simulate->add_option("--out", out_dir, "output directory")->required();
    simulate->add_option("--seed", seed, "override the scenario seed");

    auto* inspect = app.add_subcommand("inspect", "print block summaries or one block in full");
    inspect->add_option("--chain", chain_path, "chain file")->required();
    inspect->add_option("--block", block_height, "height to expand");
    inspect->add_option("--format", format, "table or csv")
        ->check(CLI::IsMember({"table", "csv"}));

    auto* rep = app.add_subcommand("reputation", "reputation of a node at a given hour");
    rep->add_option("--chain", chain_path, "chain file")->required();
    rep->add_option("--node", node_prefix, "node id (hex prefix)")->required();
    rep->add_option("--at", at, "hour to evaluate at")->required();

    auto* validate = app.add_subcommand("validate", "revalidate every block of a chain file");
    validate->add_option("--chain", chain_path, "chain file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (genesis->parsed()) return cmd_genesis(params_path, out_path);
        if (simulate->parsed()) return cmd_simulate(scenario_path, out_dir, seed);
        if (inspect->parsed()) return cmd_inspect(chain_path, block_height, format);
        if (rep->parsed()) return cmd_reputation(chain_path, node_prefix, at);
        if (validate->parsed()) return cmd_validate(chain_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitOk;
}
