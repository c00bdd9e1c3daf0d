#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "batm/bytes.hpp"
#include "batm/errors.hpp"

namespace batm {

// Protocol constants shared by every node. They live in the first block of
// the chain, so the chain itself is the authority on which rule set applies.
struct ChainParams {
    // Reputation factors, one per behavioural event kind.
    std::int64_t c_approval = 1;
    std::int64_t c_auth = 8;
    std::int64_t c_renew = 2;
    std::int64_t c_blame = -8;
    std::int64_t c_ban = -16;

    // Protocol timers, in hours.
    Hours t_renew = 168;      // usual spacing between key renewals
    Hours t_blame = 42;       // min spacing between blames from one blamer on one target
    Hours t_banrecover = 84;  // mining prohibition after a ban

    // Key validity timeouts, in hours.
    Hours t_subkey = 840;
    Hours t_masterkey = 16800;

    // Trust-threshold application factor and reputation decay constant.
    double a_app = 2.0;
    Hours decay_tau = 256;

    // Weight of a service's reputation echoed onto its host.
    double echo_weight = 0.25;

    // Proof-of-work target (required leading zero bits) and block size cap.
    std::uint32_t difficulty_bits = 16;
    std::uint64_t max_block_bytes = 5ull * 1024 * 1024;

    bool operator==(const ChainParams&) const = default;
};

// Returns the list of violated parameter rules; empty means valid.
inline std::vector<std::string> params_violations(const ChainParams& p) {
    std::vector<std::string> v;
    if (p.t_renew == 0) v.push_back("t_renew must be positive");
    if (p.t_blame == 0) v.push_back("t_blame must be positive");
    if (p.t_banrecover == 0) v.push_back("t_banrecover must be positive");
    if (!(p.t_subkey > p.t_renew))
        v.push_back("t_subkey must be greater than t_renew");
    if (!(p.t_subkey < 50 * p.t_renew))
        v.push_back("t_subkey must be less than 50 * t_renew");
    if (!(p.t_masterkey > 10 * p.t_subkey))
        v.push_back("t_masterkey must be greater than 10 * t_subkey");
    if (!(p.t_masterkey <= 50 * p.t_subkey))
        v.push_back("t_masterkey must be no more than 50 * t_subkey");
    if (p.decay_tau == 0) v.push_back("decay_tau must be positive");
    if (!(p.c_blame < 0)) v.push_back("c_blame must be negative");
    if (!(p.c_ban < p.c_blame)) v.push_back("c_ban must be below c_blame");
    if (p.difficulty_bits > 255) v.push_back("difficulty_bits must fit a 256-bit hash");
    if (p.max_block_bytes < 1024) v.push_back("max_block_bytes is too small to hold any block");
    return v;
}

inline void require_valid_params(const ChainParams& p) {
    auto v = params_violations(p);
    if (!v.empty()) {
        std::string msg;
        for (const auto& r : v) {
            if (!msg.empty()) msg += "; ";
            msg += r;
        }
        throw Error(Errc::invalid_params, msg);
    }
}

namespace detail {

enum class ParamWidth { i64, u64, f64, u32 };

struct ParamField {
    const char* name;
    ParamWidth width;
};

// Canonical field order of the genesis parameters record. Do not reorder:
// the record bytes feed the payload Merkle tree.
inline constexpr ParamField kParamFields[] = {
    {"c_approval", ParamWidth::i64}, {"c_auth", ParamWidth::i64},
    {"c_renew", ParamWidth::i64},    {"c_blame", ParamWidth::i64},
    {"c_ban", ParamWidth::i64},      {"t_renew", ParamWidth::u64},
    {"t_blame", ParamWidth::u64},    {"t_banrecover", ParamWidth::u64},
    {"t_subkey", ParamWidth::u64},   {"t_masterkey", ParamWidth::u64},
    {"a_app", ParamWidth::f64},      {"decay_tau", ParamWidth::u64},
    {"echo_weight", ParamWidth::f64},{"difficulty_bits", ParamWidth::u32},
    {"max_block_bytes", ParamWidth::u64},
};

}  // namespace detail

// Genesis record layout: for each field in canonical order,
// u8 name length, name bytes, u8 value length, big-endian value bytes.
inline Bytes encode_params(const ChainParams& p) {
    ByteWriter w;
    auto emit = [&](const detail::ParamField& f) {
        std::string_view name = f.name;
        w.put_u8(static_cast<std::uint8_t>(name.size()));
        w.put_bytes(to_bytes(name));
        ByteWriter vw;
        if (name == "c_approval") vw.put_i64(p.c_approval);
        else if (name == "c_auth") vw.put_i64(p.c_auth);
        else if (name == "c_renew") vw.put_i64(p.c_renew);
        else if (name == "c_blame") vw.put_i64(p.c_blame);
        else if (name == "c_ban") vw.put_i64(p.c_ban);
        else if (name == "t_renew") vw.put_u64(p.t_renew);
        else if (name == "t_blame") vw.put_u64(p.t_blame);
        else if (name == "t_banrecover") vw.put_u64(p.t_banrecover);
        else if (name == "t_subkey") vw.put_u64(p.t_subkey);
        else if (name == "t_masterkey") vw.put_u64(p.t_masterkey);
        else if (name == "a_app") vw.put_f64(p.a_app);
        else if (name == "decay_tau") vw.put_u64(p.decay_tau);
        else if (name == "echo_weight") vw.put_f64(p.echo_weight);
        else if (name == "difficulty_bits") vw.put_u32(p.difficulty_bits);
        else if (name == "max_block_bytes") vw.put_u64(p.max_block_bytes);
        w.put_u8(static_cast<std::uint8_t>(vw.size()));
        w.put_bytes(vw.data());
    };
    for (const auto& f : detail::kParamFields) emit(f);
    return w.take();
}

inline ChainParams decode_params(ByteSpan bytes) {
    ByteReader r(bytes);
    ChainParams p;
    for (const auto& f : detail::kParamFields) {
        std::string_view want = f.name;
        auto name_len = r.get_u8();
        Bytes name = r.get_bytes(name_len);
        if (std::string_view(reinterpret_cast<const char*>(name.data()), name.size()) != want)
            throw Error(Errc::malformed, "parameters record field out of order");
        auto vlen = r.get_u8();
        std::size_t expect = (f.width == detail::ParamWidth::u32) ? 4u : 8u;
        if (vlen != expect) throw Error(Errc::malformed, "parameters record value width");
        if (want == "c_approval") p.c_approval = r.get_i64();
        else if (want == "c_auth") p.c_auth = r.get_i64();
        else if (want == "c_renew") p.c_renew = r.get_i64();
        else if (want == "c_blame") p.c_blame = r.get_i64();
        else if (want == "c_ban") p.c_ban = r.get_i64();
        else if (want == "t_renew") p.t_renew = r.get_u64();
        else if (want == "t_blame") p.t_blame = r.get_u64();
        else if (want == "t_banrecover") p.t_banrecover = r.get_u64();
        else if (want == "t_subkey") p.t_subkey = r.get_u64();
        else if (want == "t_masterkey") p.t_masterkey = r.get_u64();
        else if (want == "a_app") p.a_app = r.get_f64();
        else if (want == "decay_tau") p.decay_tau = r.get_u64();
        else if (want == "echo_weight") p.echo_weight = r.get_f64();
        else if (want == "difficulty_bits") p.difficulty_bits = r.get_u32();
        else if (want == "max_block_bytes") p.max_block_bytes = r.get_u64();
    }
    r.expect_done();
    return p;
}

// Assigns a parameter by its record name; returns false for unknown names.
// Shared by the scenario/params file parser.
inline bool set_param(ChainParams& p, std::string_view name, std::string_view value) {
    auto as_i64 = [&] { return static_cast<std::int64_t>(std::stoll(std::string(value))); };
    auto as_u64 = [&] { return static_cast<std::uint64_t>(std::stoull(std::string(value))); };
    auto as_f64 = [&] { return std::stod(std::string(value)); };
    if (name == "c_approval") p.c_approval = as_i64();
    else if (name == "c_auth") p.c_auth = as_i64();
    else if (name == "c_renew") p.c_renew = as_i64();
    else if (name == "c_blame") p.c_blame = as_i64();
    else if (name == "c_ban") p.c_ban = as_i64();
    else if (name == "t_renew") p.t_renew = as_u64();
    else if (name == "t_blame") p.t_blame = as_u64();
    else if (name == "t_banrecover") p.t_banrecover = as_u64();
    else if (name == "t_subkey") p.t_subkey = as_u64();
    else if (name == "t_masterkey") p.t_masterkey = as_u64();
    else if (name == "a_app") p.a_app = as_f64();
    else if (name == "decay_tau") p.decay_tau = as_u64();
    else if (name == "echo_weight") p.echo_weight = as_f64();
    else if (name == "difficulty_bits") p.difficulty_bits = static_cast<std::uint32_t>(as_u64());
    else if (name == "max_block_bytes") p.max_block_bytes = as_u64();
    else return false;
    return true;
}

}  // namespace batm
