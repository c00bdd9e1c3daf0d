#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace batm {

enum class Errc {
    malformed,            // undecodable bytes (payload, block, chain file)
    empty_leaves,         // merkle over zero leaves
    master_expired,       // subkey derivation past master validity
    missing_key,          // issuer lacks the secret key a payload needs
    key_expired,          // signing key not valid at issue time
    miner_not_authenticated,
    miner_banned,
    self_payload_included,
    block_too_large,
    genesis_mismatch,     // fork-choice candidates with different genesis
    out_of_range,
    invalid_params,       // genesis parameter inequality violated
    corrupt_file,
    validation_failed,
    no_such_node,
    no_valid_key,
    duplicate_service,
    not_a_service,
    not_authenticated,
    zero_coefficient,
    scenario_invalid,
    io_error,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::malformed: return "Malformed";
        case Errc::empty_leaves: return "EmptyLeaves";
        case Errc::master_expired: return "MasterExpired";
        case Errc::missing_key: return "MissingKey";
        case Errc::key_expired: return "KeyExpired";
        case Errc::miner_not_authenticated: return "MinerNotAuthenticated";
        case Errc::miner_banned: return "MinerBanned";
        case Errc::self_payload_included: return "SelfPayloadIncluded";
        case Errc::block_too_large: return "BlockTooLarge";
        case Errc::genesis_mismatch: return "GenesisMismatch";
        case Errc::out_of_range: return "OutOfRange";
        case Errc::invalid_params: return "InvalidParams";
        case Errc::corrupt_file: return "CorruptFile";
        case Errc::validation_failed: return "ValidationFailed";
        case Errc::no_such_node: return "NoSuchNode";
        case Errc::no_valid_key: return "NoValidKey";
        case Errc::duplicate_service: return "DuplicateService";
        case Errc::not_a_service: return "NotAService";
        case Errc::not_authenticated: return "NotAuthenticated";
        case Errc::zero_coefficient: return "ZeroCoefficient";
        case Errc::scenario_invalid: return "ScenarioInvalid";
        case Errc::io_error: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + std::move(msg)), code_(code) {}
    Error(Errc code, std::string msg, std::uint64_t height)
        : std::runtime_error(std::string(errc_name(code)) + ": " + std::move(msg)),
          code_(code),
          height_(height) {}

    Errc code() const { return code_; }
    // Block height the failure was detected at, when known (load/validate paths).
    std::optional<std::uint64_t> height() const { return height_; }

private:
    Errc code_;
    std::optional<std::uint64_t> height_;
};

// Outcome of a validity check: boolean verdict plus diagnostic reasons.
struct CheckResult {
    bool ok = true;
    std::vector<std::string> reasons;

    explicit operator bool() const { return ok; }
    void fail(std::string reason) {
        ok = false;
        reasons.push_back(std::move(reason));
    }
    std::string joined() const {
        std::string s;
        for (const auto& r : reasons) {
            if (!s.empty()) s += "; ";
            s += r;
        }
        return s;
    }
};

}  // namespace batm
