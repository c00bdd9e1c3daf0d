#pragma once

#include <optional>
#include <string>
#include <vector>

#include "batm/crypto.hpp"
#include "batm/params.hpp"

namespace batm {

enum class NodeKind : std::uint8_t { network_node = 1, available_service = 2 };

// Descriptor of a network node (properties + abilities) or an available
// service (ability/resource dependencies + provided resources).
struct NodeDescriptor {
    NodeKind kind = NodeKind::network_node;
    std::string name;
    double energy = 1.0;  // carried but unused by trust math
    double cpu = 1.0;
    std::vector<std::string> abilities;              // NN only
    std::vector<std::string> ability_dependencies;   // AS only
    std::vector<std::string> resource_dependencies;  // AS only
    std::vector<std::string> resources_provided;     // AS only

    bool is_service() const { return kind == NodeKind::available_service; }
};

// One generation of rotating subkeys together with their master certificates.
struct SubkeyGeneration {
    KeyPair signature_key;
    KeyPair encryption_key;
    Signature signature_cert;
    Signature encryption_cert;
    Hours created_at = 0;
};

// A node's local key material: the long-lived master plus every subkey
// generation it has produced. Old generations are kept because payloads
// issued before a renewal confirms must still be signed with the key the
// chain considers current.
class NodeIdentity {
public:
    NodeIdentity() = default;

    static NodeIdentity create(NodeDescriptor descriptor, Hours now, const ChainParams& params,
                               const std::array<std::uint8_t, 32>& seed) {
        NodeIdentity id;
        id.descriptor_ = std::move(descriptor);
        id.master_ = generate_master(now, params, seed);
        id.push_generation(derive_subkeys(id.master_, now, params), now);
        return id;
    }

    static NodeIdentity create(NodeDescriptor descriptor, Hours now, const ChainParams& params) {
        return create(std::move(descriptor), now, params, detail::random_seed());
    }

    const NodeDescriptor& descriptor() const { return descriptor_; }
    const KeyPair& master() const { return master_; }
    Digest id() const { return key_id(master_); }

    const SubkeyGeneration& current_subkeys() const { return generations_.back(); }
    const std::vector<SubkeyGeneration>& key_history() const { return generations_; }

    // Derives (and locally adopts) the next subkey generation.
    const SubkeyGeneration& rotate_subkeys(Hours now, const ChainParams& params) {
        push_generation(derive_subkeys(master_, now, params), now);
        return generations_.back();
    }

    // Finds the signature subkey matching a public key the chain expects.
    const KeyPair* find_signature_key(ByteSpan public_key) const {
        for (auto it = generations_.rbegin(); it != generations_.rend(); ++it) {
            const Bytes& pub = it->signature_key.public_key;
            if (pub.size() == public_key.size() &&
                std::equal(pub.begin(), pub.end(), public_key.begin()))
                return &it->signature_key;
        }
        return nullptr;
    }

private:
    void push_generation(SubkeyPair&& keys, Hours now) {
        generations_.push_back(SubkeyGeneration{std::move(keys.signature_key),
                                                std::move(keys.encryption_key),
                                                std::move(keys.signature_cert),
                                                std::move(keys.encryption_cert), now});
    }

    NodeDescriptor descriptor_;
    KeyPair master_;
    std::vector<SubkeyGeneration> generations_;
};

// Per-node registry of known services, keyed by service name.
class ServiceRegistry {
public:
    const std::vector<NodeDescriptor>& services() const { return services_; }

    void register_service(const NodeDescriptor& descriptor) {
        if (!descriptor.is_service())
            throw Error(Errc::not_a_service, "registry accepts AS descriptors only");
        for (const auto& s : services_)
            if (s.name == descriptor.name)
                throw Error(Errc::duplicate_service, "service already registered: " + descriptor.name);
        services_.push_back(descriptor);
    }

    bool contains(const std::string& name) const {
        for (const auto& s : services_)
            if (s.name == name) return true;
        return false;
    }

private:
    std::vector<NodeDescriptor> services_;
};

}  // namespace batm
