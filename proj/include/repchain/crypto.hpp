#pragma once

// Simulated PKI. Signatures and the VRF are keyed SHA-256 tags; verification
// goes through a registry that plays the Identity Manager and maps each
// public identifier to the key material it was derived from.

#include <openssl/evp.h>

#include <map>
#include <stdexcept>
#include <string_view>

#include "repchain/bytes.hpp"

namespace repchain {

inline Digest sha256(std::span<const std::uint8_t> data) {
  Digest out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size())
    throw std::runtime_error("sha256: EVP_Digest failed");
  return out;
}

// H(tag || part1 || part2 ...) with raw concatenation.
inline Digest tagged_hash(std::string_view tag, std::initializer_list<std::span<const std::uint8_t>> parts) {
  Bytes buf(tag.begin(), tag.end());
  for (auto p : parts) buf.insert(buf.end(), p.begin(), p.end());
  return sha256(buf);
}

struct SimSignature {
  Digest tag{};
  friend bool operator==(const SimSignature&, const SimSignature&) = default;
};

struct VrfOutput {
  Digest value{};
  Digest proof{};
  friend bool operator==(const VrfOutput&, const VrfOutput&) = default;
};

struct KeyPair {
  std::uint64_t node_id = 0;
  Digest secret{};
  Digest public_key{};
};

inline KeyPair keypair_from_secret(std::uint64_t node_id, const Digest& secret) {
  return KeyPair{node_id, secret, tagged_hash("pk", {secret})};
}

// Deterministic key issuance: distinct (root_seed, node_id) give distinct seeds.
inline KeyPair issue_keypair(std::uint64_t root_seed, std::uint64_t node_id) {
  Bytes in;
  append_u64be(in, root_seed);
  append_u64be(in, node_id);
  return keypair_from_secret(node_id, tagged_hash("sk", {in}));
}

inline SimSignature sign(const KeyPair& kp, std::span<const std::uint8_t> msg) {
  return SimSignature{tagged_hash("sig", {kp.secret, msg})};
}

inline VrfOutput vrf_eval(const KeyPair& kp, std::span<const std::uint8_t> input) {
  return VrfOutput{tagged_hash("vrf", {kp.secret, input}), tagged_hash("vrfp", {kp.secret, input})};
}

class KeyRegistry {
 public:
  void enroll(const KeyPair& kp) {
    if (tagged_hash("pk", {kp.secret}) != kp.public_key)
      throw std::invalid_argument("KeyRegistry: public key does not match secret");
    secrets_[kp.public_key] = kp.secret;
  }

  bool knows(const Digest& public_key) const { return secrets_.count(public_key) != 0; }

  bool verify(const Digest& public_key, std::span<const std::uint8_t> msg, const SimSignature& sig) const {
    auto it = secrets_.find(public_key);
    if (it == secrets_.end()) return false;
    return tagged_hash("sig", {it->second, msg}) == sig.tag;
  }

  bool vrf_verify(const Digest& public_key, std::span<const std::uint8_t> input, const VrfOutput& out) const {
    auto it = secrets_.find(public_key);
    if (it == secrets_.end()) return false;
    return tagged_hash("vrf", {it->second, input}) == out.value &&
           tagged_hash("vrfp", {it->second, input}) == out.proof;
  }

 private:
  std::map<Digest, Digest> secrets_;
};

inline bool verify(const KeyRegistry& registry, const Digest& public_key, std::span<const std::uint8_t> msg,
                   const SimSignature& sig) {
  return registry.verify(public_key, msg, sig);
}

inline bool vrf_verify(const KeyRegistry& registry, const Digest& public_key, std::span<const std::uint8_t> input,
                       const VrfOutput& out) {
  return registry.vrf_verify(public_key, input, out);
}

// Key material for every participant of a scenario. Global node ids are
// assigned providers first, then collectors, then governors.
struct IdentityManager {
  std::vector<KeyPair> providers;
  std::vector<KeyPair> collectors;
  std::vector<KeyPair> governors;
  KeyRegistry registry;

  static IdentityManager issue(std::uint64_t root_seed, std::size_t l, std::size_t n, std::size_t m) {
    IdentityManager im;
    std::uint64_t next = 0;
    auto fill = [&](std::vector<KeyPair>& out, std::size_t count) {
      for (std::size_t i = 0; i < count; ++i) {
        out.push_back(issue_keypair(root_seed, next++));
        im.registry.enroll(out.back());
      }
    };
    fill(im.providers, l);
    fill(im.collectors, n);
    fill(im.governors, m);
    return im;
  }
};

}  // namespace repchain
