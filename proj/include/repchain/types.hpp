#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "repchain/bytes.hpp"
#include "repchain/crypto.hpp"

namespace repchain {

using ProviderId = std::uint64_t;
using CollectorId = std::uint64_t;
using GovernorId = std::uint64_t;

enum class Label : std::int8_t { Minus = -1, Plus = 1 };

inline Label opposite(Label l) { return l == Label::Plus ? Label::Minus : Label::Plus; }

// Per-slot label as seen by a governor; nullopt when the collector sent nothing.
using SlotLabel = std::optional<Label>;

inline Label effective(SlotLabel l) { return l.value_or(Label::Minus); }

struct TxId {
  ProviderId provider_id = 0;
  std::uint64_t seq = 0;
  std::uint64_t timestamp = 0;
  friend auto operator<=>(const TxId&, const TxId&) = default;
};

class Transaction {
 public:
  Transaction() = default;
  Transaction(TxId id, bool ground_truth_valid, SimSignature signature)
      : id_(id), valid_(ground_truth_valid), signature_(signature) {}

  const TxId& id() const { return id_; }
  ProviderId provider_id() const { return id_.provider_id; }
  std::uint64_t seq() const { return id_.seq; }
  std::uint64_t timestamp() const { return id_.timestamp; }
  const SimSignature& signature() const { return signature_; }

  // Bytes the provider signs: (provider_id, seq, timestamp).
  static Bytes signed_body(const TxId& id) {
    return Encoder{}.u64(id.provider_id).u64(id.seq).u64(id.timestamp).take();
  }

  Encoder encode() const {
    Encoder e;
    e.u64(id_.provider_id).u64(id_.seq).u64(id_.timestamp).bytes(signature_.tag);
    return e;
  }

  // Same identity and signature. The hidden validity bit is not part of the
  // wire form.
  friend bool operator==(const Transaction& a, const Transaction& b) {
    return a.id_ == b.id_ && a.signature_ == b.signature_;
  }

  // Only the two validation routines and simulation observers read the
  // ground truth.
  friend bool validate_collector(const Transaction& tx) { return tx.valid_; }
  friend bool validate_governor(const Transaction& tx) { return tx.valid_; }
  friend bool observed_ground_truth(const Transaction& tx) { return tx.valid_; }

 private:
  TxId id_{};
  bool valid_ = false;
  SimSignature signature_{};
};

inline Transaction make_transaction(const KeyPair& provider_key, TxId id, bool ground_truth_valid) {
  return Transaction(id, ground_truth_valid, sign(provider_key, Transaction::signed_body(id)));
}

inline bool verify_transaction(const KeyRegistry& registry, const Digest& provider_public, const Transaction& tx) {
  return registry.verify(provider_public, Transaction::signed_body(tx.id()), tx.signature());
}

struct LabeledTransaction {
  Transaction tx;
  Label label = Label::Minus;
  CollectorId collector_id = 0;
  SimSignature signature{};

  static Bytes signed_body(const Transaction& tx, Label label, CollectorId collector_id) {
    Encoder e;
    e.nested(tx.encode()).i64(static_cast<std::int64_t>(label)).u64(collector_id);
    return std::move(e).take();
  }

  Encoder encode() const {
    Encoder e;
    e.nested(tx.encode()).i64(static_cast<std::int64_t>(label)).u64(collector_id).bytes(signature.tag);
    return e;
  }

  friend bool operator==(const LabeledTransaction&, const LabeledTransaction&) = default;
};

inline LabeledTransaction make_labeled(const KeyPair& collector_key, CollectorId collector_id, const Transaction& tx,
                                       Label label) {
  return LabeledTransaction{tx, label, collector_id,
                            sign(collector_key, LabeledTransaction::signed_body(tx, label, collector_id))};
}

inline bool verify_labeled(const KeyRegistry& registry, const Digest& collector_public, const LabeledTransaction& ltx) {
  return registry.verify(collector_public, LabeledTransaction::signed_body(ltx.tx, ltx.label, ltx.collector_id),
                         ltx.signature);
}

struct StakeTransfer {
  GovernorId payer = 0;
  GovernorId payee = 0;
  std::uint64_t amount = 0;
  std::uint64_t nonce = 0;
  SimSignature signature{};

  Bytes signed_body() const { return Encoder{}.u64(payer).u64(payee).u64(amount).u64(nonce).take(); }

  Encoder encode() const {
    Encoder e;
    e.u64(payer).u64(payee).u64(amount).u64(nonce).bytes(signature.tag);
    return e;
  }

  friend bool operator==(const StakeTransfer&, const StakeTransfer&) = default;
};

inline StakeTransfer make_stake_transfer(const KeyPair& payer_key, GovernorId payer, GovernorId payee,
                                         std::uint64_t amount, std::uint64_t nonce) {
  StakeTransfer t{payer, payee, amount, nonce, {}};
  t.signature = sign(payer_key, t.signed_body());
  return t;
}

template <typename T>
Encoder encode_list(const std::vector<T>& items) {
  Encoder e;
  e.u64(items.size());
  for (const auto& it : items) e.nested(it.encode());
  return e;
}

struct Block {
  std::uint64_t serial = 0;
  GovernorId leader_id = 0;
  std::vector<Transaction> tx_list;
  Digest mt_root{};
  Digest prev_hash{};
  // Non-empty only for stake-transfer blocks.
  std::vector<StakeTransfer> transfers;
  SimSignature leader_signature{};

  Bytes signed_body() const {
    Encoder e;
    e.u64(serial).u64(leader_id).nested(encode_list(tx_list)).bytes(mt_root).bytes(prev_hash).nested(
        encode_list(transfers));
    return std::move(e).take();
  }

  Bytes encode() const {
    Encoder e;
    e.u64(serial).u64(leader_id).nested(encode_list(tx_list)).bytes(mt_root).bytes(prev_hash).nested(
        encode_list(transfers)).bytes(leader_signature.tag);
    return std::move(e).take();
  }

  bool is_stake_transfer() const { return !transfers.empty(); }

  friend bool operator==(const Block&, const Block&) = default;
};

struct RoundLists {
  std::vector<Transaction> tx_list;
  std::vector<Transaction> invalid_list;
  std::vector<Transaction> unchecked_list;
};

// Binary Merkle tree over H(item). An unpaired node is promoted to the next
// level unchanged. The empty tree has the all-zero root.
inline Digest merkle_root(std::span<const Bytes> items) {
  if (items.empty()) return kZeroDigest;
  std::vector<Digest> level;
  level.reserve(items.size());
  for (const auto& it : items) level.push_back(sha256(it));
  while (level.size() > 1) {
    std::vector<Digest> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(sha256(concat({level[i], level[i + 1]})));
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
  }
  return level.front();
}

inline constexpr std::uint8_t kInvalidListTag = 0x01;
inline constexpr std::uint8_t kUncheckedListTag = 0x02;

// Leaves of the (InvalidList, UncheckedList) commitment: each transaction's
// encoding prefixed by a one-byte list tag, invalid entries first.
inline std::vector<Bytes> commitment_leaves(const std::vector<Transaction>& invalid_list,
                                            const std::vector<Transaction>& unchecked_list) {
  std::vector<Bytes> leaves;
  leaves.reserve(invalid_list.size() + unchecked_list.size());
  auto add = [&](std::uint8_t tag, const Transaction& tx) {
    Bytes leaf{tag};
    auto enc = tx.encode().take();
    leaf.insert(leaf.end(), enc.begin(), enc.end());
    leaves.push_back(std::move(leaf));
  };
  for (const auto& tx : invalid_list) add(kInvalidListTag, tx);
  for (const auto& tx : unchecked_list) add(kUncheckedListTag, tx);
  return leaves;
}

inline Digest lists_commitment(const std::vector<Transaction>& invalid_list,
                               const std::vector<Transaction>& unchecked_list) {
  return merkle_root(commitment_leaves(invalid_list, unchecked_list));
}

inline Digest hash_block(const Block& b) { return sha256(b.encode()); }

inline Block genesis_block() { return Block{}; }

}  // namespace repchain
