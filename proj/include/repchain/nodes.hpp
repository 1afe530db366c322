#pragma once

// State machines for providers, collectors and governors.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "repchain/consensus.hpp"
#include "repchain/crypto.hpp"
#include "repchain/reputation.hpp"
#include "repchain/rng.hpp"
#include "repchain/types.hpp"

namespace repchain {

// Raised when the replicated state machine sees something the synchronous,
// lossless network makes impossible.
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Static protocol parameters shared by every node of a run.
struct ProtocolContext {
  const IdentityManager* ids = nullptr;
  // topology[p] lists the collectors connected to provider p; the position
  // in the list is the collector's slot k for p.
  std::vector<std::vector<CollectorId>> topology;
  EpochPolicy epoch;
  std::uint64_t delta_rounds = 1;
  std::size_t b_limit = 1;

  std::optional<std::size_t> slot_of(ProviderId p, CollectorId c) const {
    if (p >= topology.size()) return std::nullopt;
    const auto& slots = topology[p];
    auto it = std::find(slots.begin(), slots.end(), c);
    if (it == slots.end()) return std::nullopt;
    return static_cast<std::size_t>(it - slots.begin());
  }
};

// ---------------------------------------------------------------- providers

// Broadcast to everyone after a block: the block itself plus the round's
// InvalidList and UncheckedList.
struct Feedback {
  Block block;
  std::vector<Transaction> invalid_list;
  std::vector<Transaction> unchecked_list;
};

class ProviderNode {
 public:
  ProviderNode(ProviderId id, KeyPair keys, std::vector<CollectorId> connected, std::uint64_t gen_rate,
               double invalid_fraction, Rng rng)
      : id_(id),
        keys_(std::move(keys)),
        connected_(std::move(connected)),
        gen_rate_(gen_rate),
        invalid_fraction_(invalid_fraction),
        rng_(rng) {}

  ProviderId id() const { return id_; }
  const KeyPair& keys() const { return keys_; }
  const std::vector<CollectorId>& connected_collectors() const { return connected_; }
  const std::map<TxId, Transaction>& pending() const { return pending_; }

  // gen_rate fresh transactions stamped with the round; each is invalid with
  // probability invalid_fraction. Valid ones wait in pending until on chain.
  std::vector<Transaction> generate(std::uint64_t round) {
    std::vector<Transaction> out;
    out.reserve(gen_rate_);
    for (std::uint64_t i = 0; i < gen_rate_; ++i) {
      const bool valid = !rng_.bernoulli(invalid_fraction_);
      auto tx = make_transaction(keys_, TxId{id_, next_seq_++, round}, valid);
      if (valid) pending_.emplace(tx.id(), tx);
      out.push_back(std::move(tx));
    }
    return out;
  }

  // Drops what made it on chain or was proved invalid, and returns the
  // pending transactions that were discarded unchecked, to be sent again.
  std::vector<Transaction> on_feedback(const Feedback& fb) {
    for (const auto& tx : fb.block.tx_list)
      if (tx.provider_id() == id_) pending_.erase(tx.id());
    for (const auto& tx : fb.invalid_list)
      if (tx.provider_id() == id_) pending_.erase(tx.id());
    std::vector<Transaction> resubmit;
    for (const auto& tx : fb.unchecked_list) {
      if (tx.provider_id() != id_) continue;
      if (auto it = pending_.find(tx.id()); it != pending_.end()) resubmit.push_back(it->second);
    }
    return resubmit;
  }

 private:
  ProviderId id_;
  KeyPair keys_;
  std::vector<CollectorId> connected_;
  std::uint64_t gen_rate_;
  double invalid_fraction_;
  Rng rng_;
  std::uint64_t next_seq_ = 0;
  std::map<TxId, Transaction> pending_;
};

// --------------------------------------------------------------- collectors

enum class StrategyKind { Honest, AlwaysPlus, AlwaysMinus, FlipProb, Withhold, Forger };

inline std::string_view to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Honest: return "Honest";
    case StrategyKind::AlwaysPlus: return "AlwaysPlus";
    case StrategyKind::AlwaysMinus: return "AlwaysMinus";
    case StrategyKind::FlipProb: return "FlipProb";
    case StrategyKind::Withhold: return "Withhold";
    case StrategyKind::Forger: return "Forger";
  }
  return "Unknown";
}

inline std::optional<StrategyKind> strategy_from_string(std::string_view s) {
  for (auto k : {StrategyKind::Honest, StrategyKind::AlwaysPlus, StrategyKind::AlwaysMinus, StrategyKind::FlipProb,
                 StrategyKind::Withhold, StrategyKind::Forger})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// q is the flip probability for FlipProb, the drop probability for
// Withhold, and the per-transaction fabrication probability for Forger.
struct CollectorStrategy {
  StrategyKind kind = StrategyKind::Honest;
  double q = 0.0;

  friend bool operator==(const CollectorStrategy&, const CollectorStrategy&) = default;
};

class CollectorNode {
 public:
  CollectorNode(CollectorId id, KeyPair keys, CollectorStrategy strategy, Rng rng)
      : id_(id), keys_(std::move(keys)), strategy_(strategy), rng_(rng) {}

  CollectorId id() const { return id_; }
  const KeyPair& keys() const { return keys_; }
  const CollectorStrategy& strategy() const { return strategy_; }
  const std::set<TxId>& ignored() const { return ignored_; }
  std::uint64_t dropped_forgeries() const { return dropped_forgeries_; }

  // Labels a transaction under the configured strategy. Returns
  // nothing when the transaction is withheld, already proved invalid, or
  // does not carry a valid provider signature.
  std::optional<LabeledTransaction> process(const Transaction& tx, const IdentityManager& ids) {
    if (ignored_.count(tx.id())) return std::nullopt;
    if (tx.provider_id() >= ids.providers.size() ||
        !verify_transaction(ids.registry, ids.providers[tx.provider_id()].public_key, tx)) {
      ++dropped_forgeries_;
      return std::nullopt;
    }
    const Label honest = validate_collector(tx) ? Label::Plus : Label::Minus;
    Label label = honest;
    switch (strategy_.kind) {
      case StrategyKind::Honest:
      case StrategyKind::Forger:
        break;
      case StrategyKind::AlwaysPlus:
        label = Label::Plus;
        break;
      case StrategyKind::AlwaysMinus:
        label = Label::Minus;
        break;
      case StrategyKind::FlipProb:
        if (rng_.bernoulli(strategy_.q)) label = opposite(honest);
        break;
      case StrategyKind::Withhold:
        if (rng_.bernoulli(strategy_.q)) return std::nullopt;
        break;
    }
    return make_labeled(keys_, id_, tx, label);
  }

  // Forger only: with probability q, a fabricated transaction modelled on
  // one it has seen, labeled +1 and correctly signed by this collector. The
  // provider signature is never valid.
  std::optional<LabeledTransaction> maybe_fabricate(const Transaction& seen, std::uint64_t round) {
    if (strategy_.kind != StrategyKind::Forger || !rng_.bernoulli(strategy_.q)) return std::nullopt;
    return make_labeled(keys_, id_, forge(seen, round), Label::Plus);
  }

  // Fabrication variants: a new identity signed with the collector's own
  // key, or a replay of a real transaction with a shifted timestamp.
  Transaction forge(const Transaction& seen, std::uint64_t round) {
    ++fabricated_;
    if (rng_.bernoulli(0.5)) {
      TxId id{seen.provider_id(), (std::uint64_t{1} << 40) + fabricated_, round};
      return Transaction(id, true, sign(keys_, Transaction::signed_body(id)));
    }
    TxId id = seen.id();
    id.timestamp += 1 + rng_.below(8);
    return Transaction(id, true, seen.signature());
  }

  void on_feedback(const Feedback& fb) {
    for (const auto& tx : fb.invalid_list) ignored_.insert(tx.id());
  }

 private:
  CollectorId id_;
  KeyPair keys_;
  CollectorStrategy strategy_;
  Rng rng_;
  std::set<TxId> ignored_;
  std::uint64_t dropped_forgeries_ = 0;
  std::uint64_t fabricated_ = 0;
};

// ---------------------------------------------------------------- governors

// (tx, validbit, received[tx], cnt_i) from the leader, plus the position of
// the screening so every replica orders carried-over transactions alike.
struct VerificationMessage {
  GovernorId leader_id = 0;
  std::uint64_t round = 0;
  std::uint64_t index = 0;
  Transaction tx;
  bool valid = false;
  std::vector<LabeledTransaction> received;
  std::uint64_t epoch_index = 0;
  std::uint64_t cnt = 0;
  SimSignature signature{};

  Bytes signed_body() const {
    Encoder e;
    e.u64(leader_id).u64(round).u64(index).nested(tx.encode()).u64(valid ? 1 : 0).nested(encode_list(received));
    e.u64(epoch_index).u64(cnt);
    return std::move(e).take();
  }
};

enum class LabelInsert { Inserted, Duplicate, ConflictIgnored, BadCollectorSignature, ForgedTransaction, NotConnected, Settled };

enum class ScreeningKind { Valid, Invalid, Unchecked, Skipped };

struct ScreeningOutcome {
  Transaction tx;
  ScreeningKind kind = ScreeningKind::Skipped;
  std::size_t drawn_slot = 0;
  std::vector<double> probs;
  std::vector<SlotLabel> labels;
  // Reputation parameters in force when the draw was made.
  std::uint64_t epoch_index = 0;
  std::uint64_t epoch_threshold = 0;
  double eta = 0.0;
  std::optional<VerificationMessage> message;
  std::optional<RevenueReport> revenue;
};

// A verified-valid transaction waiting for room in a block, with one +1
// label as evidence.
struct CarriedTransaction {
  Transaction tx;
  LabeledTransaction endorsement;
};

class GovernorNode {
 public:
  // Unapplied verification messages a replica may hold per provider before
  // a gap in cnt_i is treated as fatal.
  static constexpr std::size_t kBufferHorizon = 4096;

  GovernorNode(GovernorId id, KeyPair keys, const ProtocolContext& ctx, StakeTable stakes)
      : id_(id), keys_(std::move(keys)), stakes_(std::move(stakes)) {
    reputations_.reserve(ctx.topology.size());
    for (const auto& slots : ctx.topology) reputations_.push_back(initial_reputation(slots.size(), ctx.epoch));
    buffered_.resize(ctx.topology.size());
  }

  GovernorId id() const { return id_; }
  const KeyPair& keys() const { return keys_; }
  const Ledger& ledger() const { return ledger_; }
  const StakeTable& stakes() const { return stakes_; }
  const ReputationState& reputation(ProviderId p) const { return reputations_.at(p); }
  std::vector<ReputationState>& mutable_reputations() { return reputations_; }
  const std::map<TxId, std::map<CollectorId, LabeledTransaction>>& received() const { return received_; }
  const std::map<std::pair<std::uint64_t, std::uint64_t>, CarriedTransaction>& carry_over() const { return carry_; }
  std::uint64_t rejected_signatures() const { return rejected_signatures_; }
  std::uint64_t rejected_forgeries() const { return rejected_forgeries_; }
  std::uint64_t verification_calls() const { return verification_calls_; }

  std::optional<std::uint64_t> deadline(const TxId& id) const {
    auto it = deadlines_.find(id);
    if (it == deadlines_.end()) return std::nullopt;
    return it->second;
  }

  bool settled(const TxId& id) const {
    return on_chain_.count(id) || known_invalid_.count(id) || carried_ids_.count(id);
  }

  // Screening, receive half.
  LabelInsert on_labeled_tx(const ProtocolContext& ctx, const LabeledTransaction& ltx, std::uint64_t round) {
    const auto& ids = *ctx.ids;
    if (ltx.collector_id >= ids.collectors.size() ||
        !verify_labeled(ids.registry, ids.collectors[ltx.collector_id].public_key, ltx)) {
      ++rejected_signatures_;
      return LabelInsert::BadCollectorSignature;
    }
    const auto& tx = ltx.tx;
    if (tx.provider_id() >= ids.providers.size() ||
        !verify_transaction(ids.registry, ids.providers[tx.provider_id()].public_key, tx)) {
      ++rejected_forgeries_;
      return LabelInsert::ForgedTransaction;
    }
    if (!ctx.slot_of(tx.provider_id(), ltx.collector_id)) return LabelInsert::NotConnected;
    if (settled(tx.id())) return LabelInsert::Settled;

    auto& entry = received_[tx.id()];
    if (entry.empty()) deadlines_[tx.id()] = round + ctx.delta_rounds;
    auto [it, inserted] = entry.emplace(ltx.collector_id, ltx);
    if (inserted) return LabelInsert::Inserted;
    return it->second.label == ltx.label ? LabelInsert::Duplicate : LabelInsert::ConflictIgnored;
  }

  // Transactions whose waiting window closes at or before this round, in
  // identity order.
  std::vector<TxId> expired(std::uint64_t round) const {
    std::vector<TxId> out;
    for (const auto& [id, when] : deadlines_)
      if (when <= round) out.push_back(id);
    return out;
  }

  // Non-leaders forget expired entries; the leader's broadcasts tell them
  // what happened.
  void discard_expired(std::uint64_t round) {
    for (const auto& id : expired(round)) forget(id);
  }

  std::vector<SlotLabel> slot_labels(const ProtocolContext& ctx, ProviderId p,
                                     const std::vector<LabeledTransaction>& received) const {
    std::vector<SlotLabel> labels(ctx.topology.at(p).size());
    for (const auto& l : received)
      if (auto k = ctx.slot_of(p, l.collector_id); k && !labels[*k]) labels[*k] = l.label;
    return labels;
  }

  // Screening, endtime half. Draws one slot over all u_i
  // slots; verifies iff that slot sent +1.
  ScreeningOutcome screen(const ProtocolContext& ctx, const TxId& id, Rng& rng, std::uint64_t round,
                          std::uint64_t index) {
    ScreeningOutcome out;
    auto it = received_.find(id);
    if (it == received_.end()) throw SimulationError("screen: no labels received for transaction");
    std::vector<LabeledTransaction> received;
    for (const auto& [c, l] : it->second) received.push_back(l);
    forget(id);
    out.tx = received.front().tx;
    if (settled(id)) return out;

    const ProviderId p = id.provider_id;
    const auto& state = reputations_.at(p);
    out.labels = slot_labels(ctx, p, received);
    out.epoch_index = state.epoch_index;
    out.epoch_threshold = state.epoch_threshold;
    out.eta = state.eta;
    out.probs = selection_probabilities(state.reps, state.eta);
    out.drawn_slot = draw_collector(out.probs, rng);

    if (effective(out.labels[out.drawn_slot]) != Label::Plus) {
      out.kind = ScreeningKind::Unchecked;
      return out;
    }
    ++verification_calls_;
    const bool valid = validate_governor(out.tx);
    out.kind = valid ? ScreeningKind::Valid : ScreeningKind::Invalid;

    VerificationMessage msg{id_, round, index, out.tx, valid, std::move(received), state.epoch_index, state.cnt + 1, {}};
    msg.signature = sign(keys_, msg.signed_body());
    out.revenue = apply_verification(ctx, msg);
    out.message = std::move(msg);
    return out;
  }

  // Replica side of the verification broadcast. Applies messages strictly
  // in (epoch, cnt_i) order, buffering any that arrive early. Returns the
  // revenue reports emitted by epochs that closed.
  std::vector<RevenueReport> on_verification_message(const ProtocolContext& ctx, const VerificationMessage& msg) {
    const auto& ids = *ctx.ids;
    if (msg.leader_id >= ids.governors.size() ||
        !ids.registry.verify(ids.governors[msg.leader_id].public_key, msg.signed_body(), msg.signature))
      throw SimulationError("verification message with a bad leader signature");
    const ProviderId p = msg.tx.provider_id();
    if (p >= buffered_.size()) throw SimulationError("verification message for an unknown provider");

    auto& buf = buffered_[p];
    const auto& state = reputations_[p];
    if (std::pair{msg.epoch_index, msg.cnt} < std::pair{state.epoch_index, state.cnt + 1}) return {};
    buf.emplace(std::pair{msg.epoch_index, msg.cnt}, msg);
    if (buf.size() > kBufferHorizon) throw SimulationError("gap in cnt_i beyond the buffer horizon");

    std::vector<RevenueReport> reports;
    for (;;) {
      const auto& s = reputations_[p];
      auto next = buf.find(std::pair{s.epoch_index, s.cnt + 1});
      if (next == buf.end()) break;
      auto m = std::move(next->second);
      buf.erase(next);
      if (auto r = apply_verification(ctx, m)) reports.push_back(std::move(*r));
    }
    return reports;
  }

  std::size_t buffered_messages(ProviderId p) const { return buffered_.at(p).size(); }

  // Up to b_limit verified-valid transactions in verification order.
  std::vector<CarriedTransaction> next_block_entries(std::size_t b_limit) const {
    std::vector<CarriedTransaction> out;
    for (const auto& [key, c] : carry_) {
      if (out.size() == b_limit) break;
      out.push_back(c);
    }
    return out;
  }

  // Validates and appends; on success updates chain-derived state.
  std::optional<ChainViolation> accept_block(const ProtocolContext& ctx, const BlockProposal& proposal,
                                             GovernorId expected_leader) {
    if (auto v = validate_and_append(ledger_, proposal, expected_leader, *ctx.ids, ctx.b_limit)) return v;
    const Block& b = proposal.block;
    for (const auto& tx : b.tx_list) {
      on_chain_.insert(tx.id());
      carried_ids_.erase(tx.id());
    }
    std::erase_if(carry_, [&](const auto& kv) { return on_chain_.count(kv.second.tx.id()) != 0; });
    for (const auto& t : b.transfers) {
      auto r = apply_stake_transfer(stakes_, t, *ctx.ids);
      if (r.status != TransferStatus::Accepted) return ChainViolation::BadStakeTransfer;
      stakes_ = std::move(r.stakes);
    }
    return std::nullopt;
  }

  // Digest over everything replicas must agree on.
  Digest state_hash() const {
    Encoder e;
    e.bytes(ledger_.tip_hash());
    for (const auto& s : reputations_) {
      e.u64(s.reps.size());
      for (auto r : s.reps) e.i64(r);
      e.u64(s.cnt).u64(s.epoch_threshold).u64(s.epoch_index);
      e.u64(std::bit_cast<std::uint64_t>(s.eta));
    }
    for (const auto& [key, c] : carry_) e.u64(key.first).u64(key.second).nested(c.tx.encode());
    for (auto u : stakes_.units) e.u64(u);
    return sha256(e.data());
  }

 private:
  void forget(const TxId& id) {
    received_.erase(id);
    deadlines_.erase(id);
  }

  std::optional<RevenueReport> apply_verification(const ProtocolContext& ctx, const VerificationMessage& msg) {
    const ProviderId p = msg.tx.provider_id();
    auto& state = reputations_.at(p);
    if (msg.epoch_index != state.epoch_index || msg.cnt != state.cnt + 1)
      throw SimulationError("verification message applied out of order");
    const auto labels = slot_labels(ctx, p, msg.received);
    state = update_reputations(std::move(state), labels, msg.valid ? Verdict::Valid : Verdict::Invalid);
    auto [next, report] = maybe_advance_epoch(std::move(state), labels.size(), ctx.epoch);
    state = std::move(next);

    if (msg.valid) {
      auto endorsement = std::find_if(msg.received.begin(), msg.received.end(),
                                      [](const auto& l) { return l.label == Label::Plus; });
      if (endorsement == msg.received.end()) throw SimulationError("verified transaction without a +1 label");
      carry_.emplace(std::pair{msg.round, msg.index}, CarriedTransaction{msg.tx, *endorsement});
      carried_ids_.insert(msg.tx.id());
    } else {
      known_invalid_.insert(msg.tx.id());
    }
    return report;
  }

  GovernorId id_;
  KeyPair keys_;
  StakeTable stakes_;
  Ledger ledger_;
  std::vector<ReputationState> reputations_;
  std::map<TxId, std::map<CollectorId, LabeledTransaction>> received_;
  std::map<TxId, std::uint64_t> deadlines_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, CarriedTransaction> carry_;
  std::set<TxId> carried_ids_;
  std::set<TxId> on_chain_;
  std::set<TxId> known_invalid_;
  std::vector<std::map<std::pair<std::uint64_t, std::uint64_t>, VerificationMessage>> buffered_;
  std::uint64_t rejected_signatures_ = 0;
  std::uint64_t rejected_forgeries_ = 0;
  std::uint64_t verification_calls_ = 0;
};

// Builds the leader's proposal for a round: up to b_limit carried-over
// valid transactions, the commitment to (InvalidList, UncheckedList), and
// the link to the current tip.
inline BlockProposal propose_block(const GovernorNode& leader, const ProtocolContext& ctx, RoundLists lists) {
  BlockProposal p;
  p.block.serial = leader.ledger().tip().serial + 1;
  p.block.leader_id = leader.id();
  for (auto& c : leader.next_block_entries(ctx.b_limit)) {
    p.block.tx_list.push_back(c.tx);
    p.endorsements.push_back(std::move(c.endorsement));
  }
  p.block.mt_root = lists_commitment(lists.invalid_list, lists.unchecked_list);
  p.block.prev_hash = leader.ledger().tip_hash();
  sign_block(p.block, leader.keys());
  p.lists = std::move(lists);
  p.lists.tx_list = p.block.tx_list;
  return p;
}

inline BlockProposal propose_transfer_block(const GovernorNode& leader, std::vector<StakeTransfer> transfers) {
  BlockProposal p;
  p.block.serial = leader.ledger().tip().serial + 1;
  p.block.leader_id = leader.id();
  p.block.prev_hash = leader.ledger().tip_hash();
  p.block.transfers = std::move(transfers);
  sign_block(p.block, leader.keys());
  return p;
}

}  // namespace repchain
