#pragma once

// Ledger, block validation, stake table and VRF leader election.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "repchain/crypto.hpp"
#include "repchain/types.hpp"

namespace repchain {

enum class ChainViolation {
  NoSkipping,
  ChainIntegrity,
  WrongLeader,
  BadLeaderSignature,
  BlockTooLarge,
  ForgedTransaction,
  UnendorsedTransaction,
  CommitmentMismatch,
  BadStakeTransfer,
};

inline std::string_view to_string(ChainViolation v) {
  switch (v) {
    case ChainViolation::NoSkipping: return "NoSkipping";
    case ChainViolation::ChainIntegrity: return "ChainIntegrity";
    case ChainViolation::WrongLeader: return "WrongLeader";
    case ChainViolation::BadLeaderSignature: return "BadLeaderSignature";
    case ChainViolation::BlockTooLarge: return "BlockTooLarge";
    case ChainViolation::ForgedTransaction: return "ForgedTransaction";
    case ChainViolation::UnendorsedTransaction: return "UnendorsedTransaction";
    case ChainViolation::CommitmentMismatch: return "CommitmentMismatch";
    case ChainViolation::BadStakeTransfer: return "BadStakeTransfer";
  }
  return "Unknown";
}

// What the leader broadcasts at the end of a round: the block, the round's
// lists, and one +1 label per packed transaction as evidence.
struct BlockProposal {
  Block block;
  RoundLists lists;
  std::vector<LabeledTransaction> endorsements;
};

class Ledger {
 public:
  Ledger() : blocks_{genesis_block()}, hashes_{hash_block(blocks_.front())} {}

  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& tip() const { return blocks_.back(); }
  const Digest& tip_hash() const { return hashes_.back(); }
  const Digest& hash_at(std::size_t serial) const { return hashes_.at(serial); }
  std::size_t size() const { return blocks_.size(); }

  // InvalidList/UncheckedList by block serial. Ephemeral in the protocol;
  // kept here for audits.
  const std::map<std::uint64_t, RoundLists>& archive() const { return archive_; }

  friend bool operator==(const Ledger& a, const Ledger& b) { return a.hashes_ == b.hashes_; }

 private:
  friend std::optional<ChainViolation> validate_and_append(Ledger&, const BlockProposal&, GovernorId,
                                                           const IdentityManager&, std::size_t);
  std::vector<Block> blocks_;
  std::vector<Digest> hashes_;
  std::map<std::uint64_t, RoundLists> archive_;
};

inline void sign_block(Block& b, const KeyPair& leader_key) { b.leader_signature = sign(leader_key, b.signed_body()); }

inline std::optional<ChainViolation> check_block(const Ledger& ledger, const BlockProposal& proposal,
                                                 GovernorId expected_leader, const IdentityManager& ids,
                                                 std::size_t b_limit) {
  const Block& b = proposal.block;
  if (b.serial != ledger.tip().serial + 1) return ChainViolation::NoSkipping;
  if (b.prev_hash != ledger.tip_hash()) return ChainViolation::ChainIntegrity;
  if (b.leader_id != expected_leader || b.leader_id >= ids.governors.size()) return ChainViolation::WrongLeader;
  if (!ids.registry.verify(ids.governors[b.leader_id].public_key, b.signed_body(), b.leader_signature))
    return ChainViolation::BadLeaderSignature;
  if (b.tx_list.size() > b_limit) return ChainViolation::BlockTooLarge;

  for (const auto& tx : b.tx_list) {
    if (tx.provider_id() >= ids.providers.size() ||
        !verify_transaction(ids.registry, ids.providers[tx.provider_id()].public_key, tx))
      return ChainViolation::ForgedTransaction;
    const bool endorsed = std::any_of(proposal.endorsements.begin(), proposal.endorsements.end(), [&](const auto& e) {
      return e.tx == tx && e.label == Label::Plus && e.collector_id < ids.collectors.size() &&
             verify_labeled(ids.registry, ids.collectors[e.collector_id].public_key, e);
    });
    if (!endorsed) return ChainViolation::UnendorsedTransaction;
  }

  if (b.is_stake_transfer()) {
    if (!b.tx_list.empty() || b.mt_root != kZeroDigest) return ChainViolation::CommitmentMismatch;
    for (const auto& t : b.transfers) {
      if (t.payer >= ids.governors.size() || t.payee >= ids.governors.size() || t.amount == 0 ||
          !ids.registry.verify(ids.governors[t.payer].public_key, t.signed_body(), t.signature))
        return ChainViolation::BadStakeTransfer;
    }
  } else if (lists_commitment(proposal.lists.invalid_list, proposal.lists.unchecked_list) != b.mt_root) {
    return ChainViolation::CommitmentMismatch;
  }
  return std::nullopt;
}

// Checks No Skipping, Chain Integrity, leader identity and signature, the
// size limit, provider signatures and +1 endorsement of every packed
// transaction, and the list commitment; appends on success.
inline std::optional<ChainViolation> validate_and_append(Ledger& ledger, const BlockProposal& proposal,
                                                         GovernorId expected_leader, const IdentityManager& ids,
                                                         std::size_t b_limit) {
  if (auto v = check_block(ledger, proposal, expected_leader, ids, b_limit)) return v;
  ledger.blocks_.push_back(proposal.block);
  ledger.hashes_.push_back(hash_block(proposal.block));
  if (!proposal.block.is_stake_transfer()) ledger.archive_[proposal.block.serial] = proposal.lists;
  return std::nullopt;
}

// One line of lowercase hex per block, genesis first.
inline std::string export_ledger(const Ledger& ledger) {
  std::string out;
  for (const auto& b : ledger.blocks()) {
    out += to_hex(b.encode());
    out += '\n';
  }
  return out;
}

struct StakeTable {
  std::vector<std::uint64_t> units;  // indexed by governor id

  std::uint64_t total() const { return std::accumulate(units.begin(), units.end(), std::uint64_t{0}); }
  friend bool operator==(const StakeTable&, const StakeTable&) = default;
};

enum class TransferStatus { Accepted, BadSignature, UnknownGovernor, Overdraft, ZeroAmount };

struct TransferResult {
  TransferStatus status;
  StakeTable stakes;
};

inline TransferResult apply_stake_transfer(StakeTable stakes, const StakeTransfer& t, const IdentityManager& ids) {
  if (t.payer >= stakes.units.size() || t.payee >= stakes.units.size() || t.payer >= ids.governors.size())
    return {TransferStatus::UnknownGovernor, std::move(stakes)};
  if (!ids.registry.verify(ids.governors[t.payer].public_key, t.signed_body(), t.signature))
    return {TransferStatus::BadSignature, std::move(stakes)};
  if (t.amount == 0) return {TransferStatus::ZeroAmount, std::move(stakes)};
  if (t.amount > stakes.units[t.payer]) return {TransferStatus::Overdraft, std::move(stakes)};
  stakes.units[t.payer] -= t.amount;
  stakes.units[t.payee] += t.amount;
  return {TransferStatus::Accepted, std::move(stakes)};
}

// VRF ticket for one stake unit.
struct StakeTicket {
  GovernorId governor = 0;
  std::uint64_t unit = 0;
  VrfOutput output;
};

inline Bytes election_input(const Digest& round_seed, std::uint64_t unit) {
  Bytes in(round_seed.begin(), round_seed.end());
  append_u64be(in, unit);
  return in;
}

inline std::vector<StakeTicket> draw_tickets(const KeyPair& key, GovernorId governor, std::uint64_t stake,
                                             const Digest& round_seed) {
  std::vector<StakeTicket> out;
  out.reserve(stake);
  for (std::uint64_t j = 0; j < stake; ++j)
    out.push_back(StakeTicket{governor, j, vrf_eval(key, election_input(round_seed, j))});
  return out;
}

struct ElectionResult {
  GovernorId leader = 0;
  Digest winning_value{};
  std::vector<GovernorId> excluded;
};

// The owner of the stake unit with the least VRF value wins; ties go to the
// lower governor id. A governor with any ticket that fails verification (or
// claims a unit it does not hold) is excluded for the round.
inline ElectionResult elect_leader(const StakeTable& stakes, const Digest& round_seed,
                                   std::span<const StakeTicket> tickets, const IdentityManager& ids) {
  if (stakes.total() == 0) throw std::invalid_argument("elect_leader: total stake is zero");
  std::vector<bool> bad(stakes.units.size(), false);
  for (const auto& t : tickets) {
    if (t.governor >= stakes.units.size() || t.governor >= ids.governors.size()) continue;
    if (t.unit >= stakes.units[t.governor] ||
        !ids.registry.vrf_verify(ids.governors[t.governor].public_key, election_input(round_seed, t.unit), t.output))
      bad[t.governor] = true;
  }
  ElectionResult result;
  for (GovernorId g = 0; g < bad.size(); ++g)
    if (bad[g]) result.excluded.push_back(g);

  const StakeTicket* best = nullptr;
  for (const auto& t : tickets) {
    if (t.governor >= bad.size() || bad[t.governor]) continue;
    if (!best || std::tie(t.output.value, t.governor) < std::tie(best->output.value, best->governor)) best = &t;
  }
  if (!best) throw std::runtime_error("elect_leader: no verifiable stake unit");
  result.leader = best->governor;
  result.winning_value = best->output.value;
  return result;
}

inline ElectionResult elect_leader(const StakeTable& stakes, const Digest& round_seed, const IdentityManager& ids) {
  std::vector<StakeTicket> tickets;
  for (GovernorId g = 0; g < stakes.units.size(); ++g) {
    auto mine = draw_tickets(ids.governors.at(g), g, stakes.units[g], round_seed);
    tickets.insert(tickets.end(), mine.begin(), mine.end());
  }
  return elect_leader(stakes, round_seed, tickets, ids);
}

}  // namespace repchain
