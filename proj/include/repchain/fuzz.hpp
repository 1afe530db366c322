#pragma once

// Block tampering used by the property suite: builds well-formed proposals
// on top of a ledger and flips exactly one field.

#include <string>
#include <vector>

#include "repchain/consensus.hpp"
#include "repchain/rng.hpp"

namespace repchain::fuzz {

inline constexpr const char* kBlockFields[] = {"serial",         "leader_id",    "tx_list",    "mt_root",
                                               "prev_hash",      "signature",    "invalid_list", "unchecked_list",
                                               "endorsement"};

// A valid next block for `ledger` with a random leader, up to four packed
// transactions and a few list entries.
inline BlockProposal random_proposal(const IdentityManager& ids, const Ledger& ledger, Rng& rng,
                                     std::uint64_t& next_seq) {
  auto tx = [&](bool valid) {
    const ProviderId p = rng.below(ids.providers.size());
    return make_transaction(ids.providers[p], TxId{p, next_seq++, ledger.size()}, valid);
  };
  BlockProposal out;
  Block& b = out.block;
  b.serial = ledger.tip().serial + 1;
  b.leader_id = rng.below(ids.governors.size());
  const auto packed = 1 + rng.below(4);
  for (std::uint64_t i = 0; i < packed; ++i) {
    b.tx_list.push_back(tx(true));
    const CollectorId c = rng.below(ids.collectors.size());
    out.endorsements.push_back(make_labeled(ids.collectors[c], c, b.tx_list.back(), Label::Plus));
  }
  for (auto i = rng.below(3); i > 0; --i) out.lists.invalid_list.push_back(tx(false));
  for (auto i = 1 + rng.below(3); i > 0; --i) out.lists.unchecked_list.push_back(tx(true));
  out.lists.tx_list = b.tx_list;
  b.mt_root = lists_commitment(out.lists.invalid_list, out.lists.unchecked_list);
  b.prev_hash = ledger.tip_hash();
  sign_block(b, ids.governors[b.leader_id]);
  return out;
}

inline void flip_bit(Digest& d, Rng& rng) { d[rng.below(d.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8)); }

// Changes field `which` (an index into kBlockFields) without re-signing.
inline void tamper(BlockProposal& p, std::size_t which, Rng& rng) {
  Block& b = p.block;
  switch (which) {
    case 0: b.serial += 1 + rng.below(3); break;
    case 1: b.leader_id += 1 + rng.below(3); break;
    case 2: {
      auto& tx = b.tx_list[rng.below(b.tx_list.size())];
      TxId id = tx.id();
      id.timestamp += 1;
      tx = Transaction(id, true, tx.signature());
      break;
    }
    case 3: flip_bit(b.mt_root, rng); break;
    case 4: flip_bit(b.prev_hash, rng); break;
    case 5: flip_bit(b.leader_signature.tag, rng); break;
    case 6: p.lists.invalid_list.erase(p.lists.invalid_list.begin()); break;
    case 7: std::swap(p.lists.unchecked_list.front(), p.lists.invalid_list.front()); break;
    case 8: p.endorsements[rng.below(p.endorsements.size())].label = Label::Minus; break;
    default: break;
  }
}

// Tampering with list fields needs non-empty lists; these proposals always
// carry at least one unchecked entry but may have no invalid ones.
inline bool applicable(const BlockProposal& p, std::size_t which) {
  if (which == 6 || which == 7) return !p.lists.invalid_list.empty();
  return true;
}

}  // namespace repchain::fuzz
