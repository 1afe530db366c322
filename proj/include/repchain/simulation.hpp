#pragma once

// Synchronous round scheduler. Every message sent in round r is delivered
// at the start of round r + 1, in send order.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "repchain/config.hpp"
#include "repchain/consensus.hpp"
#include "repchain/metrics.hpp"
#include "repchain/nodes.hpp"

namespace repchain {

template <typename T>
struct Envelope {
  std::uint64_t sent_round = 0;
  std::uint64_t sender = 0;
  std::uint64_t recipient = 0;  // ignored on broadcast channels
  T payload;
};

// A block travels with the leader every replica elected for its round.
struct BlockMessage {
  BlockProposal proposal;
  GovernorId expected_leader = 0;
};

using GovernorPayload = std::variant<VerificationMessage, BlockMessage>;

struct ChannelCounts {
  std::uint64_t pc = 0;
  std::uint64_t cg = 0;
  std::uint64_t gg = 0;
  std::uint64_t all = 0;
};

class MessageBus {
 public:
  struct Batch {
    std::vector<Envelope<Transaction>> pc;
    std::vector<Envelope<LabeledTransaction>> cg;
    std::vector<Envelope<GovernorPayload>> gg;
    std::vector<Envelope<Feedback>> all;
  };

  MessageBus(std::size_t providers, std::size_t collectors, std::size_t governors)
      : providers_(providers), collectors_(collectors), governors_(governors) {}

  void to_collector(std::uint64_t round, ProviderId from, CollectorId to, Transaction tx) {
    out_.pc.push_back({round, from, to, std::move(tx)});
    ++sent_.pc;
  }

  // To every governor.
  void to_governors(std::uint64_t round, CollectorId from, LabeledTransaction ltx) {
    out_.cg.push_back({round, from, 0, std::move(ltx)});
    sent_.cg += governors_;
  }

  // To every governor but the sender.
  void among_governors(std::uint64_t round, GovernorId from, GovernorPayload msg) {
    out_.gg.push_back({round, from, 0, std::move(msg)});
    sent_.gg += governors_ - 1;
  }

  // To every provider and collector.
  void to_all(std::uint64_t round, GovernorId from, Feedback fb) {
    out_.all.push_back({round, from, 0, std::move(fb)});
    sent_.all += providers_ + collectors_;
  }

  // Hands over everything sent before `round` and checks the one-round
  // delay. Returns the number of envelopes that broke it.
  std::pair<Batch, std::uint64_t> deliver(std::uint64_t round) {
    Batch b = std::move(out_);
    out_ = Batch{};
    std::uint64_t late = 0;
    auto check = [&](const auto& queue) {
      for (const auto& e : queue) {
        const auto delay = round - e.sent_round;
        max_delay_ = std::max(max_delay_, delay);
        if (delay != 1) ++late;
      }
    };
    check(b.pc);
    check(b.cg);
    check(b.gg);
    check(b.all);
    return {std::move(b), late};
  }

  // Messages sent since the last call.
  ChannelCounts take_counts() { return std::exchange(sent_, ChannelCounts{}); }

  std::uint64_t max_delay() const { return max_delay_; }
  std::size_t in_flight() const { return out_.pc.size() + out_.cg.size() + out_.gg.size() + out_.all.size(); }
  const Batch& outbox() const { return out_; }

 private:
  std::size_t providers_, collectors_, governors_;
  Batch out_;
  ChannelCounts sent_;
  std::uint64_t max_delay_ = 0;
};

struct World {
  ScenarioConfig config;
  std::shared_ptr<const IdentityManager> ids;
  ProtocolContext ctx;
  std::vector<ProviderNode> providers;
  std::vector<CollectorNode> collectors;
  std::vector<GovernorNode> governors;
  std::vector<Rng> screen_rngs;  // one per governor
  MessageBus bus{0, 0, 0};
  MetricsLog metrics;
  std::vector<std::vector<Transaction>> resubmit;  // per provider, for this round
  std::uint64_t round = 0;  // last completed round
  std::uint64_t transfer_nonce = 0;
};

inline World make_world(const ScenarioConfig& config) {
  validate(config);
  World w;
  w.config = config;
  w.ids = std::make_shared<const IdentityManager>(IdentityManager::issue(config.seed, config.l, config.n, config.m));
  w.ctx.ids = w.ids.get();
  w.ctx.topology = config.topology;
  w.ctx.epoch = EpochPolicy{config.T, config.fixed_eta, config.mu};
  w.ctx.delta_rounds = config.delta_rounds;
  w.ctx.b_limit = config.b_limit;

  for (ProviderId p = 0; p < config.l; ++p)
    w.providers.emplace_back(p, w.ids->providers[p], config.topology[p], config.gen_rate, config.invalid_fraction,
                             substream(config.seed, "provider", p));
  for (CollectorId c = 0; c < config.n; ++c)
    w.collectors.emplace_back(c, w.ids->collectors[c], config.strategies[c], substream(config.seed, "collector", c));
  const StakeTable stakes{config.stakes};
  for (GovernorId g = 0; g < config.m; ++g) {
    w.governors.emplace_back(g, w.ids->governors[g], w.ctx, stakes);
    w.screen_rngs.push_back(substream(config.seed, "screen", g));
  }
  w.bus = MessageBus(config.l, config.n, config.m);
  w.metrics = MetricsLog::for_topology(config.topology);
  w.resubmit.resize(config.l);
  return w;
}

namespace detail {

inline void note_violation(MetricsLog& m, ChainViolation v) { ++m.chain_violations[std::string(to_string(v))]; }

// Start-of-round deliveries between governors, then the feedback broadcast.
// Providers queue their resubmissions for the current round.
inline void deliver_governor_traffic(World& w, MessageBus::Batch& batch) {
  for (const auto& env : batch.gg) {
    for (GovernorId g = 0; g < w.governors.size(); ++g) {
      if (g == env.sender) continue;
      if (const auto* vm = std::get_if<VerificationMessage>(&env.payload)) {
        w.governors[g].on_verification_message(w.ctx, *vm);
      } else {
        const auto& bm = std::get<BlockMessage>(env.payload);
        if (auto v = w.governors[g].accept_block(w.ctx, bm.proposal, bm.expected_leader)) note_violation(w.metrics, *v);
      }
    }
  }
  for (const auto& env : batch.all) {
    for (auto& p : w.providers) {
      auto again = p.on_feedback(env.payload);
      auto& dst = w.resubmit[p.id()];
      dst.insert(dst.end(), again.begin(), again.end());
    }
    for (auto& c : w.collectors) c.on_feedback(env.payload);
  }
}

inline void check_agreement(World& w) {
  const auto ref = w.governors.front().state_hash();
  for (std::size_t g = 1; g < w.governors.size(); ++g)
    if (w.governors[g].state_hash() != ref) ++w.metrics.agreement_violations;
}

inline void record_block(World& w, const Block& b, std::uint64_t round) {
  for (const auto& tx : b.tx_list) {
    auto it = w.metrics.txs.find(tx.id());
    if (it == w.metrics.txs.end() || !observed_ground_truth(tx)) {
      ++w.metrics.forged_on_chain;
      continue;
    }
    if (it->second.on_chain_round) {
      note_violation(w.metrics, ChainViolation::ChainIntegrity);
      continue;
    }
    it->second.on_chain_round = round;
  }
}

}  // namespace detail

// One full round: deliveries, Collecting, Uploading, Processing.
inline void step_round(World& w) {
  const std::uint64_t r = ++w.round;
  auto& m = w.metrics;
  const auto& ids = *w.ids;
  RoundRow row;
  row.round = r;

  auto [batch, late] = w.bus.deliver(r);
  m.synchrony_violations += late;
  m.max_delivery_delay = w.bus.max_delay();

  // Verification messages before blocks so replicas rebuild the leader's
  // carry-over before the block consumes it.
  detail::deliver_governor_traffic(w, batch);

  for (const auto& env : batch.cg) {
    for (GovernorId g = 0; g < w.governors.size(); ++g) {
      const auto res = w.governors[g].on_labeled_tx(w.ctx, env.payload, r);
      if (g != 0) continue;
      if (res == LabelInsert::BadCollectorSignature) ++m.bad_label_signatures;
      if (res == LabelInsert::ForgedTransaction) ++m.forgeries_rejected;
      if (res == LabelInsert::ConflictIgnored) ++m.conflicting_labels;
    }
  }

  // Collecting.
  const bool generating = !w.config.gen_rounds || r <= *w.config.gen_rounds;
  for (auto& p : w.providers) {
    std::vector<Transaction> out;
    if (generating) {
      out = p.generate(r);
      for (const auto& tx : out) m.txs[tx.id()] = TxLifecycle{r, observed_ground_truth(tx), 0, 0, std::nullopt, false};
    }
    auto& again = w.resubmit[p.id()];
    out.insert(out.end(), again.begin(), again.end());
    again.clear();
    for (const auto& tx : out) {
      ++m.txs[tx.id()].submissions;
      for (auto c : p.connected_collectors()) w.bus.to_collector(r, p.id(), c, tx);
    }
  }

  // Uploading.
  for (const auto& env : batch.pc) {
    auto& c = w.collectors[env.recipient];
    if (auto ltx = c.process(env.payload, ids)) w.bus.to_governors(r, c.id(), std::move(*ltx));
    if (auto fake = c.maybe_fabricate(env.payload, r)) {
      ++m.forgery_attempts;
      w.bus.to_governors(r, c.id(), std::move(*fake));
    }
  }

  // Processing.
  detail::check_agreement(w);
  auto& ref = w.governors.front();
  const GovernorId leader_id = elect_leader(ref.stakes(), ref.ledger().tip_hash(), ids).leader;
  row.leader_id = leader_id;
  auto& leader = w.governors[leader_id];

  RoundLists lists;
  std::uint64_t index = 0;
  for (const auto& id : leader.expired(r)) {
    auto out = leader.screen(w.ctx, id, w.screen_rngs[leader_id], r, index++);
    if (out.kind == ScreeningKind::Skipped) continue;
    const bool verified = out.kind != ScreeningKind::Unchecked;
    ++row.txs_screened;
    if (verified) ++row.txs_verified;
    if (out.kind == ScreeningKind::Invalid) ++row.wasted_verifications;
    if (out.kind == ScreeningKind::Invalid) lists.invalid_list.push_back(out.tx);
    if (out.kind == ScreeningKind::Unchecked) lists.unchecked_list.push_back(out.tx);
    m.record_screening(ScreeningRecord{r, id.provider_id, id, observed_ground_truth(out.tx), out.labels, out.probs,
                                       out.drawn_slot, verified, out.epoch_index, out.epoch_threshold, out.eta});
    if (out.revenue) m.record_epoch_close(EpochClose{r, id.provider_id, out.epoch_index, out.revenue->shares});
    if (out.message) w.bus.among_governors(r, leader_id, std::move(*out.message));
  }
  for (GovernorId g = 0; g < w.governors.size(); ++g)
    if (g != leader_id) w.governors[g].discard_expired(r);

  auto proposal = propose_block(leader, w.ctx, std::move(lists));
  if (auto v = leader.accept_block(w.ctx, proposal, leader_id)) {
    detail::note_violation(m, *v);
  } else {
    ++row.blocks;
    detail::record_block(w, proposal.block, r);
  }
  w.bus.to_all(r, leader_id,
               Feedback{proposal.block, proposal.lists.invalid_list, proposal.lists.unchecked_list});
  w.bus.among_governors(r, leader_id, BlockMessage{std::move(proposal), leader_id});

  std::vector<StakeTransfer> transfers;
  for (const auto& t : w.config.stake_transfers)
    if (t.round == r)
      transfers.push_back(make_stake_transfer(ids.governors[t.from], t.from, t.to, t.amount, w.transfer_nonce++));
  if (!transfers.empty()) {
    auto tp = propose_transfer_block(leader, std::move(transfers));
    if (auto v = leader.accept_block(w.ctx, tp, leader_id)) {
      detail::note_violation(m, *v);
    } else {
      ++row.blocks;
      m.stake_transfers_applied += tp.block.transfers.size();
      w.bus.among_governors(r, leader_id, BlockMessage{std::move(tp), leader_id});
    }
  }

  const auto counts = w.bus.take_counts();
  row.messages_pc = counts.pc;
  row.messages_cg = counts.cg;
  row.messages_gg = counts.gg;
  m.messages_feedback += counts.all;
  m.rounds.push_back(row);
}

inline World stepped(World w) {
  step_round(w);
  return w;
}

// After the last round: deliver what governors and the feedback broadcast
// still carry, so replicas and providers see the final blocks.
inline void flush(World& w) {
  auto [batch, late] = w.bus.deliver(w.round + 1);
  w.metrics.synchrony_violations += late;
  detail::deliver_governor_traffic(w, batch);
  detail::check_agreement(w);
}

// Digest over the replicated governor state, provider backlogs, the round
// counter and what is still on the wire.
inline Digest state_hash(const World& w) {
  Encoder e;
  e.u64(w.round);
  for (const auto& g : w.governors) e.bytes(g.state_hash());
  for (const auto& p : w.providers) {
    e.u64(p.pending().size());
    for (const auto& [id, tx] : p.pending()) e.nested(tx.encode());
  }
  const auto& out = w.bus.outbox();
  e.u64(out.pc.size()).u64(out.cg.size()).u64(out.gg.size()).u64(out.all.size());
  for (const auto& env : out.cg) e.nested(env.payload.encode());
  return sha256(e.data());
}

struct Conservation {
  std::uint64_t generated = 0;
  std::uint64_t on_chain = 0;
  std::uint64_t invalid_archive = 0;
  std::uint64_t pending = 0;             // valid, still held by its provider
  std::uint64_t unverified_invalid = 0;  // invalid, never verified
  std::uint64_t violations = 0;
};

inline Conservation conservation(const World& w) {
  Conservation c;
  for (const auto& [id, t] : w.metrics.txs) {
    ++c.generated;
    const bool chain = t.on_chain_round.has_value();
    const bool pending = w.providers.at(id.provider_id).pending().count(id) != 0;
    const int classes = int(chain) + int(t.verified_invalid) + int(pending);
    if (t.valid) {
      if (classes != 1 || t.verified_invalid) ++c.violations;
    } else if (chain || pending) {
      ++c.violations;
    }
    if (chain) ++c.on_chain;
    else if (t.verified_invalid) ++c.invalid_archive;
    else if (pending) ++c.pending;
    else if (!t.valid) ++c.unverified_invalid;
  }
  return c;
}

struct RunResult {
  Ledger ledger;
  MetricsLog metrics;
  bool replicas_agree = true;
  Conservation conservation;
};

inline RunResult run(const ScenarioConfig& config) {
  World w = make_world(config);
  for (std::uint64_t r = 0; r < config.total_rounds; ++r) step_round(w);
  flush(w);
  RunResult res;
  res.replicas_agree = true;
  for (const auto& g : w.governors)
    if (!(g.ledger() == w.governors.front().ledger())) res.replicas_agree = false;
  res.conservation = conservation(w);
  res.ledger = w.governors.front().ledger();
  res.metrics = std::move(w.metrics);
  return res;
}

}  // namespace repchain
