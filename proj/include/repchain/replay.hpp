#pragma once

// Monte-Carlo replay of a fixed label matrix through a real governor, for
// comparison with the exact oracle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "repchain/nodes.hpp"
#include "repchain/oracle.hpp"

namespace repchain {

struct ReplaySample {
  double wasted = 0.0;
  double proof_loss = 0.0;
  std::vector<double> slot_loss;
};

struct MonteCarloEstimate {
  std::size_t runs = 0;
  double wasted_mean = 0.0;
  double wasted_var = 0.0;  // sample variance of a single run
  double proof_mean = 0.0;
  double proof_var = 0.0;
  std::vector<double> slot_mean;

  double wasted_stderr() const { return std::sqrt(wasted_var / static_cast<double>(runs)); }
  double proof_stderr() const { return std::sqrt(proof_var / static_cast<double>(runs)); }
};

class OracleReplay {
 public:
  OracleReplay(const oracle::Instance& in, std::uint64_t key_seed) : instance_(in) {
    oracle::check_size(in);
    u_ = oracle::slot_count(in);
    ids_ = IdentityManager::issue(key_seed, 1, u_, 1);
    ctx_.ids = &ids_;
    std::vector<CollectorId> slots(u_);
    for (std::size_t k = 0; k < u_; ++k) slots[k] = k;
    ctx_.topology = {slots};
    // One epoch covers the whole instance.
    ctx_.epoch = EpochPolicy{in.labels.size() + 1, in.eta, 1.0};
    ctx_.delta_rounds = 1;
    ctx_.b_limit = in.labels.size() + 1;

    for (std::size_t t = 0; t < in.labels.size(); ++t) {
      auto tx = make_transaction(ids_.providers[0], TxId{0, t, t}, in.valid[t]);
      std::vector<LabeledTransaction> row;
      for (std::size_t k = 0; k < u_; ++k) {
        const auto c = in.labels[t][k];
        if (c == 0) continue;
        row.push_back(make_labeled(ids_.collectors[k], k, tx, c == 1 ? Label::Plus : Label::Minus));
      }
      labeled_.push_back(std::move(row));
      txs_.push_back(std::move(tx));
    }
  }

  OracleReplay(const OracleReplay&) = delete;
  OracleReplay& operator=(const OracleReplay&) = delete;

  ReplaySample run_once(Rng& rng) const {
    GovernorNode gov(0, ids_.governors[0], ctx_, StakeTable{{1}});
    if (!instance_.initial_reps.empty()) gov.mutable_reputations()[0].reps = instance_.initial_reps;
    const auto start = gov.reputation(0).reps;
    ReplaySample s;
    for (std::size_t t = 0; t < txs_.size(); ++t) {
      for (const auto& l : labeled_[t]) gov.on_labeled_tx(ctx_, l, t);
      // Nothing reached the governor: every slot counts as -1 and the
      // transaction is never verified.
      if (labeled_[t].empty()) continue;
      auto out = gov.screen(ctx_, txs_[t].id(), rng, t, 0);
      if (out.kind == ScreeningKind::Unchecked) continue;
      if (out.kind == ScreeningKind::Invalid) s.wasted += 1.0;
      for (std::size_t k = 0; k < u_; ++k)
        if ((effective(out.labels[k]) == Label::Plus) != instance_.valid[t]) s.proof_loss += out.probs[k];
    }
    const auto& end = gov.reputation(0).reps;
    for (std::size_t k = 0; k < u_; ++k) s.slot_loss.push_back(static_cast<double>(start[k] - end[k]));
    return s;
  }

  MonteCarloEstimate estimate(std::size_t runs, std::uint64_t seed) const {
    Rng rng = substream(seed, "replay");
    MonteCarloEstimate e;
    e.runs = runs;
    e.slot_mean.assign(u_, 0.0);
    double ws = 0, wss = 0, ps = 0, pss = 0;
    for (std::size_t i = 0; i < runs; ++i) {
      auto s = run_once(rng);
      ws += s.wasted;
      wss += s.wasted * s.wasted;
      ps += s.proof_loss;
      pss += s.proof_loss * s.proof_loss;
      for (std::size_t k = 0; k < u_; ++k) e.slot_mean[k] += s.slot_loss[k];
    }
    const double n = static_cast<double>(runs);
    e.wasted_mean = ws / n;
    e.proof_mean = ps / n;
    if (runs > 1) {
      e.wasted_var = std::max(0.0, (wss - n * e.wasted_mean * e.wasted_mean) / (n - 1));
      e.proof_var = std::max(0.0, (pss - n * e.proof_mean * e.proof_mean) / (n - 1));
    }
    for (auto& m : e.slot_mean) m /= n;
    return e;
  }

  std::size_t slots() const { return u_; }

 private:
  oracle::Instance instance_;
  std::size_t u_ = 0;
  IdentityManager ids_;
  ProtocolContext ctx_;
  std::vector<Transaction> txs_;
  std::vector<std::vector<LabeledTransaction>> labeled_;
};

}  // namespace repchain
