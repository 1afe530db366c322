#pragma once

// Hedge-style reputation engine: softmax selection over collector slots,
// one-sided penalties on verified transactions, and epoch doubling with a
// revenue payout and reputation reset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "repchain/rng.hpp"
#include "repchain/types.hpp"

namespace repchain {

// A provider with no collector slots cannot be screened.
struct TopologyError : std::logic_error {
  using std::logic_error::logic_error;
};

enum class Verdict { Valid, Invalid };

struct ReputationState {
  std::vector<std::int64_t> reps;
  std::uint64_t cnt = 0;
  std::uint64_t epoch_threshold = 1;
  double eta = 1.0;
  std::uint64_t epoch_index = 0;

  friend bool operator==(const ReputationState&, const ReputationState&) = default;
};

struct RevenueReport {
  std::vector<double> shares;
};

struct EpochPolicy {
  std::uint64_t initial_threshold = 1;
  // nullopt: eta = sqrt(ln u / T_i), re-tuned at every doubling.
  std::optional<double> fixed_eta;
  double mu = 1.0;
};

// Learning rate for an epoch of the given threshold. A single slot is
// selected with probability one whatever eta is, so u == 1 gets eta = 1.
inline double tuned_eta(std::size_t u, std::uint64_t threshold) {
  if (u <= 1) return 1.0;
  return std::sqrt(std::log(static_cast<double>(u)) / static_cast<double>(threshold));
}

inline double epoch_eta(const EpochPolicy& policy, std::size_t u, std::uint64_t threshold) {
  return policy.fixed_eta ? *policy.fixed_eta : tuned_eta(u, threshold);
}

inline ReputationState initial_reputation(std::size_t u, const EpochPolicy& policy) {
  if (u == 0) throw TopologyError("provider has no connected collectors");
  if (policy.initial_threshold == 0) throw std::invalid_argument("epoch threshold T must be positive");
  return ReputationState{std::vector<std::int64_t>(u, 0), 0, policy.initial_threshold,
                         epoch_eta(policy, u, policy.initial_threshold), 0};
}

namespace detail {

inline std::vector<double> softmax(std::span<const std::int64_t> reps, double rate) {
  if (reps.empty()) throw TopologyError("softmax over an empty reputation vector");
  if (!(rate > 0.0)) throw std::invalid_argument("softmax rate must be positive");
  const auto top = *std::max_element(reps.begin(), reps.end());
  std::vector<double> out(reps.size());
  double total = 0.0;
  for (std::size_t k = 0; k < reps.size(); ++k) {
    out[k] = std::exp(rate * static_cast<double>(reps[k] - top));
    total += out[k];
  }
  for (auto& p : out) p /= total;
  return out;
}

}  // namespace detail

inline std::vector<double> selection_probabilities(std::span<const std::int64_t> reps, double eta) {
  return detail::softmax(reps, eta);
}

inline RevenueReport revenue_shares(std::span<const std::int64_t> reps, double mu) {
  return RevenueReport{detail::softmax(reps, mu)};
}

// Inverse-CDF draw in slot order. Consumes exactly one uniform.
inline std::size_t draw_collector(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw TopologyError("draw over an empty distribution");
  const double x = rng.uniform01();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] > 0.0) last_positive = k;
    cum += probs[k];
    if (x < cum) return k;
  }
  // Rounding left the total just under one.
  return last_positive;
}

// On a valid verdict every slot without a +1 loses
// one unit; on an invalid verdict every slot with a +1 loses one unit.
inline ReputationState update_reputations(ReputationState state, std::span<const SlotLabel> labels, Verdict verdict) {
  if (labels.size() != state.reps.size())
    throw std::invalid_argument("update_reputations: label vector does not match slot count");
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const bool plus = effective(labels[k]) == Label::Plus;
    if ((verdict == Verdict::Valid) != plus) state.reps[k] -= 1;
  }
  state.cnt += 1;
  return state;
}

inline std::pair<ReputationState, std::optional<RevenueReport>> maybe_advance_epoch(ReputationState state,
                                                                                    std::size_t u,
                                                                                    const EpochPolicy& policy) {
  if (state.cnt < state.epoch_threshold) return {std::move(state), std::nullopt};
  auto report = revenue_shares(state.reps, policy.mu);
  std::fill(state.reps.begin(), state.reps.end(), 0);
  state.cnt = 0;
  state.epoch_threshold *= 2;
  state.epoch_index += 1;
  state.eta = epoch_eta(policy, u, state.epoch_threshold);
  return {std::move(state), std::move(report)};
}

}  // namespace repchain
