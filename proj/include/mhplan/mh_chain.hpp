#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "mhplan/types.hpp"

namespace mhplan {

/// Proposal variance that steps up every `switch_every` proposals.
struct VarianceSchedule {
  std::vector<double> variances{2.0, 5.0, 10.0};
  std::size_t switch_every = 16000;

  [[nodiscard]] double variance_at(std::size_t step) const {
    const std::size_t stage = switch_every == 0 ? 0 : step / switch_every;
    return variances[std::min(stage, variances.size() - 1)];
  }

  void validate() const {
    require(!variances.empty(), "variance schedule is empty");
    for (double v : variances) require(v > 0.0 && std::isfinite(v), "proposal variances must be positive");
  }
};

struct ChainStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  /// Smallest log acceptance probability seen; finite means every step had alpha > 0.
  double min_log_alpha = 0.0;

  [[nodiscard]] double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

/// Metropolis-Hastings with a symmetric proposal, evaluated in log space.
///
/// `log_score(state)` returns log s(state) (up to a constant), `propose(state,
/// step, rng)` draws a candidate, and `visit(step, candidate, candidate_log_score,
/// accepted, current)` sees every candidate together with the chain state after
/// the accept/reject decision. A proposal is accepted with probability
/// min(1, s(candidate) / s(current)).
template <class State, class LogScore, class Propose, class Visit, class Rng>
ChainStats run_metropolis_hastings(State current, std::size_t n_proposals, LogScore &&log_score, Propose &&propose,
                                   Visit &&visit, Rng &rng) {
  ChainStats stats;
  double current_ls = log_score(current);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t step = 0; step < n_proposals; ++step) {
    State candidate = propose(current, step, rng);
    const double candidate_ls = log_score(candidate);
    const double log_alpha = std::min(0.0, candidate_ls - current_ls);
    stats.min_log_alpha = std::min(stats.min_log_alpha, log_alpha);
    // Always draw, so the random stream does not depend on the branch taken.
    const double u = unit(rng);
    const bool accepted = log_alpha >= 0.0 || u < std::exp(log_alpha);
    ++stats.proposals;
    if (accepted) {
      ++stats.accepted;
      current = candidate;
      current_ls = candidate_ls;
    }
    visit(step, candidate, candidate_ls, accepted, current);
  }
  return stats;
}

}  // namespace mhplan
