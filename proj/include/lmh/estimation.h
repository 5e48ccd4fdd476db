#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lmh/marginals.h"
#include "lmh/model.h"

namespace lmh {

inline constexpr double kDefaultKlEpsilon = 1e-6;
inline constexpr std::uint64_t kGoldMinIterations = 1'000'000;

struct KLReport {
  std::vector<double> per_variable;
  double average = 0.0;
  double epsilon = kDefaultKlEpsilon;
};

// Empirical value frequencies over an explicit sample stream.
MarginalTable estimate_marginals(std::span<const State> samples,
                                 std::span<const int> cardinalities);

// Count-weighted average of two tables over the same variables.
MarginalTable merge_marginals(const MarginalTable& a, const MarginalTable& b);

// Average over variables of KL(truth || estimate'), where estimate' clamps
// every entry into [epsilon, 1 - epsilon] and renormalizes.
KLReport avg_kl(const MarginalTable& truth, const MarginalTable& estimate,
                double epsilon = kDefaultKlEpsilon);

// Marginal estimator for a chain that only reports value changes. A variable
// holding a value over a run of iterations contributes the number of retained
// sample points in that run, so each step costs O(changed variables).
//
// Iteration t >= 1 denotes the state after the t-th kernel application; it is
// retained when t > burn_in and (t - burn_in) % thinning == 0.
class MarginalAccumulator {
 public:
  MarginalAccumulator(std::span<const int> cardinalities, std::uint64_t burn_in,
                      std::uint64_t thinning, std::span<const int> initial);

  // `var` took a new value at `iteration`; it held `old_value` before.
  void record_change(int var, int old_value, std::uint64_t iteration) {
    const std::uint64_t retained = retained_through(iteration - 1);
    counts_[var][old_value] += retained - retained_through(accounted_[var]);
    accounted_[var] = iteration - 1;
  }

  // Number of retained sample points among iterations 1..iteration.
  std::uint64_t retained_through(std::uint64_t iteration) const {
    if (iteration <= burn_in_) return 0;
    return (iteration - burn_in_) / thinning_;
  }

  // Marginals over the retained points up to and including `iteration`, with
  // `current` the state at that iteration. Throws if nothing was retained.
  MarginalTable snapshot(std::span<const int> current, std::uint64_t iteration) const;

 private:
  std::uint64_t burn_in_;
  std::uint64_t thinning_;
  std::vector<std::vector<std::uint64_t>> counts_;
  std::vector<std::uint64_t> accounted_;
};

// Marginals from a long Gibbs run with the first 10% discarded as burn-in.
MarginalTable gold_standard(const Model& model, std::uint64_t seed,
                            std::uint64_t iterations,
                            std::uint64_t min_iterations = kGoldMinIterations);

}  // namespace lmh
