#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmh/estimation.h"
#include "lmh/group.h"
#include "lmh/model.h"
#include "lmh/random.h"

namespace lmh {

// A variable whose value changed during one step, with its previous value.
struct ValueChange {
  int var = 0;
  int old_value = 0;
};

enum class KernelKind { kGibbs, kOrbital, kMixture };

struct OrbitalKernelSpec {
  std::shared_ptr<const PermutationGroup> group;
  // Selection weight among orbital kernels; <= 0 means "moved-variable count".
  double weight = 0.0;
};

// Transition rule of a chain. A mixture applies the Gibbs kernel with
// probability alpha and otherwise one orbital kernel picked by weight; a
// mixture without orbital kernels is plain Gibbs.
struct KernelConfig {
  KernelKind kind = KernelKind::kGibbs;
  double alpha = 0.8;
  std::vector<OrbitalKernelSpec> orbitals;
  bool systematic_scan = false;
  bool debug_full_eval = false;

  static KernelConfig gibbs();
  static KernelConfig orbital(std::shared_ptr<const PermutationGroup> group);
  static KernelConfig mixture(double alpha,
                              std::vector<std::shared_ptr<const PermutationGroup>> groups);

  void validate(const Model& model) const;
  // Normalized selection weights of the orbital kernels.
  std::vector<double> selection_weights() const;
};

inline constexpr double kDefaultAlpha = 0.8;

struct OrbitalStats {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
};

struct ChainStats {
  std::uint64_t gibbs_steps = 0;
  double kernel_wall_ms = 0.0;  // filled by run_chain
  std::vector<OrbitalStats> orbital;

  std::uint64_t orbital_proposed() const;
  std::uint64_t orbital_accepted() const;
  // accepted / proposed over all orbital kernels; NaN when none proposed.
  double acceptance_rate() const;
};

// Random-scan Gibbs: pick a variable uniformly and resample it from its
// conditional. Systematic scan cycles through variables instead.
class GibbsKernel {
 public:
  explicit GibbsKernel(const Model& model, bool systematic_scan = false);

  // Resamples one variable; reports it when its value changed.
  std::optional<ValueChange> step(State& state, Rng& rng);

 private:
  const Model* model_;
  bool systematic_;
  int next_ = 0;
  std::vector<double> weights_;
};

// Orbital Metropolis: propose y = x^g for a random group element g and accept
// with probability min{pi(y)/pi(x), 1}. Only potentials touching variables
// whose value changes are evaluated.
class OrbitalKernel {
 public:
  OrbitalKernel(const Model& model, std::shared_ptr<const PermutationGroup> group,
                Rng& rng, bool debug_full_eval = false);

  // Returns whether the proposal was accepted; on acceptance the variables
  // whose value changed are appended to `changed`.
  bool step(State& state, Rng& rng, std::vector<ValueChange>& changed);

  double last_log_ratio() const { return last_log_ratio_; }
  int last_touched_potentials() const { return scorer_.last_touched(); }
  const MovedSets& moved() const { return moved_; }
  const PermutationGroup& group() const { return *group_; }

 private:
  const Model* model_;
  std::shared_ptr<const PermutationGroup> group_;
  MovedSets moved_;
  ElementSampler sampler_;
  DeltaScorer scorer_;
  bool debug_full_eval_;
  double last_log_ratio_ = 0.0;
  std::vector<int> proposal_vars_;
  std::vector<int> proposal_values_;
};

// One Markov chain: owns its rng, state, kernels, and statistics.
class Chain {
 public:
  Chain(const Model& model, const KernelConfig& config, std::uint64_t seed);
  Chain(const Model& model, const KernelConfig& config, std::uint64_t seed,
        State initial);

  // Applies one kernel; returns the variables whose value changed.
  std::span<const ValueChange> step();

  const State& state() const { return state_; }
  // Replaces the current state; kernels and statistics are kept.
  void set_state(State state);
  const ChainStats& stats() const { return stats_; }
  Rng& rng() { return rng_; }
  int num_orbital_kernels() const { return static_cast<int>(orbital_.size()); }
  const OrbitalKernel& orbital_kernel(int k) const { return orbital_[k]; }

 private:
  const Model* model_;
  KernelConfig config_;
  Rng rng_;
  State state_;
  GibbsKernel gibbs_;
  std::vector<OrbitalKernel> orbital_;
  std::vector<double> cumulative_weights_;
  ChainStats stats_;
  std::vector<ValueChange> changed_;
};

std::optional<ValueChange> gibbs_step(const Model& model, State& state, Rng& rng);

struct Schedule {
  std::uint64_t iterations = 0;
  std::uint64_t burn_in = 0;
  std::uint64_t thinning = 1;
  double checkpoint_start = 100;
  double checkpoint_factor = 1.5;

  void validate() const;
};

// Checkpoints at start, start*factor, ... (rounded, deduplicated), always
// ending with the final iteration.
std::vector<std::uint64_t> checkpoint_iterations(const Schedule& schedule);

struct TraceRow {
  int chain_id = 0;
  std::string kernel;
  std::uint64_t iteration = 0;
  double wallclock_ms = 0.0;
  double avg_kl = 0.0;
  double acceptance_rate = 0.0;  // NaN when no orbital proposals
};

struct ChainResult {
  MarginalTable marginals;
  ChainStats stats;
  std::vector<TraceRow> trace;
};

struct RunOptions {
  int chain_id = 0;
  std::string label = "chain";
  // When set, trace rows carry avg_kl against these marginals.
  const MarginalTable* truth = nullptr;
  double kl_epsilon = kDefaultKlEpsilon;
  // Called on every retained sample point (slow path; for testing).
  std::function<void(std::uint64_t, const State&)> on_sample;
  std::optional<State> initial_state;
};

// Runs a chain on `schedule`; deterministic given the seed except for the
// wall-clock fields. Wall-clock covers kernel work only, not checkpoint
// evaluation.
ChainResult run_chain(const Model& model, const KernelConfig& config,
                      std::uint64_t seed, const Schedule& schedule,
                      const RunOptions& options = {});

}  // namespace lmh
