#include "lmh/samplers.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace lmh {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

State random_state(const Model& model, Rng& rng) {
  State state(model.num_variables());
  for (int v = 0; v < model.num_variables(); ++v) {
    state[v] = static_cast<int>(uniform_index(rng, model.cardinality(v)));
  }
  return state;
}

}  // namespace

KernelConfig KernelConfig::gibbs() { return KernelConfig{}; }

KernelConfig KernelConfig::orbital(std::shared_ptr<const PermutationGroup> group) {
  KernelConfig config;
  config.kind = KernelKind::kOrbital;
  config.orbitals.push_back({std::move(group), 0.0});
  return config;
}

KernelConfig KernelConfig::mixture(
    double alpha, std::vector<std::shared_ptr<const PermutationGroup>> groups) {
  KernelConfig config;
  config.kind = KernelKind::kMixture;
  config.alpha = alpha;
  for (auto& g : groups) config.orbitals.push_back({std::move(g), 0.0});
  return config;
}

void KernelConfig::validate(const Model& model) const {
  if (kind == KernelKind::kMixture && !(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("mixture alpha must lie strictly inside (0, 1)");
  }
  if (kind == KernelKind::kOrbital && orbitals.empty()) {
    throw std::invalid_argument("orbital kernel needs a group");
  }
  for (const OrbitalKernelSpec& spec : orbitals) {
    if (!spec.group) throw std::invalid_argument("orbital kernel without a group");
    spec.group->check_compatible(model);
    if (!std::isfinite(spec.weight) || spec.weight < 0.0) {
      throw std::invalid_argument("orbital selection weights must be >= 0");
    }
  }
}

std::vector<double> KernelConfig::selection_weights() const {
  std::vector<double> weights;
  for (const OrbitalKernelSpec& spec : orbitals) {
    weights.push_back(spec.weight > 0.0
                          ? spec.weight
                          : static_cast<double>(spec.group->moved_variables().size()));
  }
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total <= 0.0) {
    std::fill(weights.begin(), weights.end(), 1.0);
    total = static_cast<double>(weights.size());
  }
  for (double& w : weights) w /= total;
  return weights;
}

std::uint64_t ChainStats::orbital_proposed() const {
  std::uint64_t total = 0;
  for (const auto& s : orbital) total += s.proposed;
  return total;
}

std::uint64_t ChainStats::orbital_accepted() const {
  std::uint64_t total = 0;
  for (const auto& s : orbital) total += s.accepted;
  return total;
}

double ChainStats::acceptance_rate() const {
  const std::uint64_t proposed = orbital_proposed();
  if (proposed == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(orbital_accepted()) / static_cast<double>(proposed);
}

GibbsKernel::GibbsKernel(const Model& model, bool systematic_scan)
    : model_(&model), systematic_(systematic_scan) {
  int widest = 2;
  for (const Variable& v : model.variables()) widest = std::max(widest, v.cardinality);
  weights_.resize(widest);
}

std::optional<ValueChange> GibbsKernel::step(State& state, Rng& rng) {
  const int n = model_->num_variables();
  if (n == 0) return std::nullopt;
  int var;
  if (systematic_) {
    var = next_;
    next_ = (next_ + 1) % n;
  } else {
    var = static_cast<int>(uniform_index(rng, n));
  }
  const int card = model_->cardinality(var);
  model_->conditional_log_weights(state, var, weights_);
  int value;
  if (card == 2) {
    const double p1 = 1.0 / (1.0 + std::exp(weights_[0] - weights_[1]));
    value = uniform01(rng) < p1 ? 1 : 0;
  } else {
    const double top = *std::max_element(weights_.begin(), weights_.begin() + card);
    double total = 0.0;
    for (int a = 0; a < card; ++a) {
      weights_[a] = std::exp(weights_[a] - top);
      total += weights_[a];
    }
    double u = uniform01(rng) * total;
    value = card - 1;
    for (int a = 0; a < card; ++a) {
      if (u < weights_[a]) {
        value = a;
        break;
      }
      u -= weights_[a];
    }
  }
  if (value == state[var]) return std::nullopt;
  const ValueChange change{var, state[var]};
  state[var] = value;
  return change;
}

std::optional<ValueChange> gibbs_step(const Model& model, State& state, Rng& rng) {
  GibbsKernel kernel(model);
  return kernel.step(state, rng);
}

OrbitalKernel::OrbitalKernel(const Model& model,
                             std::shared_ptr<const PermutationGroup> group, Rng& rng,
                             bool debug_full_eval)
    : model_(&model),
      group_(std::move(group)),
      moved_(moved_sets(*group_, model)),
      sampler_(*group_, rng),
      scorer_(model),
      debug_full_eval_(debug_full_eval) {
  group_->check_compatible(model);
  scorer_.skip_potentials(delta_invariant_potentials(*group_, model));
  proposal_vars_.reserve(moved_.variables.size());
  proposal_values_.reserve(moved_.variables.size());
}

bool OrbitalKernel::step(State& state, Rng& rng, std::vector<ValueChange>& changed) {
  const std::span<const int> support = sampler_.support();
  // Constant values on the support make every proposal equal to the state.
  bool constant = true;
  for (std::size_t i = 1; i < support.size() && constant; ++i) {
    constant = state[support[i]] == state[support[0]];
  }
  if (constant) {
    last_log_ratio_ = 0.0;
    return true;
  }
  const std::span<const int> local = sampler_.draw_local(rng);
  // y[g(v)] = x[v] over the support; record only positions whose value moves.
  // Branch-free: every slot is written, the count only advances on a change.
  proposal_vars_.resize(local.size());
  proposal_values_.resize(local.size());
  std::size_t count = 0;
  for (std::size_t i = 0; i < local.size(); ++i) {
    const int target = support[local[i]];
    const int value = state[support[i]];
    proposal_vars_[count] = target;
    proposal_values_[count] = value;
    count += static_cast<std::size_t>(state[target] != value);
  }
  proposal_vars_.resize(count);
  proposal_values_.resize(count);
  if (proposal_vars_.empty()) {
    last_log_ratio_ = 0.0;
    return true;
  }
  double before_full = 0.0;
  if (debug_full_eval_) before_full = model_->log_score(state);
  const double delta = scorer_.swap_in(state, proposal_vars_, proposal_values_);
  last_log_ratio_ = delta;
  if (debug_full_eval_) {
    const double full = model_->log_score(state) - before_full;
    if (std::abs(full - delta) > 1e-9 * std::max(1.0, std::abs(full))) {
      std::ostringstream msg;
      msg << "delta score " << delta << " disagrees with full re-evaluation " << full;
      throw std::logic_error(msg.str());
    }
  }
  const bool accept = delta >= 0.0 || uniform01(rng) < std::exp(delta);
  if (accept) {
    for (std::size_t i = 0; i < proposal_vars_.size(); ++i) {
      changed.push_back({proposal_vars_[i], proposal_values_[i]});
    }
  } else {
    for (std::size_t i = 0; i < proposal_vars_.size(); ++i) {
      std::swap(state[proposal_vars_[i]], proposal_values_[i]);
    }
  }
  return accept;
}

Chain::Chain(const Model& model, const KernelConfig& config, std::uint64_t seed)
    : Chain(model, config, seed, State{}) {}

Chain::Chain(const Model& model, const KernelConfig& config, std::uint64_t seed,
             State initial)
    : model_(&model),
      config_(config),
      rng_(seed),
      gibbs_(model, config.systematic_scan) {
  config_.validate(model);
  if (initial.empty() && model.num_variables() > 0) {
    state_ = random_state(model, rng_);
  } else {
    model.check_state(initial);
    state_ = std::move(initial);
  }
  if (config_.kind != KernelKind::kGibbs) {
    for (const OrbitalKernelSpec& spec : config_.orbitals) {
      orbital_.emplace_back(model, spec.group, rng_, config_.debug_full_eval);
    }
    double running = 0.0;
    for (double w : config_.selection_weights()) {
      running += w;
      cumulative_weights_.push_back(running);
    }
  }
  stats_.orbital.resize(orbital_.size());
}

void Chain::set_state(State state) {
  model_->check_state(state);
  state_ = std::move(state);
}

std::span<const ValueChange> Chain::step() {
  changed_.clear();
  bool use_gibbs = true;
  // Uniform in [0, 1) for the kernel choice; a mixture reuses its coin.
  double pick = -1.0;
  if (config_.kind == KernelKind::kOrbital) {
    use_gibbs = false;
  } else if (config_.kind == KernelKind::kMixture && !orbital_.empty()) {
    const double u = uniform01(rng_);
    use_gibbs = u < config_.alpha;
    pick = (u - config_.alpha) / (1.0 - config_.alpha);
  }
  if (use_gibbs) {
    ++stats_.gibbs_steps;
    if (auto change = gibbs_.step(state_, rng_)) changed_.push_back(*change);
    return changed_;
  }
  std::size_t k = 0;
  if (orbital_.size() > 1) {
    const double u = pick >= 0.0 ? pick : uniform01(rng_);
    k = std::upper_bound(cumulative_weights_.begin(), cumulative_weights_.end() - 1, u) -
        cumulative_weights_.begin();
  }
  OrbitalStats& s = stats_.orbital[k];
  ++s.proposed;
  if (orbital_[k].step(state_, rng_, changed_)) ++s.accepted;
  return changed_;
}

void Schedule::validate() const {
  if (iterations <= burn_in) {
    throw std::invalid_argument("iterations must exceed burn-in");
  }
  if (thinning < 1) throw std::invalid_argument("thinning must be >= 1");
  if (!(checkpoint_start >= 1.0) || !(checkpoint_factor > 1.0)) {
    throw std::invalid_argument("checkpoints need start >= 1 and factor > 1");
  }
}

std::vector<std::uint64_t> checkpoint_iterations(const Schedule& schedule) {
  schedule.validate();
  std::vector<std::uint64_t> out;
  for (double c = schedule.checkpoint_start;
       c < static_cast<double>(schedule.iterations); c *= schedule.checkpoint_factor) {
    const auto it = static_cast<std::uint64_t>(std::llround(c));
    if (out.empty() || out.back() != it) out.push_back(it);
  }
  if (out.empty() || out.back() != schedule.iterations) out.push_back(schedule.iterations);
  return out;
}

ChainResult run_chain(const Model& model, const KernelConfig& config,
                      std::uint64_t seed, const Schedule& schedule,
                      const RunOptions& options) {
  const std::vector<std::uint64_t> checkpoints = checkpoint_iterations(schedule);
  Chain chain = options.initial_state
                    ? Chain(model, config, seed, *options.initial_state)
                    : Chain(model, config, seed);
  const std::vector<int> cards = model.cardinalities();
  MarginalAccumulator tally(cards, schedule.burn_in, schedule.thinning, chain.state());

  ChainResult result;
  double kernel_ms = 0.0;
  std::uint64_t t = 0;
  for (std::uint64_t checkpoint : checkpoints) {
    const auto start = Clock::now();
    if (options.on_sample) {
      for (; t < checkpoint;) {
        ++t;
        for (const ValueChange& c : chain.step()) tally.record_change(c.var, c.old_value, t);
        if (tally.retained_through(t) != tally.retained_through(t - 1)) {
          options.on_sample(t, chain.state());
        }
      }
    } else {
      for (; t < checkpoint;) {
        ++t;
        for (const ValueChange& c : chain.step()) tally.record_change(c.var, c.old_value, t);
      }
    }
    kernel_ms += elapsed_ms(start);
    if (tally.retained_through(t) == 0) continue;
    if (options.truth != nullptr) {
      TraceRow row;
      row.chain_id = options.chain_id;
      row.kernel = options.label;
      row.iteration = t;
      row.wallclock_ms = kernel_ms;
      row.avg_kl =
          avg_kl(*options.truth, tally.snapshot(chain.state(), t), options.kl_epsilon)
              .average;
      row.acceptance_rate = chain.stats().acceptance_rate();
      result.trace.push_back(std::move(row));
    }
  }
  result.marginals = tally.snapshot(chain.state(), t);
  result.stats = chain.stats();
  result.stats.kernel_wall_ms = kernel_ms;
  return result;
}

}  // namespace lmh
