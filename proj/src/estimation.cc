#include "lmh/estimation.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lmh/samplers.h"

namespace lmh {

MarginalTable estimate_marginals(std::span<const State> samples,
                                 std::span<const int> cardinalities) {
  if (samples.empty()) throw std::invalid_argument("empty sample stream");
  MarginalTable table;
  table.probabilities.resize(cardinalities.size());
  for (std::size_t v = 0; v < cardinalities.size(); ++v) {
    table.probabilities[v].assign(cardinalities[v], 0.0);
  }
  std::vector<std::vector<std::uint64_t>> counts(cardinalities.size());
  for (std::size_t v = 0; v < cardinalities.size(); ++v) counts[v].assign(cardinalities[v], 0);
  for (const State& s : samples) {
    if (s.size() != cardinalities.size()) {
      throw std::invalid_argument("sample size does not match variable count");
    }
    for (std::size_t v = 0; v < s.size(); ++v) ++counts[v].at(s[v]);
  }
  const double n = static_cast<double>(samples.size());
  for (std::size_t v = 0; v < counts.size(); ++v) {
    for (std::size_t a = 0; a < counts[v].size(); ++a) {
      table.probabilities[v][a] = static_cast<double>(counts[v][a]) / n;
    }
  }
  table.sample_count = samples.size();
  return table;
}

MarginalTable merge_marginals(const MarginalTable& a, const MarginalTable& b) {
  if (a.probabilities.size() != b.probabilities.size()) {
    throw std::invalid_argument("merge_marginals: variable count mismatch");
  }
  const double total = static_cast<double>(a.sample_count + b.sample_count);
  if (total == 0) throw std::invalid_argument("merge_marginals: no samples");
  const double wa = static_cast<double>(a.sample_count) / total;
  const double wb = static_cast<double>(b.sample_count) / total;
  MarginalTable out;
  out.sample_count = a.sample_count + b.sample_count;
  out.probabilities.resize(a.probabilities.size());
  for (std::size_t v = 0; v < a.probabilities.size(); ++v) {
    if (a.probabilities[v].size() != b.probabilities[v].size()) {
      throw std::invalid_argument("merge_marginals: cardinality mismatch");
    }
    out.probabilities[v].resize(a.probabilities[v].size());
    for (std::size_t x = 0; x < a.probabilities[v].size(); ++x) {
      out.probabilities[v][x] = wa * a.probabilities[v][x] + wb * b.probabilities[v][x];
    }
  }
  return out;
}

KLReport avg_kl(const MarginalTable& truth, const MarginalTable& estimate,
                double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 0.01)) {
    throw std::invalid_argument("KL smoothing epsilon must lie in (0, 0.01]");
  }
  if (truth.probabilities.size() != estimate.probabilities.size()) {
    throw std::invalid_argument("avg_kl: variable count mismatch");
  }
  KLReport report;
  report.epsilon = epsilon;
  report.per_variable.resize(truth.probabilities.size());
  std::vector<double> q;
  for (std::size_t v = 0; v < truth.probabilities.size(); ++v) {
    const auto& p = truth.probabilities[v];
    const auto& e = estimate.probabilities[v];
    if (p.size() != e.size()) throw std::invalid_argument("avg_kl: cardinality mismatch");
    q.resize(e.size());
    double norm = 0.0;
    for (std::size_t a = 0; a < e.size(); ++a) {
      q[a] = std::clamp(e[a], epsilon, 1.0 - epsilon);
      norm += q[a];
    }
    double kl = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (p[a] > 0.0) kl += p[a] * std::log(p[a] / (q[a] / norm));
    }
    report.per_variable[v] = std::max(0.0, kl);
    report.average += report.per_variable[v];
  }
  if (!report.per_variable.empty()) {
    report.average /= static_cast<double>(report.per_variable.size());
  }
  return report;
}

MarginalAccumulator::MarginalAccumulator(std::span<const int> cardinalities,
                                         std::uint64_t burn_in, std::uint64_t thinning,
                                         std::span<const int> initial)
    : burn_in_(burn_in), thinning_(thinning), accounted_(cardinalities.size(), 0) {
  if (thinning_ < 1) throw std::invalid_argument("thinning must be >= 1");
  if (initial.size() != cardinalities.size()) {
    throw std::invalid_argument("initial state does not match variable count");
  }
  counts_.resize(cardinalities.size());
  for (std::size_t v = 0; v < cardinalities.size(); ++v) counts_[v].assign(cardinalities[v], 0);
}

MarginalTable MarginalAccumulator::snapshot(std::span<const int> current,
                                            std::uint64_t iteration) const {
  const std::uint64_t total = retained_through(iteration);
  if (total == 0) throw std::invalid_argument("no retained sample points yet");
  MarginalTable table;
  table.sample_count = total;
  table.probabilities.resize(counts_.size());
  const double denom = static_cast<double>(total);
  for (std::size_t v = 0; v < counts_.size(); ++v) {
    auto& row = table.probabilities[v];
    row.resize(counts_[v].size());
    for (std::size_t a = 0; a < row.size(); ++a) {
      std::uint64_t c = counts_[v][a];
      if (static_cast<int>(a) == current[v]) c += total - retained_through(accounted_[v]);
      row[a] = static_cast<double>(c) / denom;
    }
  }
  return table;
}

MarginalTable gold_standard(const Model& model, std::uint64_t seed,
                            std::uint64_t iterations, std::uint64_t min_iterations) {
  if (iterations < min_iterations) {
    throw std::invalid_argument("gold standard needs at least " +
                                std::to_string(min_iterations) + " iterations");
  }
  Schedule schedule;
  schedule.iterations = iterations;
  schedule.burn_in = iterations / 10;
  schedule.checkpoint_start = static_cast<double>(iterations);
  return run_chain(model, KernelConfig::gibbs(), seed, schedule).marginals;
}

}  // namespace lmh
