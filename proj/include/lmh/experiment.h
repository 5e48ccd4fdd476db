#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmh/bmf.h"
#include "lmh/generators.h"
#include "lmh/group.h"
#include "lmh/model.h"
#include "lmh/samplers.h"
#include "lmh/symmetry.h"

namespace lmh {

inline constexpr const char* kLibraryVersion = "1.0.0";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Where the model comes from. Exactly one of the generator specs or `file`
// (or the MLN program) is used, selected by `kind`.
struct ModelSource {
  enum class Kind { kIsing, kChimera, kFile, kMln };
  Kind kind = Kind::kIsing;
  IsingSpec ising;
  ChimeraSpec chimera;
  // Per-site field perturbation h_v = h + U(-spread, spread).
  double field_spread = 0.0;
  std::uint64_t field_seed = 0;
  // Per-edge coupling perturbation, same form.
  double coupling_spread = 0.0;
  std::uint64_t coupling_seed = 0;
  std::filesystem::path file;
  std::filesystem::path mln_program;
  std::filesystem::path mln_evidence;
};

struct OsaSettings {
  enum class Method { kNone, kZeroUnary, kCluster };
  Method method = Method::kNone;
  int clusters = 0;
  std::optional<int> bmf_rank;
  std::string bmf_relation;  // MLN sources only
};

struct GoldSettings {
  enum class Method { kAuto, kExact, kGibbs };
  Method method = Method::kAuto;
  std::uint64_t iterations = 10'000'000;
  std::uint64_t seed = 20160212;
};

// Orbital groups used by the lmh method: Sym(O') subgroups from the
// heuristic, or the OSA's exact automorphism group as one kernel.
enum class LmhGroups { kHeuristic, kAutomorphisms };

struct ExperimentConfig {
  std::string name = "experiment";
  ModelSource source;
  OsaSettings osa;
  AutomorphismMode mode = AutomorphismMode::kTemplate;
  HeuristicConfig heuristic;
  double alpha = kDefaultAlpha;
  LmhGroups lmh_groups = LmhGroups::kHeuristic;
  Schedule schedule;
  std::vector<std::uint64_t> seeds;
  GoldSettings gold;
  std::vector<std::string> methods{"gibbs", "lmh"};
  std::filesystem::path output_dir = "out";
  bool debug_full_eval = false;
  int threads = 0;  // 0: min(hardware concurrency, chains)

  void validate() const;
};

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> kMethods{"gibbs", "lifted-mcmc", "lmh", "osa-direct"};
  return kMethods;
}

// Parses the JSON experiment document; relative paths resolve against
// `base_dir`.
ExperimentConfig config_from_json(const std::string& text,
                                  const std::filesystem::path& base_dir = {});
std::string config_to_json(const ExperimentConfig& config);

// Accepts either a full config (uses its "model" section) or the section.
ModelSource parse_model_source(const std::string& text,
                               const std::filesystem::path& base_dir = {});

// Builds the model described by a source (without the OSA).
Model build_model(const ModelSource& source);

struct Symmetrization {
  std::shared_ptr<const Model> original;
  std::shared_ptr<const Model> osa;  // equals `original` without an OSA
  OSAModel record;                   // provenance; model == *osa
  std::optional<BMFResult> bmf;
};

Symmetrization build_osa(const ExperimentConfig& config);
Symmetrization symmetrize_model(const Model& model, const OsaSettings& osa);

// Exact automorphisms: template mode when the model carries a template,
// search mode when small enough, else the trivial group.
PermutationGroup find_automorphisms(const Model& model, AutomorphismMode preferred);

// Orbital groups for one method. Empty means the method runs plain Gibbs.
std::vector<std::shared_ptr<const PermutationGroup>> groups_for_method(
    const std::string& method, const Symmetrization& sym, const ExperimentConfig& config);

// Model sampled by a method: the OSA for osa-direct, else the original.
std::shared_ptr<const Model> sampled_model(const std::string& method,
                                           const Symmetrization& sym);

KernelConfig kernel_for(const std::vector<std::shared_ptr<const PermutationGroup>>& groups,
                        double alpha, bool debug_full_eval);

struct ChainSummary {
  std::string method;
  int chain_id = 0;
  std::uint64_t seed = 0;
  ChainResult result;
};

struct ExperimentResult {
  MarginalTable truth;
  std::string truth_method;
  std::vector<ChainSummary> chains;
};

// Chain i uses seeds[i] ^ (i << 32). The counter sits in the high word so
// consecutive seed lists such as 1..10 stay distinct.
inline std::uint64_t chain_seed(std::uint64_t seed, int chain_id) {
  return seed ^ (static_cast<std::uint64_t>(chain_id) << 32);
}

MarginalTable compute_truth(const Model& model, const GoldSettings& gold,
                            std::string* method_used = nullptr);

// Runs every (method, seed) chain in a worker pool and writes the manifest,
// model files, OSA manifest, groups, traces, marginals and KL summary into
// config.output_dir. On failure, files written so far are removed and the
// exception propagates.
ExperimentResult run_experiment(const ExperimentConfig& config);

// True when LMH_DEBUG_FULL_EVAL=1 is set.
bool debug_full_eval_from_env();

}  // namespace lmh
