// Command-line driver: generate, symmetrize, sample, evaluate, run.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmh/estimation.h"
#include "lmh/experiment.h"
#include "lmh/io.h"
#include "lmh/samplers.h"
#include "lmh/symmetry.h"

namespace {

using lmh::ConfigError;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("--seeds needs at least one seed");
  return seeds;
}

std::vector<std::string> parse_methods(const std::string& text) {
  std::vector<std::string> methods;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) methods.push_back(item);
  }
  return methods;
}

lmh::OsaSettings::Method parse_osa_method(const std::string& name) {
  if (name == "none") return lmh::OsaSettings::Method::kNone;
  if (name == "zero-unary") return lmh::OsaSettings::Method::kZeroUnary;
  if (name == "cluster") return lmh::OsaSettings::Method::kCluster;
  throw ConfigError("unknown OSA method '" + name + "'");
}

lmh::AutomorphismMode parse_mode(const std::string& name) {
  if (name == "template") return lmh::AutomorphismMode::kTemplate;
  if (name == "search") return lmh::AutomorphismMode::kSearch;
  throw ConfigError("unknown automorphism mode '" + name + "'");
}

std::string format_rate(double rate) {
  if (std::isnan(rate)) return "n/a";
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << rate;
  return out.str();
}

int cmd_generate(const std::string& config_path, const std::string& out) {
  const std::filesystem::path path(config_path);
  const lmh::ModelSource source =
      lmh::parse_model_source(lmh::read_text(path), path.parent_path());
  const lmh::Model model = lmh::build_model(source);
  lmh::write_model(out, model);
  std::cout << "wrote " << out << ": " << model.num_variables() << " variables, "
            << model.num_potentials() << " potentials\n";
  return 0;
}

struct SymmetrizeArgs {
  std::string model;
  std::string out;
  std::string osa = "none";
  int clusters = 0;
  int k = lmh::HeuristicConfig{}.max_moved_potentials;
  std::string mode = "template";
};

int cmd_symmetrize(const SymmetrizeArgs& args) {
  const lmh::Model model = lmh::read_model(args.model);
  lmh::OsaSettings settings;
  settings.method = parse_osa_method(args.osa);
  settings.clusters = args.clusters;
  if (settings.method == lmh::OsaSettings::Method::kCluster && settings.clusters < 1) {
    throw ConfigError("--clusters must be >= 1 for the cluster OSA");
  }
  lmh::HeuristicConfig heuristic{args.k};
  heuristic.validate();
  const lmh::Symmetrization sym = lmh::symmetrize_model(model, settings);
  const lmh::PermutationGroup exact = lmh::find_automorphisms(*sym.osa, parse_mode(args.mode));
  const std::vector<lmh::PermutationGroup> groups =
      lmh::subgroup_heuristic(exact.orbits(), model, heuristic);

  const std::filesystem::path dir(args.out);
  std::filesystem::create_directories(dir);
  lmh::write_model(dir / "osa_model.json", *sym.osa);
  lmh::write_groups(dir / "osa_automorphisms.json", {exact});
  lmh::write_groups(dir / "groups.json", groups);
  nlohmann::json manifest;
  manifest["method"] = sym.record.method;
  manifest["clusters"] = settings.clusters;
  manifest["heuristic_k"] = heuristic.max_moved_potentials;
  manifest["replacements"] = nlohmann::json::array();
  for (const lmh::WeightReplacement& r : sym.record.provenance) {
    manifest["replacements"].push_back({{"potential", r.potential},
                                        {"cluster", r.cluster},
                                        {"original", r.original},
                                        {"replacement", r.replacement}});
  }
  lmh::write_text(dir / "osa.json", manifest.dump(1) + "\n");
  std::cout << "OSA replaced " << sym.record.provenance.size() << " tables; "
            << exact.orbits().num_orbits() << " variable orbits; " << groups.size()
            << " heuristic groups\n";
  return 0;
}

struct SampleArgs {
  std::string model;
  std::string groups;
  std::string truth;
  std::string out;
  std::string method = "gibbs";
  std::string seeds = "1";
  double alpha = lmh::kDefaultAlpha;
  std::uint64_t iterations = 100000;
  std::uint64_t burn_in = 0;
  std::uint64_t thinning = 1;
  int k = lmh::HeuristicConfig{}.max_moved_potentials;
};

int cmd_sample(const SampleArgs& args) {
  const auto model = std::make_shared<const lmh::Model>(lmh::read_model(args.model));
  std::vector<std::shared_ptr<const lmh::PermutationGroup>> groups;
  if (!args.groups.empty()) {
    for (lmh::PermutationGroup& g : lmh::read_groups(args.groups)) {
      if (!g.is_trivial()) groups.push_back(std::make_shared<const lmh::PermutationGroup>(std::move(g)));
    }
  } else {
    // Without a generator file, derive groups from the model itself.
    lmh::ExperimentConfig config;
    config.heuristic.max_moved_potentials = args.k;
    const lmh::Symmetrization sym = lmh::symmetrize_model(*model, {});
    groups = lmh::groups_for_method(args.method, sym, config);
  }
  lmh::Schedule schedule{args.iterations, args.burn_in, args.thinning};
  schedule.validate();
  std::optional<lmh::MarginalTable> truth;
  if (!args.truth.empty()) truth = lmh::read_marginals_csv(args.truth);
  const lmh::KernelConfig kernel =
      lmh::kernel_for(groups, args.alpha, lmh::debug_full_eval_from_env());
  const std::vector<std::uint64_t> seeds = parse_seeds(args.seeds);
  const std::filesystem::path dir(args.out);
  std::filesystem::create_directories(dir);
  for (int i = 0; i < static_cast<int>(seeds.size()); ++i) {
    lmh::RunOptions options;
    options.chain_id = i;
    options.label = args.method;
    if (truth) options.truth = &*truth;
    const std::uint64_t seed = lmh::chain_seed(seeds[i], i);
    const lmh::ChainResult result = lmh::run_chain(*model, kernel, seed, schedule, options);
    const std::string stem = args.method + "_chain" + std::to_string(i);
    lmh::write_marginals_csv(dir / ("marginals_" + stem + ".csv"), result.marginals);
    if (truth) lmh::write_trace_csv(dir / ("trace_" + stem + ".csv"), result.trace);
    std::cout << "chain " << i << " seed " << seed << ": acceptance "
              << format_rate(result.stats.acceptance_rate());
    if (truth) std::cout << ", avg KL " << lmh::avg_kl(*truth, result.marginals).average;
    std::cout << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& model_path,
                 const std::vector<std::string>& estimates, double epsilon) {
  lmh::MarginalTable truth;
  if (!truth_path.empty()) {
    truth = lmh::read_marginals_csv(truth_path);
  } else if (!model_path.empty()) {
    truth = lmh::enumerate_exact_marginals(lmh::read_model(model_path));
  } else {
    throw ConfigError("evaluate needs --truth or --model");
  }
  if (estimates.empty()) throw ConfigError("evaluate needs at least one --estimate");
  std::cout << "estimate,avg_kl,epsilon\n";
  for (const std::string& path : estimates) {
    const lmh::KLReport report = lmh::avg_kl(truth, lmh::read_marginals_csv(path), epsilon);
    std::cout << path << "," << report.average << "," << report.epsilon << "\n";
  }
  return 0;
}

struct RunArgs {
  std::string config;
  std::string out;
  std::string seeds;
  std::string methods;
  double alpha = 0.0;
  std::uint64_t iterations = 0;
};

int cmd_run(const RunArgs& args) {
  const std::filesystem::path path(args.config);
  lmh::ExperimentConfig config =
      lmh::config_from_json(lmh::read_text(path), path.parent_path());
  if (!args.out.empty()) config.output_dir = args.out;
  if (!args.seeds.empty()) config.seeds = parse_seeds(args.seeds);
  if (!args.methods.empty()) config.methods = parse_methods(args.methods);
  if (args.alpha != 0.0) config.alpha = args.alpha;
  if (args.iterations != 0) config.schedule.iterations = args.iterations;
  const lmh::ExperimentResult result = lmh::run_experiment(config);

  std::map<std::string, std::pair<double, int>> kl;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> acceptance;
  for (const lmh::ChainSummary& c : result.chains) {
    auto& [sum, count] = kl[c.method];
    sum += lmh::avg_kl(result.truth, c.result.marginals).average;
    ++count;
    acceptance[c.method].first += c.result.stats.orbital_accepted();
    acceptance[c.method].second += c.result.stats.orbital_proposed();
  }
  std::cout << "truth: " << result.truth_method << "\n";
  for (const std::string& method : config.methods) {
    const auto [sum, count] = kl[method];
    const auto [accepted, proposed] = acceptance[method];
    std::cout << method << ": mean final avg KL " << sum / count << ", orbital acceptance "
              << format_rate(proposed == 0 ? NAN : static_cast<double>(accepted) / proposed)
              << "\n";
  }
  std::cout << "outputs in " << config.output_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifted Metropolis-Hastings sampler"};
  app.require_subcommand(1);

  std::string gen_config, gen_out;
  auto* generate = app.add_subcommand("generate", "Build a model file from a generator spec");
  generate->add_option("--config", gen_config, "Experiment config or model section (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("--out", gen_out, "Output model file")->required();

  SymmetrizeArgs sym_args;
  auto* symmetrize = app.add_subcommand("symmetrize", "Build an OSA and its orbital groups");
  symmetrize->add_option("--model", sym_args.model, "Model file")->required()->check(CLI::ExistingFile);
  symmetrize->add_option("--out", sym_args.out, "Output directory")->required();
  symmetrize->add_option("--osa", sym_args.osa, "none | zero-unary | cluster");
  symmetrize->add_option("--clusters", sym_args.clusters, "Cluster count c");
  symmetrize->add_option("--k", sym_args.k, "Max moved potentials per group (K)");
  symmetrize->add_option("--mode", sym_args.mode, "template | search");

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Run chains on a model file");
  sample->add_option("--model", sample_args.model, "Model file")->required()->check(CLI::ExistingFile);
  sample->add_option("--out", sample_args.out, "Output directory")->required();
  sample->add_option("--groups", sample_args.groups, "Generator file")->check(CLI::ExistingFile);
  sample->add_option("--truth", sample_args.truth, "Reference marginals CSV")->check(CLI::ExistingFile);
  sample->add_option("--method", sample_args.method, "gibbs | lifted-mcmc | lmh | osa-direct");
  sample->add_option("--seeds", sample_args.seeds, "Comma-separated seeds");
  sample->add_option("--alpha", sample_args.alpha, "Gibbs probability in the mixture");
  sample->add_option("--iterations", sample_args.iterations, "Kernel applications per chain");
  sample->add_option("--burn-in", sample_args.burn_in, "Discarded iterations");
  sample->add_option("--thinning", sample_args.thinning, "Keep every n-th point");
  sample->add_option("--k", sample_args.k, "Max moved potentials per group (K)");

  std::string eval_truth, eval_model;
  std::vector<std::string> eval_estimates;
  double eval_epsilon = lmh::kDefaultKlEpsilon;
  auto* evaluate = app.add_subcommand("evaluate", "Average KL of marginal CSVs");
  evaluate->add_option("--truth", eval_truth, "Reference marginals CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--model", eval_model, "Model file (exact marginals)")->check(CLI::ExistingFile);
  evaluate->add_option("--estimate", eval_estimates, "Estimated marginals CSV")->check(CLI::ExistingFile);
  evaluate->add_option("--epsilon", eval_epsilon, "Clamping epsilon");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run a full experiment from a config");
  run->add_option("--config", run_args.config, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", run_args.out, "Output directory (overrides config)");
  run->add_option("--seeds", run_args.seeds, "Comma-separated seeds (overrides config)");
  run->add_option("--method", run_args.methods, "Comma-separated methods (overrides config)");
  run->add_option("--alpha", run_args.alpha, "Mixing parameter (overrides config)");
  run->add_option("--iterations", run_args.iterations, "Iterations (overrides config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) return cmd_generate(gen_config, gen_out);
    if (*symmetrize) return cmd_symmetrize(sym_args);
    if (*sample) return cmd_sample(sample_args);
    if (*evaluate) return cmd_evaluate(eval_truth, eval_model, eval_estimates, eval_epsilon);
    if (*run) return cmd_run(run_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
