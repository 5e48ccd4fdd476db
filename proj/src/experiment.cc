#include "lmh/experiment.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"
#include "lmh/bmf.h"
#include "lmh/estimation.h"
#include "lmh/io.h"
#include "lmh/mln.h"

namespace lmh {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  return obj.at(key).get<T>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

const char* osa_method_name(OsaSettings::Method m) {
  switch (m) {
    case OsaSettings::Method::kNone:
      return "none";
    case OsaSettings::Method::kZeroUnary:
      return "zero-unary";
    case OsaSettings::Method::kCluster:
      return "cluster";
  }
  return "none";
}

const char* gold_method_name(GoldSettings::Method m) {
  switch (m) {
    case GoldSettings::Method::kAuto:
      return "auto";
    case GoldSettings::Method::kExact:
      return "exact";
    case GoldSettings::Method::kGibbs:
      return "gibbs";
  }
  return "auto";
}

bool same_structure(const Model& a, const Model& b) {
  if (a.num_variables() != b.num_variables() || a.num_potentials() != b.num_potentials()) {
    return false;
  }
  for (int v = 0; v < a.num_variables(); ++v) {
    if (a.cardinality(v) != b.cardinality(v)) return false;
  }
  for (int f = 0; f < a.num_potentials(); ++f) {
    if (a.potentials()[f].scope != b.potentials()[f].scope) return false;
  }
  return true;
}

// Provenance of `symmetrized` relative to `original` (same structure).
OSAModel diff_osa(const Model& original, const Model& symmetrized, std::string method) {
  OSAModel osa;
  osa.model = symmetrized;
  osa.method = std::move(method);
  for (int f = 0; f < original.num_potentials(); ++f) {
    const auto& before = original.potentials()[f].log_table;
    const auto& after = symmetrized.potentials()[f].log_table;
    if (before != after) osa.provenance.push_back({f, 0, before, after});
  }
  return osa;
}

// Removes files written by a failed run.
class OutputGuard {
 public:
  explicit OutputGuard(const std::filesystem::path& dir) : dir_(dir) {
    created_dir_ = !std::filesystem::exists(dir_);
    std::filesystem::create_directories(dir_);
  }
  std::filesystem::path file(const std::string& name) {
    const auto path = dir_ / name;
    written_.push_back(path);
    return path;
  }
  void commit() { committed_ = true; }
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) std::filesystem::remove(p, ec);
    if (created_dir_) std::filesystem::remove_all(dir_, ec);
  }

 private:
  std::filesystem::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<std::filesystem::path> written_;
};

json groups_json(const std::vector<std::shared_ptr<const PermutationGroup>>& groups) {
  std::vector<PermutationGroup> plain;
  for (const auto& g : groups) plain.push_back(*g);
  return json::parse(groups_to_json(plain));
}

std::string precise(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_optional_rate(double rate) { return std::isnan(rate) ? "" : precise(rate); }

ModelSource model_source_from_json(const json& m, const std::filesystem::path& base_dir) {
  ModelSource src;
  if (m.contains("file")) {
    check_keys(m, {"file"}, "model");
    src.kind = ModelSource::Kind::kFile;
    src.file = resolve(base_dir, m.at("file").get<std::string>());
  } else {
    const std::string gen = m.at("generator").get<std::string>();
    if (gen == "ising") {
      check_keys(m,
                 {"generator", "rows", "cols", "coupling", "field", "field_spread",
                  "field_seed"},
                 "model");
      src.kind = ModelSource::Kind::kIsing;
      src.ising.rows = m.at("rows").get<int>();
      src.ising.cols = m.at("cols").get<int>();
      src.ising.coupling = get_or(m, "coupling", src.ising.coupling);
      src.ising.constant_field = get_or(m, "field", 0.0);
    } else if (gen == "chimera") {
      check_keys(m,
                 {"generator", "cell_rows", "cell_cols", "intra_coupling", "inter_coupling",
                  "coupling_spread", "coupling_seed", "field", "field_spread", "field_seed"},
                 "model");
      src.kind = ModelSource::Kind::kChimera;
      src.chimera.cell_rows = m.at("cell_rows").get<int>();
      src.chimera.cell_cols = m.at("cell_cols").get<int>();
      src.chimera.intra_coupling = get_or(m, "intra_coupling", src.chimera.intra_coupling);
      src.chimera.inter_coupling = get_or(m, "inter_coupling", src.chimera.inter_coupling);
      src.chimera.constant_field = get_or(m, "field", 0.0);
      src.coupling_spread = get_or(m, "coupling_spread", 0.0);
      src.coupling_seed = get_or<std::uint64_t>(m, "coupling_seed", 0);
    } else if (gen == "mln") {
      check_keys(m, {"generator", "program", "evidence"}, "model");
      src.kind = ModelSource::Kind::kMln;
      src.mln_program = resolve(base_dir, m.at("program").get<std::string>());
      if (m.contains("evidence")) {
        src.mln_evidence = resolve(base_dir, m.at("evidence").get<std::string>());
      }
    } else {
      throw ConfigError("unknown generator '" + gen + "'");
    }
    src.field_spread = get_or(m, "field_spread", 0.0);
    src.field_seed = get_or<std::uint64_t>(m, "field_seed", 0);
  }
  return src;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (methods.empty()) throw ConfigError("methods must be non-empty");
  for (const std::string& m : methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ConfigError("unknown method '" + m + "'");
    }
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie strictly in (0, 1)");
  try {
    schedule.validate();
    heuristic.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (osa.method == OsaSettings::Method::kCluster && osa.clusters < 1) {
    throw ConfigError("cluster OSA needs clusters >= 1");
  }
  if (osa.bmf_rank) {
    if (*osa.bmf_rank < 1) throw ConfigError("bmf_rank must be >= 1");
    if (source.kind != ModelSource::Kind::kMln || osa.bmf_relation.empty()) {
      throw ConfigError("bmf_rank needs an MLN source and bmf_relation");
    }
  }
  if (threads < 0) throw ConfigError("threads must be >= 0");
  auto must_exist = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) {
      throw ConfigError(std::string(what) + " not found: " + p.string());
    }
  };
  if (source.kind == ModelSource::Kind::kFile) must_exist(source.file, "model file");
  if (source.kind == ModelSource::Kind::kMln) {
    must_exist(source.mln_program, "MLN program");
    if (!source.mln_evidence.empty()) must_exist(source.mln_evidence, "evidence file");
  }
}

ExperimentConfig config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig config;
  try {
    check_keys(doc,
               {"name", "model", "osa", "symmetry", "kernel", "schedule", "seeds", "gold",
                "methods", "output_dir", "threads", "debug_full_eval"},
               "config");
    config.name = get_or<std::string>(doc, "name", config.name);
    if (!doc.contains("model")) throw ConfigError("config needs a model section");
    config.source = model_source_from_json(doc.at("model"), base_dir);
    if (doc.contains("osa")) {
      const json& o = doc.at("osa");
      check_keys(o, {"method", "clusters", "bmf_rank", "bmf_relation"}, "osa");
      const std::string method = get_or<std::string>(o, "method", "none");
      if (method == "none") {
        config.osa.method = OsaSettings::Method::kNone;
      } else if (method == "zero-unary") {
        config.osa.method = OsaSettings::Method::kZeroUnary;
      } else if (method == "cluster") {
        config.osa.method = OsaSettings::Method::kCluster;
      } else {
        throw ConfigError("unknown OSA method '" + method + "'");
      }
      config.osa.clusters = get_or(o, "clusters", 0);
      if (o.contains("bmf_rank")) config.osa.bmf_rank = o.at("bmf_rank").get<int>();
      config.osa.bmf_relation = get_or<std::string>(o, "bmf_relation", "");
    }
    if (doc.contains("symmetry")) {
      const json& s = doc.at("symmetry");
      check_keys(s, {"mode", "heuristic_k"}, "symmetry");
      const std::string mode = get_or<std::string>(s, "mode", "template");
      if (mode == "template") {
        config.mode = AutomorphismMode::kTemplate;
      } else if (mode == "search") {
        config.mode = AutomorphismMode::kSearch;
      } else {
        throw ConfigError("unknown automorphism mode '" + mode + "'");
      }
      config.heuristic.max_moved_potentials =
          get_or(s, "heuristic_k", config.heuristic.max_moved_potentials);
    }
    if (doc.contains("kernel")) {
      check_keys(doc.at("kernel"), {"alpha", "lmh_groups"}, "kernel");
      config.alpha = get_or(doc.at("kernel"), "alpha", config.alpha);
      const std::string groups = get_or(doc.at("kernel"), "lmh_groups", std::string("heuristic"));
      if (groups == "heuristic") {
        config.lmh_groups = LmhGroups::kHeuristic;
      } else if (groups == "automorphisms") {
        config.lmh_groups = LmhGroups::kAutomorphisms;
      } else {
        throw ConfigError("kernel.lmh_groups must be 'heuristic' or 'automorphisms'");
      }
    }
    if (!doc.contains("schedule")) throw ConfigError("config needs a schedule section");
    const json& sch = doc.at("schedule");
    check_keys(sch, {"iterations", "burn_in", "thinning", "checkpoint_start", "checkpoint_factor"},
               "schedule");
    config.schedule.iterations = sch.at("iterations").get<std::uint64_t>();
    config.schedule.burn_in = get_or<std::uint64_t>(sch, "burn_in", 0);
    config.schedule.thinning = get_or<std::uint64_t>(sch, "thinning", 1);
    config.schedule.checkpoint_start =
        get_or(sch, "checkpoint_start", config.schedule.checkpoint_start);
    config.schedule.checkpoint_factor =
        get_or(sch, "checkpoint_factor", config.schedule.checkpoint_factor);
    if (doc.contains("seeds")) config.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (doc.contains("gold")) {
      const json& g = doc.at("gold");
      check_keys(g, {"method", "iterations", "seed"}, "gold");
      const std::string method = get_or<std::string>(g, "method", "auto");
      if (method == "auto") {
        config.gold.method = GoldSettings::Method::kAuto;
      } else if (method == "exact") {
        config.gold.method = GoldSettings::Method::kExact;
      } else if (method == "gibbs") {
        config.gold.method = GoldSettings::Method::kGibbs;
      } else {
        throw ConfigError("unknown gold method '" + method + "'");
      }
      config.gold.iterations = get_or(g, "iterations", config.gold.iterations);
      config.gold.seed = get_or(g, "seed", config.gold.seed);
    }
    if (doc.contains("methods")) {
      config.methods = doc.at("methods").get<std::vector<std::string>>();
    }
    if (doc.contains("output_dir")) {
      config.output_dir = resolve(base_dir, doc.at("output_dir").get<std::string>());
    }
    config.threads = get_or(doc, "threads", 0);
    config.debug_full_eval = get_or(doc, "debug_full_eval", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return config;
}

ModelSource parse_model_source(const std::string& text, const std::filesystem::path& base_dir) {
  try {
    const json doc = json::parse(text);
    return model_source_from_json(doc.contains("model") ? doc.at("model") : doc, base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model source: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["name"] = config.name;
  const ModelSource& src = config.source;
  json m;
  switch (src.kind) {
    case ModelSource::Kind::kFile:
      m["file"] = src.file.string();
      break;
    case ModelSource::Kind::kIsing:
      m = {{"generator", "ising"},
           {"rows", src.ising.rows},
           {"cols", src.ising.cols},
           {"coupling", src.ising.coupling},
           {"field", src.ising.constant_field},
           {"field_spread", src.field_spread},
           {"field_seed", src.field_seed}};
      break;
    case ModelSource::Kind::kChimera:
      m = {{"generator", "chimera"},
           {"cell_rows", src.chimera.cell_rows},
           {"cell_cols", src.chimera.cell_cols},
           {"intra_coupling", src.chimera.intra_coupling},
           {"inter_coupling", src.chimera.inter_coupling},
           {"coupling_spread", src.coupling_spread},
           {"coupling_seed", src.coupling_seed},
           {"field", src.chimera.constant_field},
           {"field_spread", src.field_spread},
           {"field_seed", src.field_seed}};
      break;
    case ModelSource::Kind::kMln:
      m = {{"generator", "mln"}, {"program", src.mln_program.string()}};
      if (!src.mln_evidence.empty()) m["evidence"] = src.mln_evidence.string();
      break;
  }
  doc["model"] = m;
  json osa{{"method", osa_method_name(config.osa.method)}, {"clusters", config.osa.clusters}};
  if (config.osa.bmf_rank) {
    osa["bmf_rank"] = *config.osa.bmf_rank;
    osa["bmf_relation"] = config.osa.bmf_relation;
  }
  doc["osa"] = osa;
  doc["symmetry"] = {
      {"mode", config.mode == AutomorphismMode::kTemplate ? "template" : "search"},
      {"heuristic_k", config.heuristic.max_moved_potentials}};
  doc["kernel"] = {{"alpha", config.alpha},
                   {"lmh_groups", config.lmh_groups == LmhGroups::kHeuristic ? "heuristic"
                                                                             : "automorphisms"}};
  doc["schedule"] = {{"iterations", config.schedule.iterations},
                     {"burn_in", config.schedule.burn_in},
                     {"thinning", config.schedule.thinning},
                     {"checkpoint_start", config.schedule.checkpoint_start},
                     {"checkpoint_factor", config.schedule.checkpoint_factor}};
  doc["seeds"] = config.seeds;
  doc["gold"] = {{"method", gold_method_name(config.gold.method)},
                 {"iterations", config.gold.iterations},
                 {"seed", config.gold.seed}};
  doc["methods"] = config.methods;
  doc["output_dir"] = config.output_dir.string();
  doc["threads"] = config.threads;
  doc["debug_full_eval"] = config.debug_full_eval;
  return doc.dump(2) + "\n";
}

Model build_model(const ModelSource& source) {
  switch (source.kind) {
    case ModelSource::Kind::kFile:
      return read_model(source.file);
    case ModelSource::Kind::kIsing: {
      IsingSpec spec = source.ising;
      if (source.coupling_spread != 0.0) {
        throw ConfigError("Ising sources take a single coupling; coupling_spread is unsupported");
      }
      if (source.field_spread != 0.0) {
        spec.field = perturbed_values(spec.constant_field, source.field_spread,
                                      spec.rows * spec.cols, source.field_seed);
      }
      return ising_grid(spec);
    }
    case ModelSource::Kind::kChimera: {
      ChimeraSpec spec = source.chimera;
      if (source.coupling_spread != 0.0) {
        const std::size_t intra = chimera_intra_edges(spec).size();
        const std::size_t inter = chimera_inter_edges(spec).size();
        const auto offsets = perturbed_values(0.0, source.coupling_spread,
                                              static_cast<int>(intra + inter), source.coupling_seed);
        spec.intra_couplings.assign(intra, spec.intra_coupling);
        spec.inter_couplings.assign(inter, spec.inter_coupling);
        for (std::size_t e = 0; e < intra; ++e) spec.intra_couplings[e] += offsets[e];
        for (std::size_t e = 0; e < inter; ++e) spec.inter_couplings[e] += offsets[intra + e];
      }
      if (source.field_spread != 0.0) {
        spec.field = perturbed_values(spec.constant_field, source.field_spread,
                                      spec.num_variables(), source.field_seed);
      }
      return chimera(spec);
    }
    case ModelSource::Kind::kMln: {
      const MLNProgram program = parse_mln(read_text(source.mln_program));
      Evidence evidence;
      if (!source.mln_evidence.empty()) {
        evidence = parse_evidence(read_text(source.mln_evidence), program);
      }
      return mln_ground(program, evidence).model;
    }
  }
  throw ConfigError("unknown model source");
}

Symmetrization symmetrize_model(const Model& model, const OsaSettings& osa) {
  Symmetrization sym;
  sym.original = std::make_shared<const Model>(model);
  switch (osa.method) {
    case OsaSettings::Method::kNone:
      sym.record.model = model;
      sym.record.method = "none";
      break;
    case OsaSettings::Method::kZeroUnary:
      sym.record = zero_unary_tables(model);
      break;
    case OsaSettings::Method::kCluster:
      sym.record = cluster_weights(model, osa.clusters);
      break;
  }
  sym.osa = std::make_shared<const Model>(sym.record.model);
  return sym;
}

Symmetrization build_osa(const ExperimentConfig& config) {
  const ModelSource& src = config.source;
  if (!config.osa.bmf_rank) return symmetrize_model(build_model(src), config.osa);
  const MLNProgram program = parse_mln(read_text(src.mln_program));
  Evidence evidence;
  if (!src.mln_evidence.empty()) evidence = parse_evidence(read_text(src.mln_evidence), program);
  const RelationSymmetrization rel =
      symmetrize_relation(program, evidence, config.osa.bmf_relation, *config.osa.bmf_rank);
  const Model original = mln_ground(program, rel.closed_evidence).model;
  const Model relational = mln_ground(program, rel.evidence).model;
  if (!same_structure(original, relational)) {
    throw ConfigError("relation symmetrization changed the model structure");
  }
  Symmetrization sym = symmetrize_model(relational, config.osa);
  sym.original = std::make_shared<const Model>(original);
  OSAModel record = diff_osa(original, *sym.osa, config.osa.method == OsaSettings::Method::kNone
                                                     ? "bmf"
                                                     : std::string("bmf+") + sym.record.method);
  record.clusters = sym.record.clusters;
  record.bmf_rank = config.osa.bmf_rank;
  sym.record = std::move(record);
  sym.bmf = rel.factorization;
  return sym;
}

PermutationGroup find_automorphisms(const Model& model, AutomorphismMode preferred) {
  const bool has_template = model.symmetry_template().has_value();
  const bool searchable = model.num_variables() <= kSearchVariableCap;
  if (preferred == AutomorphismMode::kTemplate && has_template) {
    return exact_automorphisms(model, AutomorphismMode::kTemplate);
  }
  if (searchable) return exact_automorphisms(model, AutomorphismMode::kSearch);
  if (has_template) return exact_automorphisms(model, AutomorphismMode::kTemplate);
  return PermutationGroup::trivial(model.num_variables());
}

std::vector<std::shared_ptr<const PermutationGroup>> groups_for_method(
    const std::string& method, const Symmetrization& sym, const ExperimentConfig& config) {
  std::vector<std::shared_ptr<const PermutationGroup>> out;
  if (method == "gibbs") return out;
  if (method == "lifted-mcmc" || method == "osa-direct") {
    const Model& target = method == "lifted-mcmc" ? *sym.original : *sym.osa;
    PermutationGroup g = find_automorphisms(target, config.mode);
    if (!g.is_trivial()) out.push_back(std::make_shared<const PermutationGroup>(std::move(g)));
    return out;
  }
  if (method == "lmh") {
    PermutationGroup g = find_automorphisms(*sym.osa, config.mode);
    if (config.lmh_groups == LmhGroups::kAutomorphisms) {
      if (!g.is_trivial()) out.push_back(std::make_shared<const PermutationGroup>(std::move(g)));
      return out;
    }
    for (PermutationGroup& h : subgroup_heuristic(g.orbits(), *sym.original, config.heuristic)) {
      out.push_back(std::make_shared<const PermutationGroup>(std::move(h)));
    }
    return out;
  }
  throw ConfigError("unknown method '" + method + "'");
}

std::shared_ptr<const Model> sampled_model(const std::string& method,
                                           const Symmetrization& sym) {
  return method == "osa-direct" ? sym.osa : sym.original;
}

KernelConfig kernel_for(const std::vector<std::shared_ptr<const PermutationGroup>>& groups,
                        double alpha, bool debug_full_eval) {
  KernelConfig config = groups.empty() ? KernelConfig::gibbs() : KernelConfig::mixture(alpha, groups);
  config.debug_full_eval = debug_full_eval;
  return config;
}

MarginalTable compute_truth(const Model& model, const GoldSettings& gold,
                            std::string* method_used) {
  const bool enumerable =
      model.log2_state_count() <= std::log2(static_cast<double>(kDefaultEnumerationCap));
  bool exact = gold.method == GoldSettings::Method::kExact ||
               (gold.method == GoldSettings::Method::kAuto && enumerable);
  if (method_used != nullptr) *method_used = exact ? "exact" : "gibbs";
  if (exact) return enumerate_exact_marginals(model);
  return gold_standard(model, gold.seed, gold.iterations);
}

bool debug_full_eval_from_env() {
  const char* value = std::getenv("LMH_DEBUG_FULL_EVAL");
  return value != nullptr && std::string(value) == "1";
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  OutputGuard guard(config.output_dir);
  const bool debug = config.debug_full_eval || debug_full_eval_from_env();

  const Symmetrization sym = build_osa(config);
  ExperimentResult result;
  result.truth = compute_truth(*sym.original, config.gold, &result.truth_method);

  write_model(guard.file("model.json"), *sym.original);
  write_model(guard.file("osa_model.json"), *sym.osa);
  write_marginals_csv(guard.file("truth_marginals.csv"), result.truth);

  struct MethodPlan {
    std::string method;
    std::shared_ptr<const Model> model;
    KernelConfig kernel;
    std::vector<std::shared_ptr<const PermutationGroup>> groups;
  };
  std::vector<MethodPlan> plans;
  json groups_doc = json::object();
  for (const std::string& method : config.methods) {
    MethodPlan plan{method, sampled_model(method, sym), {}, groups_for_method(method, sym, config)};
    plan.kernel = kernel_for(plan.groups, config.alpha, debug);
    groups_doc[method] = groups_json(plan.groups);
    plans.push_back(std::move(plan));
  }
  write_text(guard.file("groups.json"), groups_doc.dump(1) + "\n");

  json osa_doc;
  osa_doc["method"] = sym.record.method;
  osa_doc["clusters"] = config.osa.clusters;
  osa_doc["bmf_rank"] = config.osa.bmf_rank ? json(*config.osa.bmf_rank) : json(nullptr);
  osa_doc["label"] = "OSA-" + (config.osa.bmf_rank ? std::to_string(*config.osa.bmf_rank) : "none") +
                     "-" + std::to_string(config.osa.clusters);
  if (sym.bmf) osa_doc["bmf_error"] = sym.bmf->error;
  osa_doc["replacements"] = json::array();
  for (const WeightReplacement& r : sym.record.provenance) {
    osa_doc["replacements"].push_back({{"potential", r.potential},
                                       {"cluster", r.cluster},
                                       {"original", r.original},
                                       {"replacement", r.replacement}});
  }
  osa_doc["generators"] = groups_doc;
  write_text(guard.file("osa.json"), osa_doc.dump(1) + "\n");

  // One job per (method, chain); results land in fixed slots.
  const int chains = static_cast<int>(config.seeds.size());
  const int jobs = static_cast<int>(plans.size()) * chains;
  result.chains.resize(jobs);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const int job = next.fetch_add(1);
      if (job >= jobs) return;
      const MethodPlan& plan = plans[job / chains];
      const int chain_id = job % chains;
      try {
        RunOptions options;
        options.chain_id = chain_id;
        options.label = plan.method;
        options.truth = &result.truth;
        ChainSummary& summary = result.chains[job];
        summary.method = plan.method;
        summary.chain_id = chain_id;
        summary.seed = chain_seed(config.seeds[chain_id], chain_id);
        summary.result = run_chain(*plan.model, plan.kernel, summary.seed, config.schedule, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(jobs);
      }
    }
  };
  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  threads = std::max(1, std::min(threads, jobs));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::string summary_csv =
      "method,chain_id,seed,iterations,final_avg_kl,acceptance_rate,gibbs_steps,"
      "orbital_proposed,orbital_accepted\n";
  for (const ChainSummary& c : result.chains) {
    const std::string stem = c.method + "_chain" + std::to_string(c.chain_id);
    write_trace_csv(guard.file("trace_" + stem + ".csv"), c.result.trace);
    write_marginals_csv(guard.file("marginals_" + stem + ".csv"), c.result.marginals);
    const double final_kl = avg_kl(result.truth, c.result.marginals).average;
    summary_csv += c.method + "," + std::to_string(c.chain_id) + "," + std::to_string(c.seed) +
                   "," + std::to_string(config.schedule.iterations) + "," +
                   precise(final_kl) + "," +
                   format_optional_rate(c.result.stats.acceptance_rate()) + "," +
                   std::to_string(c.result.stats.gibbs_steps) + "," +
                   std::to_string(c.result.stats.orbital_proposed()) + "," +
                   std::to_string(c.result.stats.orbital_accepted()) + "\n";
  }
  write_text(guard.file("kl_summary.csv"), summary_csv);

  json manifest;
  manifest["library_version"] = kLibraryVersion;
  manifest["config"] = json::parse(config_to_json(config));
  manifest["truth_method"] = result.truth_method;
  manifest["debug_full_eval"] = debug;
  manifest["chain_seeds"] = json::array();
  for (int i = 0; i < chains; ++i) manifest["chain_seeds"].push_back(chain_seed(config.seeds[i], i));
  manifest["pinned"] = {{"kl_epsilon", kDefaultKlEpsilon},
                        {"seed_rule", "seeds[i] xor (i << 32)"},
                        {"rng", "mt19937_64"},
                        {"product_replacement_min_slots", ElementSampler::kMinSlots},
                        {"product_replacement_burn_in", ElementSampler::kBurnInSteps},
                        {"enumerated_group_max_elements", ElementSampler::kMaxStoredElements},
                        {"cluster_seed", kClusterSeed},
                        {"cluster_max_iterations", kClusterMaxIterations},
                        {"asso_threshold", kAssoThreshold},
                        {"enumeration_cap", kDefaultEnumerationCap},
                        {"gold_burn_in_fraction", 0.1},
                        {"checkpoints", checkpoint_iterations(config.schedule)}};
  json group_summary = json::object();
  for (const MethodPlan& plan : plans) {
    json entry = json::array();
    for (const auto& g : plan.groups) {
      entry.push_back({{"moved_variables", g->moved_variables().size()},
                       {"moved_potentials", moved_sets(*g, *plan.model).potentials.size()},
                       {"symmetric", g->is_symmetric_group()}});
    }
    group_summary[plan.method] = entry;
  }
  manifest["groups"] = group_summary;
  manifest["osa_replacements"] = sym.record.provenance.size();
  write_text(guard.file("manifest.json"), manifest.dump(2) + "\n");
  guard.commit();
  return result;
}

}  // namespace lmh
