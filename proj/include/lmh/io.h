#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lmh/estimation.h"
#include "lmh/group.h"
#include "lmh/model.h"
#include "lmh/samplers.h"

namespace lmh {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model document:
//   {"variables": [{"id", "cardinality", "name"?}],
//    "potentials": [{"id", "scope", "log_table"}],
//    "template": {"kind": "grid"|"chimera", "rows", "cols"}?}
// Doubles are written with round-trip precision.
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);
void write_model(const std::filesystem::path& path, const Model& model);
Model read_model(const std::filesystem::path& path);

// Generator sets: {"groups": [{"degree", "generators": [[[cycle], ...], ...],
// "symmetric_points"?}]}.
std::string groups_to_json(const std::vector<PermutationGroup>& groups);
std::vector<PermutationGroup> groups_from_json(const std::string& text);
void write_groups(const std::filesystem::path& path,
                  const std::vector<PermutationGroup>& groups);
std::vector<PermutationGroup> read_groups(const std::filesystem::path& path);

// `variable_id,value,probability`.
void write_marginals_csv(const std::filesystem::path& path, const MarginalTable& table);
MarginalTable read_marginals_csv(const std::filesystem::path& path);

// `chain_id,kernel,iteration,wallclock_ms,avg_kl,acceptance_rate`; the
// acceptance field is empty when no orbital move was proposed.
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace lmh
