#include "lmh/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace lmh {

using nlohmann::json;

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError(where + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_uint(std::string_view s, const std::string& where) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IoError(where + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string model_to_json(const Model& model) {
  json doc;
  doc["variables"] = json::array();
  for (const Variable& v : model.variables()) {
    json item{{"id", v.id}, {"cardinality", v.cardinality}};
    if (!v.name.empty()) item["name"] = v.name;
    doc["variables"].push_back(std::move(item));
  }
  doc["potentials"] = json::array();
  for (const Potential& p : model.potentials()) {
    doc["potentials"].push_back({{"id", p.id}, {"scope", p.scope}, {"log_table", p.log_table}});
  }
  if (const auto& t = model.symmetry_template()) {
    doc["template"] = {{"kind", t->kind == SymmetryTemplate::Kind::kGrid ? "grid" : "chimera"},
                       {"rows", t->rows},
                       {"cols", t->cols}};
  }
  return doc.dump(1) + "\n";
}

Model model_from_json(const std::string& text) {
  const json doc = parse_json(text, "model file");
  try {
    std::vector<Variable> variables;
    for (const json& item : doc.at("variables")) {
      Variable v;
      v.id = item.at("id").get<int>();
      v.cardinality = item.at("cardinality").get<int>();
      if (item.contains("name")) v.name = item.at("name").get<std::string>();
      variables.push_back(std::move(v));
    }
    std::sort(variables.begin(), variables.end(),
              [](const Variable& a, const Variable& b) { return a.id < b.id; });
    std::vector<Potential> potentials;
    for (const json& item : doc.at("potentials")) {
      Potential p;
      p.id = item.at("id").get<int>();
      p.scope = item.at("scope").get<std::vector<int>>();
      p.log_table = item.at("log_table").get<std::vector<double>>();
      potentials.push_back(std::move(p));
    }
    std::sort(potentials.begin(), potentials.end(),
              [](const Potential& a, const Potential& b) { return a.id < b.id; });
    std::optional<SymmetryTemplate> tmpl;
    if (doc.contains("template")) {
      const json& t = doc.at("template");
      const std::string kind = t.at("kind").get<std::string>();
      SymmetryTemplate st;
      if (kind == "grid") {
        st.kind = SymmetryTemplate::Kind::kGrid;
      } else if (kind == "chimera") {
        st.kind = SymmetryTemplate::Kind::kChimera;
      } else {
        throw IoError("unknown template kind '" + kind + "'");
      }
      st.rows = t.at("rows").get<int>();
      st.cols = t.at("cols").get<int>();
      tmpl = st;
    }
    return Model(std::move(variables), std::move(potentials), tmpl);
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  }
}

void write_model(const std::filesystem::path& path, const Model& model) {
  write_text(path, model_to_json(model));
}

Model read_model(const std::filesystem::path& path) {
  return model_from_json(read_text(path));
}

std::string groups_to_json(const std::vector<PermutationGroup>& groups) {
  json doc;
  doc["groups"] = json::array();
  for (const PermutationGroup& g : groups) {
    json item{{"degree", g.degree()}, {"generators", json::array()}};
    for (const Permutation& p : g.generators()) item["generators"].push_back(p.cycles());
    if (g.is_symmetric_group()) item["symmetric_points"] = g.symmetric_points();
    doc["groups"].push_back(std::move(item));
  }
  return doc.dump(1) + "\n";
}

std::vector<PermutationGroup> groups_from_json(const std::string& text) {
  const json doc = parse_json(text, "generator file");
  try {
    std::vector<PermutationGroup> out;
    for (const json& item : doc.at("groups")) {
      const int degree = item.at("degree").get<int>();
      if (item.contains("symmetric_points")) {
        out.push_back(PermutationGroup::symmetric(
            degree, item.at("symmetric_points").get<std::vector<int>>()));
        continue;
      }
      std::vector<Permutation> gens;
      for (const json& cycles : item.at("generators")) {
        gens.push_back(Permutation::from_cycles(
            degree, cycles.get<std::vector<std::vector<int>>>()));
      }
      out.emplace_back(degree, std::move(gens));
    }
    return out;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed generator file: ") + e.what());
  }
}

void write_groups(const std::filesystem::path& path,
                  const std::vector<PermutationGroup>& groups) {
  write_text(path, groups_to_json(groups));
}

std::vector<PermutationGroup> read_groups(const std::filesystem::path& path) {
  return groups_from_json(read_text(path));
}

void write_marginals_csv(const std::filesystem::path& path, const MarginalTable& table) {
  std::string out = "variable_id,value,probability\n";
  for (int v = 0; v < table.num_variables(); ++v) {
    const auto& probs = table.probabilities[v];
    for (std::size_t a = 0; a < probs.size(); ++a) {
      out += std::to_string(v) + "," + std::to_string(a) + "," + format_double(probs[a]) + "\n";
    }
  }
  write_text(path, out);
}

MarginalTable read_marginals_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != "variable_id,value,probability") {
    throw IoError(path.string() + ": missing marginal CSV header");
  }
  MarginalTable table;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto fields = split_csv(line);
    if (fields.size() != 3) throw IoError(where + ": expected 3 fields");
    const auto v = parse_uint(fields[0], where);
    const auto a = parse_uint(fields[1], where);
    if (v >= table.probabilities.size()) table.probabilities.resize(v + 1);
    auto& probs = table.probabilities[v];
    if (a >= probs.size()) probs.resize(a + 1, 0.0);
    probs[a] = parse_double(fields[2], where);
  }
  return table;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  std::string out = "chain_id,kernel,iteration,wallclock_ms,avg_kl,acceptance_rate\n";
  for (const TraceRow& r : rows) {
    out += std::to_string(r.chain_id) + "," + r.kernel + "," + std::to_string(r.iteration) +
           "," + format_double(r.wallclock_ms) + "," + format_double(r.avg_kl) + "," +
           (std::isnan(r.acceptance_rate) ? "" : format_double(r.acceptance_rate)) + "\n";
  }
  write_text(path, out);
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) ||
      line != "chain_id,kernel,iteration,wallclock_ms,avg_kl,acceptance_rate") {
    throw IoError(path.string() + ": missing trace CSV header");
  }
  std::vector<TraceRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto fields = split_csv(line);
    if (fields.size() != 6) throw IoError(where + ": expected 6 fields");
    TraceRow r;
    r.chain_id = static_cast<int>(parse_uint(fields[0], where));
    r.kernel = fields[1];
    r.iteration = parse_uint(fields[2], where);
    r.wallclock_ms = parse_double(fields[3], where);
    r.avg_kl = parse_double(fields[4], where);
    r.acceptance_rate = fields[5].empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : parse_double(fields[5], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace lmh
