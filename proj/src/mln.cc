#include "lmh/mln.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

namespace lmh {

Formula Formula::make_atom(Atom atom) {
  Formula f;
  f.kind = Kind::kAtom;
  f.atom = std::move(atom);
  return f;
}

Formula Formula::make(Kind kind, std::vector<Formula> children) {
  Formula f;
  f.kind = kind;
  for (Formula& c : children) f.children.push_back(std::make_shared<const Formula>(std::move(c)));
  return f;
}

std::string GroundAtom::to_string() const {
  std::string out = predicate + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out += ",";
    out += args[i];
  }
  return out + ")";
}

namespace {

enum class Tok { kIdent, kLParen, kRParen, kComma, kNot, kAnd, kOr, kImplies, kIff, kEnd };

struct Token {
  Tok kind;
  std::string text;
};

std::string strip_comment(std::string_view line) {
  std::size_t cut = line.size();
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '#' || (line[i] == '/' && i + 1 < line.size() && line[i + 1] == '/')) {
      cut = i;
      break;
    }
  }
  std::string out(line.substr(0, cut));
  const auto first = out.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = out.find_last_not_of(" \t\r");
  return out.substr(first, last - first + 1);
}

std::vector<Token> tokenize(std::string_view s, int line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](const std::string& msg) {
    throw MLNError("line " + std::to_string(line_no) + ": " + msg);
  };
  while (i < s.size()) {
    const char ch = s[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
    } else if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({Tok::kIdent, std::string(s.substr(i, j - i))});
      i = j;
    } else if (ch == '(') {
      out.push_back({Tok::kLParen, "("}), ++i;
    } else if (ch == ')') {
      out.push_back({Tok::kRParen, ")"}), ++i;
    } else if (ch == ',') {
      out.push_back({Tok::kComma, ","}), ++i;
    } else if (ch == '!') {
      out.push_back({Tok::kNot, "!"}), ++i;
    } else if (ch == '^' || ch == '&') {
      out.push_back({Tok::kAnd, "^"}), ++i;
    } else if (ch == '|') {
      out.push_back({Tok::kOr, "v"}), ++i;
    } else if (s.substr(i, 2) == "=>") {
      out.push_back({Tok::kImplies, "=>"}), i += 2;
    } else if (s.substr(i, 3) == "<=>") {
      out.push_back({Tok::kIff, "<=>"}), i += 3;
    } else {
      fail(std::string("unexpected character '") + ch + "'");
    }
  }
  out.push_back({Tok::kEnd, ""});
  return out;
}

class FormulaParser {
 public:
  FormulaParser(std::vector<Token> tokens, int line_no)
      : tokens_(std::move(tokens)), line_no_(line_no) {}

  Formula parse() {
    Formula f = iff();
    if (peek().kind != Tok::kEnd) fail("trailing input '" + peek().text + "'");
    return f;
  }

  const std::vector<std::string>& variables() const { return variables_; }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  bool is_or() const {
    return peek().kind == Tok::kOr || (peek().kind == Tok::kIdent && peek().text == "v");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw MLNError("line " + std::to_string(line_no_) + ": " + msg);
  }
  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(std::string("expected ") + what);
    ++pos_;
  }

  Formula iff() {
    Formula left = implies();
    while (peek().kind == Tok::kIff) {
      ++pos_;
      left = Formula::make(Formula::Kind::kIff, {std::move(left), implies()});
    }
    return left;
  }
  Formula implies() {
    Formula left = disjunction();
    if (peek().kind == Tok::kImplies) {
      ++pos_;
      return Formula::make(Formula::Kind::kImplies, {std::move(left), implies()});
    }
    return left;
  }
  Formula disjunction() {
    std::vector<Formula> parts{conjunction()};
    while (is_or()) {
      ++pos_;
      parts.push_back(conjunction());
    }
    if (parts.size() == 1) return std::move(parts[0]);
    return Formula::make(Formula::Kind::kOr, std::move(parts));
  }
  Formula conjunction() {
    std::vector<Formula> parts{unary()};
    while (peek().kind == Tok::kAnd) {
      ++pos_;
      parts.push_back(unary());
    }
    if (parts.size() == 1) return std::move(parts[0]);
    return Formula::make(Formula::Kind::kAnd, std::move(parts));
  }
  Formula unary() {
    if (peek().kind == Tok::kNot) {
      ++pos_;
      return Formula::make(Formula::Kind::kNot, {unary()});
    }
    if (peek().kind == Tok::kLParen) {
      ++pos_;
      Formula inner = iff();
      expect(Tok::kRParen, "')'");
      return inner;
    }
    return Formula::make_atom(atom());
  }
  Atom atom() {
    if (peek().kind != Tok::kIdent) fail("expected a predicate name");
    Atom a;
    a.predicate = peek().text;
    ++pos_;
    if (peek().kind != Tok::kLParen) return a;
    ++pos_;
    while (true) {
      if (peek().kind != Tok::kIdent) fail("expected a term");
      Term t;
      t.name = peek().text;
      t.is_variable = std::islower(static_cast<unsigned char>(t.name[0])) != 0;
      if (t.is_variable &&
          std::find(variables_.begin(), variables_.end(), t.name) == variables_.end()) {
        variables_.push_back(t.name);
      }
      a.args.push_back(std::move(t));
      ++pos_;
      if (peek().kind == Tok::kComma) {
        ++pos_;
        continue;
      }
      expect(Tok::kRParen, "')' or ','");
      break;
    }
    return a;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int line_no_;
  std::vector<std::string> variables_;
};

void collect_atoms(const Formula& f, std::vector<const Atom*>& out) {
  if (f.kind == Formula::Kind::kAtom) {
    out.push_back(&f.atom);
    return;
  }
  for (const auto& c : f.children) collect_atoms(*c, out);
}

void declare_predicate(std::vector<Predicate>& predicates, const Atom& atom,
                       const std::string& where) {
  const int arity = static_cast<int>(atom.args.size());
  for (const Predicate& p : predicates) {
    if (p.name != atom.predicate) continue;
    if (p.arity != arity) {
      throw MLNError(where + ": predicate " + atom.predicate + " used with arity " +
                     std::to_string(arity) + " and " + std::to_string(p.arity));
    }
    return;
  }
  predicates.push_back({atom.predicate, arity});
}

const Predicate* find_predicate(const MLNProgram& program, const std::string& name) {
  for (const Predicate& p : program.predicates) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

void check_atom_known(const MLNProgram& program, const std::string& predicate,
                      std::size_t arity) {
  const Predicate* p = find_predicate(program, predicate);
  if (p == nullptr) throw MLNError("unknown predicate " + predicate);
  if (static_cast<std::size_t>(p->arity) != arity) {
    throw MLNError("predicate " + predicate + " has arity " + std::to_string(p->arity));
  }
}

// Evaluates a formula whose atom occurrences (in depth-first order) have the
// given truth values.
bool evaluate(const Formula& f, const std::vector<char>& values, std::size_t& next) {
  switch (f.kind) {
    case Formula::Kind::kAtom:
      return values[next++] != 0;
    case Formula::Kind::kNot:
      return !evaluate(*f.children[0], values, next);
    case Formula::Kind::kAnd: {
      bool all = true;
      for (const auto& c : f.children) all = evaluate(*c, values, next) && all;
      return all;
    }
    case Formula::Kind::kOr: {
      bool any = false;
      for (const auto& c : f.children) any = evaluate(*c, values, next) || any;
      return any;
    }
    case Formula::Kind::kImplies: {
      const bool a = evaluate(*f.children[0], values, next);
      const bool b = evaluate(*f.children[1], values, next);
      return !a || b;
    }
    case Formula::Kind::kIff: {
      const bool a = evaluate(*f.children[0], values, next);
      const bool b = evaluate(*f.children[1], values, next);
      return a == b;
    }
  }
  return false;
}

GroundAtom parse_ground_atom(std::string_view text, int line_no) {
  FormulaParser parser(tokenize(text, line_no), line_no);
  Formula f = parser.parse();
  if (f.kind != Formula::Kind::kAtom) {
    throw MLNError("line " + std::to_string(line_no) + ": evidence must be a single atom");
  }
  GroundAtom g{f.atom.predicate, {}};
  for (const Term& t : f.atom.args) {
    if (t.is_variable) {
      throw MLNError("line " + std::to_string(line_no) + ": evidence atom " +
                     f.atom.predicate + " contains logical variable " + t.name);
    }
    g.args.push_back(t.name);
  }
  return g;
}

std::vector<std::string> sorted_domain(const MLNProgram& program) {
  std::vector<std::string> domain = program.domain;
  std::sort(domain.begin(), domain.end());
  if (std::adjacent_find(domain.begin(), domain.end()) != domain.end()) {
    throw MLNError("domain contains duplicate constants");
  }
  return domain;
}

}  // namespace

MLNProgram parse_mln(std::string_view text) {
  MLNProgram program;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  bool saw_domain = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_comment(raw);
    if (line.empty()) continue;
    if (line.rfind("domain", 0) == 0) {
      if (saw_domain) throw MLNError("line " + std::to_string(line_no) + ": second domain");
      saw_domain = true;
      const auto open = line.find('{');
      const auto close = line.find('}');
      if (line.find('=') == std::string::npos || open == std::string::npos ||
          close == std::string::npos || close < open) {
        throw MLNError("line " + std::to_string(line_no) + ": expected domain = {A, B, ...}");
      }
      std::istringstream items(line.substr(open + 1, close - open - 1));
      std::string item;
      while (std::getline(items, item, ',')) {
        const std::string name = strip_comment(item);
        if (name.empty()) continue;
        if (!std::isupper(static_cast<unsigned char>(name[0]))) {
          throw MLNError("line " + std::to_string(line_no) + ": constant " + name +
                         " must be capitalized");
        }
        program.domain.push_back(name);
      }
      continue;
    }
    char* end = nullptr;
    const double weight = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || !std::isfinite(weight)) {
      throw MLNError("line " + std::to_string(line_no) + ": expected a finite weight");
    }
    FormulaParser parser(tokenize(end, line_no), line_no);
    WeightedFormula wf;
    wf.weight = weight;
    wf.formula = parser.parse();
    wf.variables = parser.variables();
    std::vector<const Atom*> atoms;
    collect_atoms(wf.formula, atoms);
    for (const Atom* a : atoms) {
      declare_predicate(program.predicates, *a, "line " + std::to_string(line_no));
    }
    program.formulas.push_back(std::move(wf));
  }
  sorted_domain(program);
  return program;
}

Evidence parse_evidence(std::string_view text, const MLNProgram& program) {
  Evidence evidence;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip_comment(raw);
    if (line.empty()) continue;
    const char* start = line.c_str();
    char* end = nullptr;
    const double weight = std::strtod(start, &end);
    const bool soft = end != start && !std::isalpha(static_cast<unsigned char>(line[0]));
    if (soft) {
      if (!std::isfinite(weight)) {
        throw MLNError("line " + std::to_string(line_no) + ": soft weight must be finite");
      }
      GroundAtom atom = parse_ground_atom(end, line_no);
      check_atom_known(program, atom.predicate, atom.args.size());
      evidence.soft[std::move(atom)] = weight;
      continue;
    }
    bool value = true;
    std::string_view body = line;
    if (body[0] == '!') {
      value = false;
      body.remove_prefix(1);
    }
    GroundAtom atom = parse_ground_atom(body, line_no);
    check_atom_known(program, atom.predicate, atom.args.size());
    evidence.hard[std::move(atom)] = value;
  }
  return evidence;
}

GroundModel mln_ground(const MLNProgram& program, const Evidence& evidence) {
  const std::vector<std::string> domain = sorted_domain(program);
  for (const auto& [atom, value] : evidence.hard) {
    check_atom_known(program, atom.predicate, atom.args.size());
    if (evidence.soft.contains(atom)) {
      throw MLNError("atom " + atom.to_string() + " has both hard and soft evidence");
    }
  }
  for (const auto& [atom, weight] : evidence.soft) {
    check_atom_known(program, atom.predicate, atom.args.size());
    if (!std::isfinite(weight)) throw MLNError("soft evidence weight must be finite");
  }

  struct Grounding {
    const WeightedFormula* formula;
    std::vector<GroundAtom> atoms;  // per atom occurrence
  };
  std::vector<Grounding> groundings;
  std::set<GroundAtom> atom_set;
  for (const WeightedFormula& wf : program.formulas) {
    if (!std::isfinite(wf.weight)) throw MLNError("formula weights must be finite");
    std::vector<const Atom*> atoms;
    collect_atoms(wf.formula, atoms);
    for (const Atom* a : atoms) {
      check_atom_known(program, a->predicate, a->args.size());
      for (const Term& t : a->args) {
        if (t.is_variable &&
            std::find(wf.variables.begin(), wf.variables.end(), t.name) == wf.variables.end()) {
          throw MLNError("unbound variable " + t.name + " in atom " + a->predicate);
        }
      }
    }
    const std::size_t k = wf.variables.size();
    if (k > 0 && domain.empty()) continue;
    std::vector<std::size_t> digits(k, 0);
    while (true) {
      Grounding g{&wf, {}};
      for (const Atom* a : atoms) {
        GroundAtom ga{a->predicate, {}};
        for (const Term& t : a->args) {
          if (!t.is_variable) {
            ga.args.push_back(t.name);
            continue;
          }
          const auto pos = std::find(wf.variables.begin(), wf.variables.end(), t.name) -
                           wf.variables.begin();
          ga.args.push_back(domain[digits[pos]]);
        }
        atom_set.insert(ga);
        g.atoms.push_back(std::move(ga));
      }
      groundings.push_back(std::move(g));
      std::size_t i = k;
      while (i > 0) {
        if (++digits[i - 1] < domain.size()) break;
        digits[i - 1] = 0;
        --i;
      }
      if (i == 0) break;
    }
  }
  for (const auto& [atom, weight] : evidence.soft) atom_set.insert(atom);

  GroundModel out;
  std::map<GroundAtom, int> atom_id;
  for (const GroundAtom& a : atom_set) {
    if (evidence.hard.contains(a)) continue;
    atom_id[a] = static_cast<int>(out.atoms.size());
    out.atoms.push_back(a);
  }
  std::vector<Variable> variables;
  for (int v = 0; v < static_cast<int>(out.atoms.size()); ++v) {
    variables.push_back({v, 2, out.atoms[v].to_string()});
  }

  std::vector<Potential> potentials;
  for (const Grounding& g : groundings) {
    std::vector<int> scope;
    for (const GroundAtom& a : g.atoms) {
      const auto it = atom_id.find(a);
      if (it != atom_id.end()) scope.push_back(it->second);
    }
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    if (scope.empty()) continue;  // fully determined by evidence: a constant
    const std::size_t rows = std::size_t{1} << scope.size();
    std::vector<double> table(rows);
    std::vector<char> values(g.atoms.size());
    for (std::size_t row = 0; row < rows; ++row) {
      for (std::size_t i = 0; i < g.atoms.size(); ++i) {
        const auto it = atom_id.find(g.atoms[i]);
        if (it == atom_id.end()) {
          values[i] = evidence.hard.at(g.atoms[i]) ? 1 : 0;
          continue;
        }
        const auto pos = std::lower_bound(scope.begin(), scope.end(), it->second) - scope.begin();
        values[i] = static_cast<char>((row >> (scope.size() - 1 - pos)) & 1U);
      }
      std::size_t next = 0;
      table[row] = evaluate(g.formula->formula, values, next) ? g.formula->weight : 0.0;
    }
    const int id = static_cast<int>(potentials.size());
    potentials.push_back({id, std::move(scope), std::move(table)});
  }
  for (const auto& [atom, weight] : evidence.soft) {
    const int id = static_cast<int>(potentials.size());
    potentials.push_back({id, {atom_id.at(atom)}, {0.0, weight}});
  }
  out.model = Model(std::move(variables), std::move(potentials));
  return out;
}

RelationSymmetrization symmetrize_relation(const MLNProgram& program,
                                           const Evidence& evidence,
                                           const std::string& predicate, int rank) {
  const Predicate* p = find_predicate(program, predicate);
  if (p == nullptr) throw MLNError("unknown predicate " + predicate);
  if (p->arity != 2) throw MLNError("relation " + predicate + " is not binary");
  const std::vector<std::string> domain = sorted_domain(program);
  const int n = static_cast<int>(domain.size());
  RelationSymmetrization out;
  out.evidence = evidence;
  out.original = BooleanMatrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto it = evidence.hard.find({predicate, {domain[i], domain[j]}});
      out.original.set(i, j, it != evidence.hard.end() && it->second);
    }
  }
  out.factorization = boolean_rank_approx(out.original, rank);
  out.closed_evidence = evidence;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const GroundAtom atom{predicate, {domain[i], domain[j]}};
      out.closed_evidence.soft.erase(atom);
      out.closed_evidence.hard[atom] = out.original.get(i, j);
      out.evidence.soft.erase(atom);
      out.evidence.hard[atom] = out.factorization.reconstruction.get(i, j);
    }
  }
  return out;
}

}  // namespace lmh
