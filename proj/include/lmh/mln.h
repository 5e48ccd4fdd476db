#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lmh/bmf.h"
#include "lmh/model.h"

namespace lmh {

class MLNError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Capitalized names are constants, lowercase names are logical variables.
struct Term {
  std::string name;
  bool is_variable = false;

  friend bool operator==(const Term&, const Term&) = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;
};

struct Formula {
  enum class Kind { kAtom, kNot, kAnd, kOr, kImplies, kIff };
  Kind kind = Kind::kAtom;
  Atom atom;                                   // kAtom
  std::vector<std::shared_ptr<const Formula>> children;

  static Formula make_atom(Atom atom);
  static Formula make(Kind kind, std::vector<Formula> children);
};

struct WeightedFormula {
  double weight = 0.0;
  Formula formula;
  // Universally quantified logical variables; each atom may only use these.
  std::vector<std::string> variables;
};

struct Predicate {
  std::string name;
  int arity = 0;
};

struct MLNProgram {
  std::vector<Predicate> predicates;
  std::vector<WeightedFormula> formulas;
  std::vector<std::string> domain;
};

struct GroundAtom {
  std::string predicate;
  std::vector<std::string> args;

  std::string to_string() const;
  friend auto operator<=>(const GroundAtom&, const GroundAtom&) = default;
};

struct Evidence {
  std::map<GroundAtom, bool> hard;
  std::map<GroundAtom, double> soft;  // unary log-table [0, w]
};

// Text format, one item per line; `//` and `#` start comments:
//   domain = {A, B}
//   1.3 Page(x, Faculty) => HasWord(x, Hours)
// Connectives: `!` not, `^` or `&` and, `v` or `|` or, `=>`, `<=>`.
MLNProgram parse_mln(std::string_view text);

// Lines `Pred(A, B)`, `!Pred(A, B)` (hard), or `w Pred(A, B)` (soft).
Evidence parse_evidence(std::string_view text, const MLNProgram& program);

struct GroundModel {
  Model model;
  std::vector<GroundAtom> atoms;  // variable id -> atom
};

// One binary variable per ground atom occurring in some grounding (or named
// by soft evidence), ordered lexicographically; one potential per ground
// formula with log-weight w on satisfying rows and 0 elsewhere. Hard
// evidence conditions the model; soft evidence adds unary potentials.
GroundModel mln_ground(const MLNProgram& program, const Evidence& evidence = {});

struct RelationSymmetrization {
  Evidence closed_evidence;  // input with every relation atom made hard
  Evidence evidence;         // relation replaced by the reconstruction
  BooleanMatrix original;  // rows: first argument, cols: second, sorted domain
  BMFResult factorization;
};

// Replaces the hard evidence on a binary predicate over domain x domain with
// its rank-r Boolean reconstruction (atoms without evidence read as false).
RelationSymmetrization symmetrize_relation(const MLNProgram& program,
                                           const Evidence& evidence,
                                           const std::string& predicate, int rank);

}  // namespace lmh
