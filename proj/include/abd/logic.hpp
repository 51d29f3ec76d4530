#pragma once
// Formula language, feature sets, feature-vector semantics, classification,
// sample extraction and interface substitution.  Pure and solver-free.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace abd {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Sorts and variables

enum class SortKind { Container, Element, Boolean };

struct Sort {
  SortKind kind = SortKind::Element;
  std::string datatype;  // container datatype name; empty otherwise

  static Sort container(std::string name) { return {SortKind::Container, std::move(name)}; }
  static Sort element() { return {SortKind::Element, {}}; }
  static Sort boolean() { return {SortKind::Boolean, {}}; }

  bool operator==(const Sort& o) const { return kind == o.kind && datatype == o.datatype; }
  bool operator!=(const Sort& o) const { return !(*this == o); }
  bool operator<(const Sort& o) const {
    if (kind != o.kind) return kind < o.kind;
    return datatype < o.datatype;
  }
};

struct Var {
  std::string name;
  Sort sort;

  bool operator==(const Var& o) const { return name == o.name && sort == o.sort; }
  bool operator!=(const Var& o) const { return !(*this == o); }
  bool operator<(const Var& o) const {
    if (name != o.name) return name < o.name;
    return sort < o.sort;
  }
};

// A boolean observation on datatype values, used as an uninterpreted atom.
// The container position, when present, is first.
struct MethodPredicate {
  std::string name;
  std::vector<Sort> signature;

  bool has_container() const {
    return !signature.empty() && signature.front().kind == SortKind::Container;
  }
  bool operator<(const MethodPredicate& o) const { return name < o.name; }
  bool operator==(const MethodPredicate& o) const {
    return name == o.name && signature == o.signature;
  }
};

// ---------------------------------------------------------------------------
// Features

struct Feature {
  enum class Kind { PredApp, VarEq, BoolVar };
  Kind kind = Kind::PredApp;
  std::string pred;        // PredApp only
  std::vector<Var> args;   // PredApp: signature order; VarEq: {lhs, rhs}; BoolVar: {var}

  static Feature pred_app(std::string p, std::vector<Var> args) {
    return {Kind::PredApp, std::move(p), std::move(args)};
  }
  static Feature var_eq(Var lhs, Var rhs) {
    return {Kind::VarEq, {}, {std::move(lhs), std::move(rhs)}};
  }
  static Feature bool_var(Var v) { return {Kind::BoolVar, {}, {std::move(v)}}; }

  bool operator==(const Feature& o) const {
    return kind == o.kind && pred == o.pred && args == o.args;
  }
  bool operator<(const Feature& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (pred != o.pred) return pred < o.pred;
    return args < o.args;
  }
  std::string str() const;
};

// Function signature used to build feature sets and name placeholder columns.
struct FuncSig {
  std::string name;
  std::vector<Sort> params;
  Sort ret;

  // Canonical variables the feature set is expressed over.
  std::vector<Var> param_vars() const;
  Var ret_var() const;
};

// Minimally linearly independent atom basis for one library function.
struct FeatureSet {
  std::string function;
  std::vector<Feature> features;
  std::vector<Var> quantified;

  size_t size() const { return features.size(); }
  int index_of(const Feature& f) const;  // -1 when absent
};

using FeatureVector = std::vector<bool>;

std::string fv_str(const FeatureVector& fv);

// ---------------------------------------------------------------------------
// Hypothesis-space formulas: prenex-universal propositional bodies whose
// atoms are indices into a feature set.

struct BExpr;
using BExprPtr = std::shared_ptr<const BExpr>;

struct BExpr {
  enum class Kind { True, False, Atom, Not, And, Or, Implies, Iff };
  Kind kind = Kind::True;
  int atom = -1;
  std::vector<BExprPtr> kids;

  static BExprPtr mk_true();
  static BExprPtr mk_false();
  static BExprPtr mk_atom(int i);
  static BExprPtr mk_not(BExprPtr a);
  static BExprPtr mk_and(std::vector<BExprPtr> ks);
  static BExprPtr mk_or(std::vector<BExprPtr> ks);
  static BExprPtr mk_implies(BExprPtr a, BExprPtr b);
  static BExprPtr mk_iff(BExprPtr a, BExprPtr b);
};

bool beval(const BExpr& e, const FeatureVector& fv);

struct Formula {
  std::vector<Var> quantified;
  BExprPtr body;

  static Formula top(std::vector<Var> u) { return {std::move(u), BExpr::mk_true()}; }
  static Formula bottom(std::vector<Var> u) { return {std::move(u), BExpr::mk_false()}; }
  bool is_syntactic_bottom() const { return body && body->kind == BExpr::Kind::False; }
};

// Disjunction of the two bodies under a shared quantifier prefix.
Formula formula_or(const Formula& a, const Formula& b);

std::string formula_str(const Formula& phi, const FeatureSet& s);

// DNF-of-literals normal form with absorption and unit cleanup.
Formula normalize(const Formula& phi, const FeatureSet& s);

// DNF term representation for serialization: each term is a list of
// (feature index, polarity) literals; an empty term is `true`, an empty term
// list is `false`.  dnf_terms requires the body to be in DNF shape (as
// produced by normalize); formula_from_dnf is its inverse.
using DnfTerms = std::vector<std::vector<std::pair<int, bool>>>;
DnfTerms dnf_terms(const Formula& phi);
Formula formula_from_dnf(const DnfTerms& terms, std::vector<Var> quantified);

// ---------------------------------------------------------------------------
// First-order sentences (verification conditions, assertions)

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind {
    True, False,
    Pred,      // pred name + vars
    Eq,        // vars = {lhs, rhs}, element or container sort
    BoolVar,   // vars = {v}
    Not, And, Or, Implies, Iff,
    Forall, Exists  // vars = binders
  };
  Kind kind = Kind::True;
  std::string pred;
  std::vector<Var> vars;
  std::vector<ExprPtr> kids;

  static ExprPtr mk_true();
  static ExprPtr mk_false();
  static ExprPtr mk_pred(std::string p, std::vector<Var> args);
  static ExprPtr mk_eq(Var a, Var b);
  static ExprPtr mk_boolvar(Var v);
  static ExprPtr mk_not(ExprPtr a);
  static ExprPtr mk_and(std::vector<ExprPtr> ks);
  static ExprPtr mk_or(std::vector<ExprPtr> ks);
  static ExprPtr mk_implies(ExprPtr a, ExprPtr b);
  static ExprPtr mk_iff(ExprPtr a, ExprPtr b);
  static ExprPtr mk_forall(std::vector<Var> binders, ExprPtr body);
  static ExprPtr mk_exists(std::vector<Var> binders, ExprPtr body);
};

ExprPtr substitute_vars(const ExprPtr& e, const std::map<std::string, Var>& renaming);
void collect_free_vars(const ExprPtr& e, std::set<Var>& out);
std::string expr_str(const ExprPtr& e);

// ---------------------------------------------------------------------------
// Verification queries and interfaces

struct PlaceholderApp {
  std::string function;      // library function, or a fixed-spec call
  std::vector<Var> args;
  Var result;
  // When set, the application's spec is fixed (e.g. a recursive call's
  // invariant instance) instead of drawn from the interface.
  ExprPtr fixed_spec;
};

struct VarConstraint {  // x = y, or boolean x = constant
  Var lhs;
  std::optional<Var> rhs;
  std::optional<bool> rhs_const;
};

struct VerificationQuery {
  std::string path_id;
  std::vector<PlaceholderApp> sigma;
  std::vector<VarConstraint> sigma_eqs;
  ExprPtr phi;  // sentence; free program variables are implicitly constants
};

struct VerificationInterface {
  std::map<std::string, Formula> map;

  const Formula& at(const std::string& f) const;
};

// ---------------------------------------------------------------------------
// Samples

struct SampleValue {
  enum class Kind { Container, Elem, Bool };
  Kind kind = Kind::Elem;
  int num = 0;  // container id or element scalar; 0/1 for booleans

  static SampleValue container(int id) { return {Kind::Container, id}; }
  static SampleValue elem(int v) { return {Kind::Elem, v}; }
  static SampleValue boolean(bool b) { return {Kind::Bool, b ? 1 : 0}; }

  bool operator==(const SampleValue& o) const { return kind == o.kind && num == o.num; }
  bool operator<(const SampleValue& o) const {
    if (kind != o.kind) return kind < o.kind;
    return num < o.num;
  }
  std::string str() const;
};

enum class SampleLabel { Positive, Negative, Unlabeled };

struct Sample {
  std::map<std::string, SampleValue> assignment;                       // var name -> value
  std::map<std::string, std::set<std::vector<SampleValue>>> relations; // closed world
  SampleLabel label = SampleLabel::Unlabeled;

  // Element scalars appearing anywhere in the sample, plus one fresh value.
  std::vector<int> element_universe() const;
  std::string str() const;
};

// ---------------------------------------------------------------------------
// Operations

FeatureSet build_feature_set(const std::vector<MethodPredicate>& preds,
                             const FuncSig& sig,
                             const std::vector<Var>& u);

Formula unitary_classifier(const FeatureVector& fv, const FeatureSet& s);

// Disjunction of unitary classifiers; bottom for an empty set.
Formula unitary_classifier_any(const std::set<FeatureVector>& fvs, const FeatureSet& s);

bool classify(const Formula& phi, const FeatureVector& fv);

std::set<FeatureVector> positive_vectors(const Formula& phi, const FeatureSet& s);

std::set<FeatureVector> extract_feature_vectors(const FeatureSet& s,
                                                const Sample& sample,
                                                const PlaceholderApp& app);

// Hypothesis formula instantiated at an application's actual arguments,
// with a fresh quantifier prefix.
ExprPtr instantiate(const Formula& phi, const FeatureSet& s,
                    const FuncSig& sig, const PlaceholderApp& app,
                    const std::string& qvar_suffix);

struct SigTable {
  std::map<std::string, FuncSig> funcs;
  std::map<std::string, FeatureSet> feature_sets;

  const FuncSig& sig(const std::string& f) const;
  const FeatureSet& fset(const std::string& f) const;
};

ExprPtr substitute(const VerificationQuery& q, const VerificationInterface& delta,
                   const SigTable& sigs);

enum class InterfaceOrder { Equal, SecondWeaker, FirstWeaker, Incomparable };

InterfaceOrder interface_order(const VerificationInterface& d1,
                               const VerificationInterface& d2,
                               const SigTable& sigs);

// Closed-world evaluation of a sentence under a sample; quantifiers range
// over the sample's element universe.
bool eval_under_sample(const ExprPtr& e, const Sample& s);

}  // namespace abd
