#pragma once
// Blackbox executable world: concrete datatype values, library and predicate
// implementations, a seeded property-based generator, and concrete client
// path execution producing Samples.

#include <functional>
#include <optional>
#include <random>

#include "abd/logic.hpp"

namespace abd {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Value {
  enum class Kind { Elem, Bool, List, Tree, Leaf };
  Kind kind = Kind::Elem;
  int num = 0;               // Elem scalar, Bool 0/1
  std::vector<Value> kids;   // List: elements front-first; Tree: {root, left, right}

  static Value elem(int v) { return {Kind::Elem, v, {}}; }
  static Value boolean(bool b) { return {Kind::Bool, b ? 1 : 0, {}}; }
  static Value list(std::vector<Value> es) { return {Kind::List, 0, std::move(es)}; }
  static Value leaf() { return {Kind::Leaf, 0, {}}; }
  static Value tree(Value root, Value l, Value r) {
    return {Kind::Tree, 0, {std::move(root), std::move(l), std::move(r)}};
  }

  bool operator==(const Value& o) const {
    return kind == o.kind && num == o.num && kids == o.kids;
  }
  bool operator<(const Value& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (num != o.num) return num < o.num;
    return kids < o.kids;
  }
  std::string str() const;
};

struct LibraryImpl {
  std::string name;
  std::vector<Sort> params;
  Sort ret;
  std::function<Value(const std::vector<Value>&)> fn;  // throws DomainError
};

struct PredicateImpl {
  std::string name;
  std::vector<Sort> sig;
  std::function<bool(const std::vector<Value>&)> fn;  // total
};

using Library = std::map<std::string, LibraryImpl>;
using Predicates = std::map<std::string, PredicateImpl>;

// Built-in implementations, keyed by name:
//   list_push, list_top, list_tail, list_is_empty, list_snoc,
//   tree_maket, tree_insert,
//   list_hd, list_mem, list_ord, tree_mem, tree_root, elem_lt
std::function<Value(const std::vector<Value>&)> builtin_library(const std::string& name);
std::function<bool(const std::vector<Value>&)> builtin_predicate(const std::string& name);

bool eval_predicate(const PredicateImpl& p, const std::vector<Value>& args);
Value eval_library(const LibraryImpl& f, const std::vector<Value>& args);

struct GenConfig {
  int max_container_size = 6;
  int elem_lo = 0;
  int elem_hi = 5;
  uint64_t seed = 1;
  int consistent_streak_to_stop = 200;
};

class Gen {
 public:
  explicit Gen(const GenConfig& cfg) : cfg_(cfg), eng_(cfg.seed) {}
  Value generate(const Sort& sort);
  int pick_int(int lo, int hi);  // inclusive
  const GenConfig& config() const { return cfg_; }

 private:
  GenConfig cfg_;
  std::mt19937_64 eng_;
};

// Complete a variable environment into a Sample: containers get structural
// ids, relations are computed from the predicate implementations over all
// well-sorted tuples (elements drawn from the environment plus one fresh).
Sample make_sample(const std::map<std::string, Value>& env, const Predicates& preds);

// Executes a recursive-call placeholder concretely; may throw DomainError.
using SelfFn = std::function<Value(const std::vector<Value>&)>;

// Execute one path's applications in order, check the path's constraints
// against the concrete values (mismatch -> DomainError: the inputs drive a
// different path), and return the resulting Sample (label Unlabeled).
Sample run_client_path(const VerificationQuery& q,
                       const std::map<std::string, Value>& inputs,
                       const Library& lib, const Predicates& preds,
                       const SelfFn& self);

struct Observation {
  Sample sample;  // label Positive: an observed execution
  std::map<std::string, std::set<FeatureVector>> vectors;  // per library function
};

// Draw standalone per-function calls (round-robin) and random client-path
// executions until a sample disagrees with delta, or until
// consistent_streak_to_stop consecutive consistent draws.
std::optional<Observation> find_inconsistency(
    const VerificationInterface& delta, const SigTable& sigs, const Library& lib,
    const Predicates& preds, const std::vector<VerificationQuery>& queries,
    const std::vector<Var>& client_params, const SelfFn& self, Gen& gen);

// Vectors extracted from one concrete sample for every non-fixed application
// in the given queries (used for consistency checking and learning).
std::map<std::string, std::set<FeatureVector>> sample_vectors(
    const Sample& s, const SigTable& sigs, const std::vector<PlaceholderApp>& apps);

}  // namespace abd
