#pragma once
// Three-phase abductive inference: safe+consistent interface search, greatest
// per-function weakening, and the outer loop that grows the quantifier prefix
// and extracts concrete counterexamples.

#include <chrono>
#include <optional>

#include "abd/frontend.hpp"
#include "abd/learner.hpp"
#include "abd/runtime.hpp"
#include "abd/solver.hpp"

namespace abd {

struct SpecConfig {
  std::vector<VerificationQuery> queries;
  std::vector<MethodPredicate> P;
  std::vector<FuncSig> F;
  Library gammaF;
  Predicates gammaP;
  std::vector<Var> client_params;
  SelfFn self;  // concrete executor for recursive-call placeholders (may be null)
  GenConfig gen;
};

struct Metrics {
  int qvar_count = 0;
  int cex_count = 0;                  // Sat results during interface search
  long gathered_vectors = 0;          // vectors observed into pi
  std::map<std::string, long> positive_vectors_per_fn;
  double time_consistent_s = 0;
  double time_weaken_s = 0;
  long weakening_iterations = 0;
};

struct InferenceLimits {
  int k_max = 3;
  double weaken_bound_s = 60;
};

struct InferenceOutcome {
  enum class Kind { Interface, Counterexample, Aborted };
  Kind kind = Kind::Aborted;
  VerificationInterface delta;  // Interface
  bool maximal = true;
  std::map<std::string, Value> cex_inputs;  // Counterexample
  std::string reason;                       // Aborted
  Metrics metrics;
};

struct SpecInferResult {
  enum class Kind { Delta, FailSample, FailNone };
  Kind kind = Kind::FailNone;
  VerificationInterface delta;
  Sample fail_sample;
};

class Engine {
 public:
  Engine(SpecConfig cfg, SolverOptions sopts = {});

  // Algorithm phase 1: safe and consistent interface for a fixed prefix.
  // Throws SolverUnknown when the oracle cannot decide a phase-1 query.
  SpecInferResult spec_infer(const std::vector<Var>& u, Metrics& m);

  // Algorithm phase 2: weakest safe spec for one function, others fixed.
  // `maximal` is cleared when a time/oracle bound forced an early return.
  Formula weaken(const VerificationInterface& delta, const std::string& f,
                 const std::vector<Var>& u,
                 std::chrono::steady_clock::time_point deadline, bool& maximal,
                 Metrics& m);

  // Full pipeline.
  InferenceOutcome multi_abduce(const InferenceLimits& limits);

  // Bounded concrete search for inputs whose execution falsifies the client
  // assertion (smallest inputs first, then random draws).
  std::optional<std::map<std::string, Value>> extract_cex(const Sample& sneg);

  const SigTable& sigs_for(const std::vector<Var>& u);
  const SpecConfig& config() const { return cfg_; }
  const Solver& solver() const { return solver_; }

  // Client assertion evaluated concretely on an input assignment; nullopt when
  // the execution hits a domain error.
  std::optional<bool> run_assertion(const std::map<std::string, Value>& inputs);

  // Also used by the test suite: consistency of delta with n fresh executions.
  bool consistent_with_executions(const VerificationInterface& delta,
                                  const std::vector<Var>& u, int n, uint64_t seed);

  ClientIR client_ir;  // optional; enables concrete client execution

 private:
  SpecConfig cfg_;
  Solver solver_;
  std::map<size_t, SigTable> sig_cache_;  // by |u|

  VerificationQuery rename_query(const VerificationQuery& q, const std::string& suffix) const;
  void ensure_assigned(Sample& s, const std::vector<Var>& vars) const;
};

std::vector<Var> default_qvars(size_t k);

// Wire a parsed configuration into a ready engine (queries, implementations,
// recursive-call executor, generator settings).
Engine make_engine(const ConfigFile& cfg, SolverOptions sopts = {});

}  // namespace abd
