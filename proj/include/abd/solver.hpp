#pragma once
// Verification oracle.  Sentences are function-free first-order formulas over
// uninterpreted predicates with element/container constants; after negation
// and Skolemization every query lands in the effectively-propositional
// fragment, which we decide by grounding over the constant universe plus one
// designated fresh element, followed by CNF conversion and a small SAT
// search.  An SMT-LIB v2 emitter and optional external-solver cross-check are
// provided for interoperability.

#include <chrono>
#include <string>

#include "abd/logic.hpp"

namespace abd {

struct SolverUnknown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  int timeout_ms = 10000;
  // When nonempty, each query is also emitted as SMT-LIB v2 and fed to this
  // solver binary; a sat/unsat disagreement with the internal engine throws.
  std::string solver_bin;
  // Re-evaluate every Sat model against the queried sentence (soundness
  // handshake); violations are counted and throw.
  bool handshake = true;
};

enum class VerifyStatus { OK, Sat, Unknown };

struct VerifyResult {
  VerifyStatus status = VerifyStatus::Unknown;
  Sample model;        // meaningful when status == Sat
  std::string reason;  // meaningful when status == Unknown
};

enum class SatStatus { Sat, Unsat, Unknown };

struct SatResult {
  SatStatus status = SatStatus::Unknown;
  Sample model;
  std::string reason;
};

class Solver {
 public:
  explicit Solver(SolverOptions opts = {}) : opts_(opts) {}

  // Validity of a closed sentence (free variables read as constants):
  // OK iff the negation is unsatisfiable; Sat carries a falsifying model.
  VerifyResult verify(const ExprPtr& sentence) const;

  // Satisfiability of a sentence.
  SatResult check_sat(const ExprPtr& sentence) const;

  // Sigma[Delta] satisfiable?  Throws SolverUnknown on timeout.
  bool check_nontrivial(const VerificationQuery& q, const VerificationInterface& delta,
                        const SigTable& sigs) const;

  // Validity of phi1 => phi2 over a shared feature set, with the canonical
  // argument/result variables read as constants.
  bool entails(const Formula& phi1, const Formula& phi2, const FeatureSet& s,
               const FuncSig& sig) const;

  const SolverOptions& options() const { return opts_; }

  // Soundness-handshake counters, accumulated across all verify calls.
  static long handshake_checks();
  static long handshake_violations();

 private:
  SolverOptions opts_;
};

// SMT-LIB v2 rendering of a sentence's satisfiability problem.
std::string to_smtlib(const ExprPtr& sentence);

}  // namespace abd
