#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "abd/infer.hpp"

using namespace abd;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(FIXTURE_DIR) + "/" + name);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string with_assertion(const std::string& text, const std::string& assertion) {
  std::string out = text;
  size_t at = out.find("(assert");
  REQUIRE(at != std::string::npos);
  // the assert form ends where the generator form begins
  size_t end = out.find("(generator");
  REQUIRE(end != std::string::npos);
  out.replace(at, end - at, "(assert " + assertion + ")\n  ");
  return out;
}

std::vector<FeatureVector> cube(size_t n) {
  std::vector<FeatureVector> out;
  for (uint64_t m = 0; m < (uint64_t{1} << n); ++m) {
    FeatureVector v(n);
    for (size_t i = 0; i < n; ++i) v[i] = (m >> i) & 1;
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("spec_infer finds a safe and consistent interface for concat") {
  ConfigFile cfg = parse_config(slurp("stack_concat.cfg"));
  Engine eng = make_engine(cfg);
  Metrics m;
  std::vector<Var> u = default_qvars(1);
  SpecInferResult r = eng.spec_infer(u, m);
  REQUIRE(r.kind == SpecInferResult::Kind::Delta);
  CHECK(m.gathered_vectors > 0);

  // (a) every query verifies OK
  const SigTable& sigs = eng.sigs_for(u);
  for (auto& q : eng.config().queries) {
    ExprPtr vc = Expr::mk_implies(substitute(q, r.delta, sigs), q.phi);
    CHECK(eng.solver().verify(vc).status == VerifyStatus::OK);
  }
  // (b) no query is vacuous
  for (auto& q : eng.config().queries) CHECK(eng.solver().check_nontrivial(q, r.delta, sigs));
  // (c) consistent with fresh executions
  CHECK(eng.consistent_with_executions(r.delta, u, 1000, 999));
}

TEST_CASE("weaken reaches a maximal spec for is_empty") {
  ConfigFile cfg = parse_config(slurp("stack_concat.cfg"));
  Engine eng = make_engine(cfg);
  Metrics m;
  std::vector<Var> u = default_qvars(1);
  SpecInferResult r = eng.spec_infer(u, m);
  REQUIRE(r.kind == SpecInferResult::Kind::Delta);

  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(120);
  bool maximal = true;
  VerificationInterface delta = r.delta;
  // one weakening pass over every function, declaration order
  for (auto& f : eng.config().F)
    delta.map[f.name] = eng.weaken(delta, f.name, u, deadline, maximal, m);
  REQUIRE(maximal);

  const SigTable& sigs = eng.sigs_for(u);
  const FeatureSet& S = sigs.fset("is_empty");
  const Formula& spec = delta.at("is_empty");
  // weakening is monotone
  for (auto& v : positive_vectors(r.delta.at("is_empty"), S)) CHECK(classify(spec, v));
  // the result stays safe
  for (auto& q : eng.config().queries) {
    ExprPtr vc = Expr::mk_implies(substitute(q, delta, sigs), q.phi);
    CHECK(eng.solver().verify(vc).status == VerifyStatus::OK);
  }
  // and admits the expected "nu implies not mem" behaviors:
  // an empty-result vector and the non-member vector are both allowed
  CHECK(classify(spec, {false, false, true}));   // empty stack, returns true
  CHECK(classify(spec, {true, true, false}));    // non-empty, returns false
  CHECK_FALSE(classify(spec, {false, true, true}));  // member but claims empty
}

TEST_CASE("multi_abduce on concat returns a maximal interface at one qvar") {
  ConfigFile cfg = parse_config(slurp("stack_concat.cfg"));
  Engine eng = make_engine(cfg);
  InferenceLimits lim;
  lim.k_max = cfg.limits.max_qvars;
  lim.weaken_bound_s = cfg.limits.weaken_bound_s;
  InferenceOutcome out = eng.multi_abduce(lim);
  REQUIRE(out.kind == InferenceOutcome::Kind::Interface);
  CHECK(out.maximal);
  CHECK(out.metrics.qvar_count == 1);

  // maximality spot-check on is_empty: no rejected vector can be admitted
  std::vector<Var> u = default_qvars(1);
  const SigTable& sigs = eng.sigs_for(u);
  const FeatureSet& S = sigs.fset("is_empty");
  for (auto& v : cube(S.size())) {
    if (classify(out.delta.at("is_empty"), v)) continue;
    VerificationInterface cand = out.delta;
    cand.map["is_empty"] = formula_or(out.delta.at("is_empty"), unitary_classifier(v, S));
    bool safe = true;
    for (auto& q : eng.config().queries) {
      ExprPtr vc = Expr::mk_implies(substitute(q, cand, sigs), q.phi);
      if (eng.solver().verify(vc).status != VerifyStatus::OK) safe = false;
    }
    CHECK_FALSE(safe);
  }
}

TEST_CASE("unsafe postcondition yields a concrete counterexample") {
  ConfigFile cfg = parse_config(slurp("stack_concat_unsafe.cfg"));
  Engine eng = make_engine(cfg);
  InferenceLimits lim;
  InferenceOutcome out = eng.multi_abduce(lim);
  REQUIRE(out.kind == InferenceOutcome::Kind::Counterexample);
  REQUIRE(out.cex_inputs.count("s1") == 1);
  REQUIRE(out.cex_inputs.count("s2") == 1);
  // executing the client on the counterexample falsifies the assertion
  auto verdict = eng.run_assertion(out.cex_inputs);
  REQUIRE(verdict.has_value());
  CHECK_FALSE(*verdict);
}

TEST_CASE("trivially true postcondition weakens every spec to full freedom") {
  ConfigFile cfg = parse_config(with_assertion(slurp("stack_concat.cfg"), "true"));
  Engine eng = make_engine(cfg);
  InferenceLimits lim;
  InferenceOutcome out = eng.multi_abduce(lim);
  REQUIRE(out.kind == InferenceOutcome::Kind::Interface);
  REQUIRE(out.maximal);
  std::vector<Var> u = default_qvars(out.metrics.qvar_count);
  const SigTable& sigs = eng.sigs_for(u);
  for (auto& f : eng.config().F) {
    const FeatureSet& S = sigs.fset(f.name);
    for (auto& v : cube(S.size())) CHECK(classify(out.delta.at(f.name), v));
  }
}

TEST_CASE("trivially false postcondition yields a counterexample") {
  ConfigFile cfg = parse_config(with_assertion(slurp("stack_concat.cfg"), "false"));
  Engine eng = make_engine(cfg);
  InferenceLimits lim;
  InferenceOutcome out = eng.multi_abduce(lim);
  REQUIRE(out.kind == InferenceOutcome::Kind::Counterexample);
  auto verdict = eng.run_assertion(out.cex_inputs);
  REQUIRE(verdict.has_value());
  CHECK_FALSE(*verdict);
}

TEST_CASE("serialized interface re-verifies") {
  // round-trip each spec through its DNF term form and re-check every query
  ConfigFile cfg = parse_config(slurp("stack_concat.cfg"));
  Engine eng = make_engine(cfg);
  InferenceLimits lim;
  InferenceOutcome out = eng.multi_abduce(lim);
  REQUIRE(out.kind == InferenceOutcome::Kind::Interface);
  VerificationInterface reloaded;
  for (auto& [f, phi] : out.delta.map)
    reloaded.map[f] = formula_from_dnf(dnf_terms(phi), phi.quantified);
  std::vector<Var> u = default_qvars(out.metrics.qvar_count);
  const SigTable& sigs = eng.sigs_for(u);
  for (auto& q : eng.config().queries) {
    ExprPtr vc = Expr::mk_implies(substitute(q, reloaded, sigs), q.phi);
    CHECK(eng.solver().verify(vc).status == VerifyStatus::OK);
  }
}

TEST_CASE("determinism: same config and seed give the same interface") {
  ConfigFile cfg = parse_config(slurp("stack_concat.cfg"));
  InferenceLimits lim;
  Engine e1 = make_engine(cfg), e2 = make_engine(cfg);
  InferenceOutcome o1 = e1.multi_abduce(lim), o2 = e2.multi_abduce(lim);
  REQUIRE(o1.kind == InferenceOutcome::Kind::Interface);
  REQUIRE(o2.kind == InferenceOutcome::Kind::Interface);
  for (auto& [f, phi] : o1.delta.map) CHECK(dnf_terms(phi) == dnf_terms(o2.delta.at(f)));
  CHECK(o1.metrics.gathered_vectors == o2.metrics.gathered_vectors);
  CHECK(o1.metrics.cex_count == o2.metrics.cex_count);
}
