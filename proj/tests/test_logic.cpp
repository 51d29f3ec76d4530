#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "abd/logic.hpp"

using namespace abd;

namespace {

const Sort kList = Sort::container("list");

std::vector<MethodPredicate> stack_preds() {
  return {{"hd", {kList, Sort::element()}}, {"mem", {kList, Sort::element()}}};
}

std::vector<Var> qvars(int k) {
  std::vector<Var> u;
  for (int i = 0; i < k; ++i) u.push_back({"u" + std::to_string(i), Sort::element()});
  return u;
}

FuncSig sig_is_empty() { return {"is_empty", {kList}, Sort::boolean()}; }
FuncSig sig_top() { return {"top", {kList}, Sort::element()}; }
FuncSig sig_tail() { return {"tail", {kList}, kList}; }
FuncSig sig_push() { return {"push", {Sort::element(), kList}, kList}; }

FeatureVector fv(std::initializer_list<int> bits) {
  FeatureVector v;
  for (int b : bits) v.push_back(b != 0);
  return v;
}

// All 2^n vectors.
std::vector<FeatureVector> cube(size_t n) {
  std::vector<FeatureVector> out;
  for (uint64_t m = 0; m < (uint64_t{1} << n); ++m) {
    FeatureVector v(n);
    for (size_t i = 0; i < n; ++i) v[i] = (m >> i) & 1;
    out.push_back(v);
  }
  return out;
}

BExprPtr random_bexpr(std::mt19937_64& rng, int n_atoms, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 6 : 1);
  switch (pick(rng)) {
    case 0: return BExpr::mk_true();
    case 1: return BExpr::mk_atom(std::uniform_int_distribution<int>(0, n_atoms - 1)(rng));
    case 2: return BExpr::mk_not(random_bexpr(rng, n_atoms, depth - 1));
    case 3:
      return BExpr::mk_and(
          {random_bexpr(rng, n_atoms, depth - 1), random_bexpr(rng, n_atoms, depth - 1)});
    case 4:
      return BExpr::mk_or(
          {random_bexpr(rng, n_atoms, depth - 1), random_bexpr(rng, n_atoms, depth - 1)});
    case 5:
      return BExpr::mk_implies(random_bexpr(rng, n_atoms, depth - 1),
                               random_bexpr(rng, n_atoms, depth - 1));
    default:
      return BExpr::mk_iff(random_bexpr(rng, n_atoms, depth - 1),
                           random_bexpr(rng, n_atoms, depth - 1));
  }
}

}  // namespace

TEST_CASE("feature set for is_empty") {
  FeatureSet s = build_feature_set(stack_preds(), sig_is_empty(), qvars(1));
  REQUIRE(s.size() == 3);
  Var a0{"a0", kList}, u0{"u0", Sort::element()}, nu{"nu", Sort::boolean()};
  CHECK(s.features[0] == Feature::pred_app("hd", {a0, u0}));
  CHECK(s.features[1] == Feature::pred_app("mem", {a0, u0}));
  CHECK(s.features[2] == Feature::bool_var(nu));
}

TEST_CASE("feature set for top") {
  FeatureSet s = build_feature_set(stack_preds(), sig_top(), qvars(1));
  REQUIRE(s.size() == 3);
  Var a0{"a0", kList}, u0{"u0", Sort::element()}, nu{"nu", Sort::element()};
  CHECK(s.features[0] == Feature::pred_app("hd", {a0, u0}));
  CHECK(s.features[1] == Feature::pred_app("mem", {a0, u0}));
  CHECK(s.features[2] == Feature::var_eq(nu, u0));
}

TEST_CASE("feature set for tail and push") {
  FeatureSet st = build_feature_set(stack_preds(), sig_tail(), qvars(1));
  Var a0{"a0", kList}, u0{"u0", Sort::element()};
  Var nul{"nu", kList};
  REQUIRE(st.size() == 4);
  CHECK(st.features[0] == Feature::pred_app("hd", {a0, u0}));
  CHECK(st.features[1] == Feature::pred_app("mem", {a0, u0}));
  CHECK(st.features[2] == Feature::pred_app("hd", {nul, u0}));
  CHECK(st.features[3] == Feature::pred_app("mem", {nul, u0}));

  FeatureSet sp = build_feature_set(stack_preds(), sig_push(), qvars(1));
  Var x{"a0", Sort::element()}, a1{"a1", kList};
  REQUIRE(sp.size() == 5);
  CHECK(sp.features[0] == Feature::pred_app("hd", {a1, u0}));
  CHECK(sp.features[1] == Feature::pred_app("mem", {a1, u0}));
  CHECK(sp.features[2] == Feature::pred_app("hd", {nul, u0}));
  CHECK(sp.features[3] == Feature::pred_app("mem", {nul, u0}));
  CHECK(sp.features[4] == Feature::var_eq(x, u0));
}

TEST_CASE("feature set with two quantified variables includes qvar equalities") {
  FeatureSet s = build_feature_set(stack_preds(), sig_top(), qvars(2));
  Var a0{"a0", kList}, u0{"u0", Sort::element()}, u1{"u1", Sort::element()};
  Var nu{"nu", Sort::element()};
  REQUIRE(s.size() == 7);
  CHECK(s.features[0] == Feature::pred_app("hd", {a0, u0}));
  CHECK(s.features[1] == Feature::pred_app("hd", {a0, u1}));
  CHECK(s.features[2] == Feature::pred_app("mem", {a0, u0}));
  CHECK(s.features[3] == Feature::pred_app("mem", {a0, u1}));
  CHECK(s.features[4] == Feature::var_eq(nu, u0));
  CHECK(s.features[5] == Feature::var_eq(nu, u1));
  CHECK(s.features[6] == Feature::var_eq(u0, u1));
}

TEST_CASE("unitary classifier accepts exactly its vector") {
  FeatureSet s = build_feature_set(stack_preds(), sig_top(), qvars(1));
  for (auto& v : cube(3)) {
    Formula phi = unitary_classifier(v, s);
    for (auto& w : cube(3)) CHECK(classify(phi, w) == (v == w));
  }
}

TEST_CASE("positive_vectors inverts unitary_classifier_any") {
  FeatureSet s = build_feature_set(stack_preds(), sig_push(), qvars(1));
  std::mt19937_64 rng(7);
  for (int round = 0; round < 50; ++round) {
    std::set<FeatureVector> want;
    for (auto& v : cube(5))
      if (rng() & 1) want.insert(v);
    CHECK(positive_vectors(unitary_classifier_any(want, s), s) == want);
  }
}

TEST_CASE("specification classification lemma on random formulas") {
  // \/ [[fv]] over phi's positive vectors is equivalent to phi.
  std::mt19937_64 rng(11);
  FeatureSet s = build_feature_set(stack_preds(), sig_tail(), qvars(1));
  for (int round = 0; round < 60; ++round) {
    Formula phi{qvars(1), random_bexpr(rng, 4, 4)};
    auto pos = positive_vectors(phi, s);
    Formula back = unitary_classifier_any(pos, s);
    for (auto& v : cube(4)) CHECK(classify(back, v) == classify(phi, v));
  }
}

TEST_CASE("normalize preserves semantics and is DNF-shaped") {
  std::mt19937_64 rng(13);
  FeatureSet s = build_feature_set(stack_preds(), sig_push(), qvars(1));
  for (int round = 0; round < 60; ++round) {
    Formula phi{qvars(1), random_bexpr(rng, 5, 4)};
    Formula norm = normalize(phi, s);
    CHECK(positive_vectors(norm, s) == positive_vectors(phi, s));
    // round-trips through the DNF term representation
    Formula back = formula_from_dnf(dnf_terms(norm), norm.quantified);
    CHECK(positive_vectors(back, s) == positive_vectors(phi, s));
    // idempotent
    Formula again = normalize(norm, s);
    CHECK(positive_vectors(again, s) == positive_vectors(norm, s));
  }
}

TEST_CASE("extract_feature_vectors: top observed on a one-element stack") {
  // s1 = [a]: hd(s1,a) and mem(s1,a) hold; top(s1) = a.
  FeatureSet s = build_feature_set(stack_preds(), sig_top(), qvars(1));
  Sample smp;
  smp.assignment["s1"] = SampleValue::container(0);
  smp.assignment["a"] = SampleValue::elem(0);
  smp.relations["hd"] = {{SampleValue::container(0), SampleValue::elem(0)}};
  smp.relations["mem"] = {{SampleValue::container(0), SampleValue::elem(0)}};
  PlaceholderApp app{"top", {{"s1", kList}}, {"a", Sort::element()}, nullptr};
  auto got = extract_feature_vectors(s, smp, app);
  std::set<FeatureVector> want = {fv({1, 1, 1}), fv({0, 0, 0})};
  CHECK(got == want);
}

TEST_CASE("extract_feature_vectors: counterexample-shaped sample") {
  // A model where top returns an element not present in the stack.
  FeatureSet s = build_feature_set(stack_preds(), sig_top(), qvars(1));
  Sample smp;
  smp.assignment["s1"] = SampleValue::container(0);
  smp.assignment["a"] = SampleValue::elem(0);
  smp.relations["hd"] = {};
  smp.relations["mem"] = {};
  PlaceholderApp app{"top", {{"s1", kList}}, {"a", Sort::element()}, nullptr};
  auto got = extract_feature_vectors(s, smp, app);
  std::set<FeatureVector> want = {fv({0, 0, 1}), fv({0, 0, 0})};
  CHECK(got == want);
}

TEST_CASE("eval_under_sample: closed world and fresh element") {
  Var s1{"s1", kList}, u{"u", Sort::element()};
  Sample smp;
  smp.assignment["s1"] = SampleValue::container(0);
  smp.assignment["a"] = SampleValue::elem(0);
  smp.relations["mem"] = {{SampleValue::container(0), SampleValue::elem(0)}};
  // a is a member
  ExprPtr e1 = Expr::mk_pred("mem", {s1, {"a", Sort::element()}});
  CHECK(eval_under_sample(e1, smp));
  // but not everything is: the universe always holds a non-member
  ExprPtr all = Expr::mk_forall({u}, Expr::mk_pred("mem", {s1, u}));
  CHECK_FALSE(eval_under_sample(all, smp));
  ExprPtr some = Expr::mk_exists({u}, Expr::mk_not(Expr::mk_pred("mem", {s1, u})));
  CHECK(eval_under_sample(some, smp));
}

TEST_CASE("substitute places specs, path constraints and result binding") {
  // Single-app path: r = push(x, s); constraint b = true; return r.
  VerificationQuery q;
  q.path_id = "p";
  Var x{"x", Sort::element()}, s{"s", kList}, r{"r", kList}, nu{"nu", kList};
  Var b{"b", Sort::boolean()};
  q.sigma.push_back({"push", {x, s}, r, nullptr});
  q.sigma_eqs.push_back({b, std::nullopt, true});
  q.sigma_eqs.push_back({nu, r, std::nullopt});
  q.phi = Expr::mk_true();

  SigTable sigs;
  sigs.funcs["push"] = sig_push();
  sigs.feature_sets["push"] = build_feature_set(stack_preds(), sig_push(), qvars(1));

  VerificationInterface delta;
  // push |-> forall u0, mem(nu, u0)
  delta.map["push"] = Formula{qvars(1), BExpr::mk_atom(3)};

  ExprPtr sigma = substitute(q, delta, sigs);

  // Sample where r=[e] is full per mem, b true, nu=r: premise holds.
  Sample smp;
  smp.assignment["x"] = SampleValue::elem(0);
  smp.assignment["s"] = SampleValue::container(0);
  smp.assignment["r"] = SampleValue::container(1);
  smp.assignment["nu"] = SampleValue::container(1);
  smp.assignment["b"] = SampleValue::boolean(true);
  smp.relations["mem"] = {{SampleValue::container(1), SampleValue::elem(0)},
                          {SampleValue::container(1), SampleValue::elem(1)}};
  // the fresh element breaks "forall u0, mem(nu, u0)"
  CHECK_FALSE(eval_under_sample(sigma, smp));

  // Weaker spec: forall u0, true -- then only the constraints matter.
  delta.map["push"] = Formula::top(qvars(1));
  sigma = substitute(q, delta, sigs);
  CHECK(eval_under_sample(sigma, smp));
  smp.assignment["b"] = SampleValue::boolean(false);
  CHECK_FALSE(eval_under_sample(sigma, smp));
  smp.assignment["b"] = SampleValue::boolean(true);
  smp.assignment["nu"] = SampleValue::container(0);  // nu != r
  CHECK_FALSE(eval_under_sample(sigma, smp));
}

TEST_CASE("interface_order compares pointwise by positive vectors") {
  SigTable sigs;
  sigs.funcs["top"] = sig_top();
  sigs.feature_sets["top"] = build_feature_set(stack_preds(), sig_top(), qvars(1));

  Formula weak = Formula::top(qvars(1));
  Formula strong{qvars(1), BExpr::mk_atom(0)};

  VerificationInterface d1, d2;
  d1.map["top"] = strong;
  d2.map["top"] = weak;
  CHECK(interface_order(d1, d2, sigs) == InterfaceOrder::SecondWeaker);
  CHECK(interface_order(d2, d1, sigs) == InterfaceOrder::FirstWeaker);
  CHECK(interface_order(d1, d1, sigs) == InterfaceOrder::Equal);

  // syntactically different, semantically equal
  VerificationInterface d3;
  d3.map["top"] = Formula{qvars(1), BExpr::mk_not(BExpr::mk_not(BExpr::mk_atom(0)))};
  CHECK(interface_order(d1, d3, sigs) == InterfaceOrder::Equal);

  VerificationInterface d4;
  d4.map["top"] = Formula{qvars(1), BExpr::mk_atom(1)};
  CHECK(interface_order(d1, d4, sigs) == InterfaceOrder::Incomparable);
}

TEST_CASE("formula_str names features") {
  FeatureSet s = build_feature_set(stack_preds(), sig_top(), qvars(1));
  Formula phi{qvars(1), BExpr::mk_implies(BExpr::mk_atom(0), BExpr::mk_atom(1))};
  std::string str = formula_str(phi, s);
  CHECK(str.find("hd(a0,u0)") != std::string::npos);
  CHECK(str.find("mem(a0,u0)") != std::string::npos);
}
