#include "abd/logic.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace abd {

// ---------------------------------------------------------------------------
// Feature / misc printing

std::string Feature::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::PredApp: {
      os << pred << "(";
      for (size_t i = 0; i < args.size(); ++i) {
        if (i) os << ",";
        os << args[i].name;
      }
      os << ")";
      break;
    }
    case Kind::VarEq:
      os << args[0].name << "=" << args[1].name;
      break;
    case Kind::BoolVar:
      os << args[0].name;
      break;
  }
  return os.str();
}

std::string fv_str(const FeatureVector& fv) {
  std::string s = "(";
  for (size_t i = 0; i < fv.size(); ++i) {
    if (i) s += ",";
    s += fv[i] ? "T" : "F";
  }
  return s + ")";
}

std::string SampleValue::str() const {
  switch (kind) {
    case Kind::Container: return "l" + std::to_string(num);
    case Kind::Elem: return std::to_string(num);
    case Kind::Bool: return num ? "true" : "false";
  }
  return "?";
}

std::vector<int> Sample::element_universe() const {
  std::set<int> elems;
  for (auto& [_, v] : assignment)
    if (v.kind == SampleValue::Kind::Elem) elems.insert(v.num);
  for (auto& [_, tuples] : relations)
    for (auto& t : tuples)
      for (auto& v : t)
        if (v.kind == SampleValue::Kind::Elem) elems.insert(v.num);
  int fresh = elems.empty() ? 0 : *elems.rbegin() + 1;
  std::vector<int> out(elems.begin(), elems.end());
  out.push_back(fresh);
  return out;
}

std::string Sample::str() const {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (auto& [k, v] : assignment) {
    if (!first) os << "; ";
    first = false;
    os << k << "->" << v.str();
  }
  for (auto& [p, tuples] : relations) {
    os << "; " << p << "={";
    bool f2 = true;
    for (auto& t : tuples) {
      if (!f2) os << ",";
      f2 = false;
      os << "(";
      for (size_t i = 0; i < t.size(); ++i) {
        if (i) os << ",";
        os << t[i].str();
      }
      os << ")";
    }
    os << "}";
  }
  os << "}";
  return os.str();
}

// ---------------------------------------------------------------------------
// FuncSig / FeatureSet

std::vector<Var> FuncSig::param_vars() const {
  std::vector<Var> out;
  for (size_t i = 0; i < params.size(); ++i)
    out.push_back({"a" + std::to_string(i), params[i]});
  return out;
}

Var FuncSig::ret_var() const { return {"nu", ret}; }

int FeatureSet::index_of(const Feature& f) const {
  for (size_t i = 0; i < features.size(); ++i)
    if (features[i] == f) return static_cast<int>(i);
  return -1;
}

// ---------------------------------------------------------------------------
// BExpr

BExprPtr BExpr::mk_true() {
  static BExprPtr t = std::make_shared<BExpr>(BExpr{Kind::True, -1, {}});
  return t;
}
BExprPtr BExpr::mk_false() {
  static BExprPtr f = std::make_shared<BExpr>(BExpr{Kind::False, -1, {}});
  return f;
}
BExprPtr BExpr::mk_atom(int i) { return std::make_shared<BExpr>(BExpr{Kind::Atom, i, {}}); }
BExprPtr BExpr::mk_not(BExprPtr a) {
  return std::make_shared<BExpr>(BExpr{Kind::Not, -1, {std::move(a)}});
}
BExprPtr BExpr::mk_and(std::vector<BExprPtr> ks) {
  if (ks.empty()) return mk_true();
  if (ks.size() == 1) return ks[0];
  return std::make_shared<BExpr>(BExpr{Kind::And, -1, std::move(ks)});
}
BExprPtr BExpr::mk_or(std::vector<BExprPtr> ks) {
  if (ks.empty()) return mk_false();
  if (ks.size() == 1) return ks[0];
  return std::make_shared<BExpr>(BExpr{Kind::Or, -1, std::move(ks)});
}
BExprPtr BExpr::mk_implies(BExprPtr a, BExprPtr b) {
  return std::make_shared<BExpr>(BExpr{Kind::Implies, -1, {std::move(a), std::move(b)}});
}
BExprPtr BExpr::mk_iff(BExprPtr a, BExprPtr b) {
  return std::make_shared<BExpr>(BExpr{Kind::Iff, -1, {std::move(a), std::move(b)}});
}

bool beval(const BExpr& e, const FeatureVector& fv) {
  switch (e.kind) {
    case BExpr::Kind::True: return true;
    case BExpr::Kind::False: return false;
    case BExpr::Kind::Atom:
      if (e.atom < 0 || e.atom >= static_cast<int>(fv.size()))
        throw ContractViolation("atom index out of range of feature vector");
      return fv[e.atom];
    case BExpr::Kind::Not: return !beval(*e.kids[0], fv);
    case BExpr::Kind::And:
      for (auto& k : e.kids)
        if (!beval(*k, fv)) return false;
      return true;
    case BExpr::Kind::Or:
      for (auto& k : e.kids)
        if (beval(*k, fv)) return true;
      return false;
    case BExpr::Kind::Implies: return !beval(*e.kids[0], fv) || beval(*e.kids[1], fv);
    case BExpr::Kind::Iff: return beval(*e.kids[0], fv) == beval(*e.kids[1], fv);
  }
  return false;
}

Formula formula_or(const Formula& a, const Formula& b) {
  if (a.quantified != b.quantified)
    throw ContractViolation("formula_or: quantifier prefixes differ");
  if (a.body->kind == BExpr::Kind::False) return b;
  if (b.body->kind == BExpr::Kind::False) return a;
  return {a.quantified, BExpr::mk_or({a.body, b.body})};
}

// ---------------------------------------------------------------------------
// Expr

ExprPtr Expr::mk_true() {
  static ExprPtr t = std::make_shared<Expr>(Expr{Kind::True, {}, {}, {}});
  return t;
}
ExprPtr Expr::mk_false() {
  static ExprPtr f = std::make_shared<Expr>(Expr{Kind::False, {}, {}, {}});
  return f;
}
ExprPtr Expr::mk_pred(std::string p, std::vector<Var> args) {
  return std::make_shared<Expr>(Expr{Kind::Pred, std::move(p), std::move(args), {}});
}
ExprPtr Expr::mk_eq(Var a, Var b) {
  return std::make_shared<Expr>(Expr{Kind::Eq, {}, {std::move(a), std::move(b)}, {}});
}
ExprPtr Expr::mk_boolvar(Var v) {
  return std::make_shared<Expr>(Expr{Kind::BoolVar, {}, {std::move(v)}, {}});
}
ExprPtr Expr::mk_not(ExprPtr a) {
  return std::make_shared<Expr>(Expr{Kind::Not, {}, {}, {std::move(a)}});
}
ExprPtr Expr::mk_and(std::vector<ExprPtr> ks) {
  if (ks.empty()) return mk_true();
  if (ks.size() == 1) return ks[0];
  return std::make_shared<Expr>(Expr{Kind::And, {}, {}, std::move(ks)});
}
ExprPtr Expr::mk_or(std::vector<ExprPtr> ks) {
  if (ks.empty()) return mk_false();
  if (ks.size() == 1) return ks[0];
  return std::make_shared<Expr>(Expr{Kind::Or, {}, {}, std::move(ks)});
}
ExprPtr Expr::mk_implies(ExprPtr a, ExprPtr b) {
  return std::make_shared<Expr>(Expr{Kind::Implies, {}, {}, {std::move(a), std::move(b)}});
}
ExprPtr Expr::mk_iff(ExprPtr a, ExprPtr b) {
  return std::make_shared<Expr>(Expr{Kind::Iff, {}, {}, {std::move(a), std::move(b)}});
}
ExprPtr Expr::mk_forall(std::vector<Var> binders, ExprPtr body) {
  if (binders.empty()) return body;
  return std::make_shared<Expr>(Expr{Kind::Forall, {}, std::move(binders), {std::move(body)}});
}
ExprPtr Expr::mk_exists(std::vector<Var> binders, ExprPtr body) {
  if (binders.empty()) return body;
  return std::make_shared<Expr>(Expr{Kind::Exists, {}, std::move(binders), {std::move(body)}});
}

ExprPtr substitute_vars(const ExprPtr& e, const std::map<std::string, Var>& renaming) {
  auto rn = [&](const Var& v) -> Var {
    auto it = renaming.find(v.name);
    return it == renaming.end() ? v : it->second;
  };
  switch (e->kind) {
    case Expr::Kind::True:
    case Expr::Kind::False:
      return e;
    case Expr::Kind::Pred:
    case Expr::Kind::Eq:
    case Expr::Kind::BoolVar: {
      std::vector<Var> vs;
      for (auto& v : e->vars) vs.push_back(rn(v));
      return std::make_shared<Expr>(Expr{e->kind, e->pred, std::move(vs), {}});
    }
    case Expr::Kind::Forall:
    case Expr::Kind::Exists: {
      // Binders shadow the renaming.
      std::map<std::string, Var> inner = renaming;
      for (auto& b : e->vars) inner.erase(b.name);
      std::vector<ExprPtr> ks = {substitute_vars(e->kids[0], inner)};
      return std::make_shared<Expr>(Expr{e->kind, e->pred, e->vars, std::move(ks)});
    }
    default: {
      std::vector<ExprPtr> ks;
      for (auto& k : e->kids) ks.push_back(substitute_vars(k, renaming));
      return std::make_shared<Expr>(Expr{e->kind, e->pred, e->vars, std::move(ks)});
    }
  }
}

static void collect_free_vars_rec(const ExprPtr& e, std::set<std::string>& bound,
                                  std::set<Var>& out) {
  switch (e->kind) {
    case Expr::Kind::Pred:
    case Expr::Kind::Eq:
    case Expr::Kind::BoolVar:
      for (auto& v : e->vars)
        if (!bound.count(v.name)) out.insert(v);
      return;
    case Expr::Kind::Forall:
    case Expr::Kind::Exists: {
      std::vector<std::string> added;
      for (auto& b : e->vars)
        if (bound.insert(b.name).second) added.push_back(b.name);
      collect_free_vars_rec(e->kids[0], bound, out);
      for (auto& n : added) bound.erase(n);
      return;
    }
    default:
      for (auto& k : e->kids) collect_free_vars_rec(k, bound, out);
      return;
  }
}

void collect_free_vars(const ExprPtr& e, std::set<Var>& out) {
  std::set<std::string> bound;
  collect_free_vars_rec(e, bound, out);
}

std::string expr_str(const ExprPtr& e) {
  std::ostringstream os;
  switch (e->kind) {
    case Expr::Kind::True: return "true";
    case Expr::Kind::False: return "false";
    case Expr::Kind::Pred: {
      os << e->pred << "(";
      for (size_t i = 0; i < e->vars.size(); ++i) {
        if (i) os << ",";
        os << e->vars[i].name;
      }
      os << ")";
      return os.str();
    }
    case Expr::Kind::Eq:
      return e->vars[0].name + "=" + e->vars[1].name;
    case Expr::Kind::BoolVar:
      return e->vars[0].name;
    case Expr::Kind::Not:
      return "!" + expr_str(e->kids[0]);
    case Expr::Kind::And:
    case Expr::Kind::Or: {
      const char* op = e->kind == Expr::Kind::And ? " && " : " || ";
      os << "(";
      for (size_t i = 0; i < e->kids.size(); ++i) {
        if (i) os << op;
        os << expr_str(e->kids[i]);
      }
      os << ")";
      return os.str();
    }
    case Expr::Kind::Implies:
      return "(" + expr_str(e->kids[0]) + " => " + expr_str(e->kids[1]) + ")";
    case Expr::Kind::Iff:
      return "(" + expr_str(e->kids[0]) + " <=> " + expr_str(e->kids[1]) + ")";
    case Expr::Kind::Forall:
    case Expr::Kind::Exists: {
      os << (e->kind == Expr::Kind::Forall ? "forall " : "exists ");
      for (size_t i = 0; i < e->vars.size(); ++i) {
        if (i) os << " ";
        os << e->vars[i].name;
      }
      os << ", " << expr_str(e->kids[0]);
      return os.str();
    }
  }
  return "?";
}

// ---------------------------------------------------------------------------
// build_feature_set

FeatureSet build_feature_set(const std::vector<MethodPredicate>& preds,
                             const FuncSig& sig,
                             const std::vector<Var>& u) {
  for (auto& uv : u)
    if (uv.sort.kind != SortKind::Element)
      throw ConfigError("quantified variables must be element-sorted");
  for (auto& p : preds) {
    if (p.signature.size() < 2) throw ConfigError("predicate arity must be >= 2: " + p.name);
    for (size_t i = 1; i < p.signature.size(); ++i)
      if (p.signature[i].kind == SortKind::Container)
        throw ConfigError("container position must be first: " + p.name);
  }

  std::vector<Var> params = sig.param_vars();
  Var ret = sig.ret_var();
  std::vector<Var> all = params;
  all.push_back(ret);

  std::vector<Var> containers, elems, bools;
  for (auto& v : all) {
    switch (v.sort.kind) {
      case SortKind::Container: containers.push_back(v); break;
      case SortKind::Element: elems.push_back(v); break;
      case SortKind::Boolean: bools.push_back(v); break;
    }
  }

  FeatureSet s;
  s.function = sig.name;
  s.quantified = u;

  auto add = [&](Feature f) {
    if (s.index_of(f) < 0) s.features.push_back(std::move(f));
  };

  // u-tuples with repetition, lexicographic, for a given arity.
  auto u_tuples = [&](size_t n) {
    std::vector<std::vector<Var>> out;
    if (n == 0) {
      out.push_back({});
      return out;
    }
    std::vector<size_t> idx(n, 0);
    if (u.empty()) return out;  // none
    while (true) {
      std::vector<Var> t;
      for (auto i : idx) t.push_back(u[i]);
      out.push_back(std::move(t));
      size_t k = n;
      while (k > 0) {
        if (++idx[k - 1] < u.size()) break;
        idx[k - 1] = 0;
        --k;
      }
      if (k == 0) break;
    }
    return out;
  };

  // Container predicates: container argument ranges over the container-sorted
  // variables (parameters first, then the result); element positions range
  // over quantified variables only.  Applications with a non-quantified
  // element argument are reducible and excluded.
  for (auto& c : containers) {
    for (auto& p : preds) {
      if (!p.has_container()) continue;
      if (p.signature.front().datatype != c.sort.datatype) continue;
      for (auto& t : u_tuples(p.signature.size() - 1)) {
        std::vector<Var> args = {c};
        args.insert(args.end(), t.begin(), t.end());
        add(Feature::pred_app(p.name, std::move(args)));
      }
    }
  }

  // Pure element predicates (e.g. a comparison relation): arguments range
  // over quantified variables and element-sorted parameters/result, with at
  // least one quantified argument and not all arguments identical.
  for (auto& p : preds) {
    if (p.has_container()) continue;
    std::vector<Var> domain = u;
    domain.insert(domain.end(), elems.begin(), elems.end());
    size_t n = p.signature.size();
    std::vector<size_t> idx(n, 0);
    if (domain.empty()) continue;
    while (true) {
      std::vector<Var> args;
      for (auto i : idx) args.push_back(domain[i]);
      bool has_u = false, all_same = true;
      for (size_t i = 0; i < n; ++i) {
        if (idx[i] < u.size()) has_u = true;
        if (args[i] != args[0]) all_same = false;
      }
      if (has_u && !all_same) add(Feature::pred_app(p.name, args));
      size_t k = n;
      while (k > 0) {
        if (++idx[k - 1] < domain.size()) break;
        idx[k - 1] = 0;
        --k;
      }
      if (k == 0) break;
    }
  }

  // Equalities: each element-sorted parameter/result against each quantified
  // variable, then among parameters/result, then among quantified variables.
  for (auto& v : elems)
    for (auto& uv : u) add(Feature::var_eq(v, uv));
  for (size_t i = 0; i < elems.size(); ++i)
    for (size_t j = i + 1; j < elems.size(); ++j) add(Feature::var_eq(elems[i], elems[j]));
  for (size_t i = 0; i < u.size(); ++i)
    for (size_t j = i + 1; j < u.size(); ++j) add(Feature::var_eq(u[i], u[j]));

  // Boolean-sorted parameters/result as direct atoms.
  for (auto& b : bools) add(Feature::bool_var(b));

  return s;
}

// ---------------------------------------------------------------------------
// Classification

Formula unitary_classifier(const FeatureVector& fv, const FeatureSet& s) {
  if (fv.size() != s.size())
    throw ContractViolation("feature vector length does not match feature set");
  std::vector<BExprPtr> lits;
  for (size_t i = 0; i < fv.size(); ++i) {
    auto a = BExpr::mk_atom(static_cast<int>(i));
    lits.push_back(fv[i] ? a : BExpr::mk_not(a));
  }
  return {s.quantified, BExpr::mk_and(std::move(lits))};
}

Formula unitary_classifier_any(const std::set<FeatureVector>& fvs, const FeatureSet& s) {
  std::vector<BExprPtr> terms;
  for (auto& fv : fvs) terms.push_back(unitary_classifier(fv, s).body);
  if (terms.empty()) return Formula::bottom(s.quantified);
  return {s.quantified, BExpr::mk_or(std::move(terms))};
}

bool classify(const Formula& phi, const FeatureVector& fv) { return beval(*phi.body, fv); }

std::set<FeatureVector> positive_vectors(const Formula& phi, const FeatureSet& s) {
  if (s.size() > 24) throw ContractViolation("feature set too large to enumerate");
  std::set<FeatureVector> out;
  size_t n = s.size();
  for (uint64_t m = 0; m < (uint64_t{1} << n); ++m) {
    FeatureVector fv(n);
    for (size_t i = 0; i < n; ++i) fv[i] = (m >> i) & 1;
    if (classify(phi, fv)) out.insert(std::move(fv));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature-vector extraction from samples

namespace {

SampleValue resolve(const Var& canonical, const std::map<std::string, std::string>& actual,
                    const std::map<std::string, int>& u_inst, const Sample& s) {
  auto ui = u_inst.find(canonical.name);
  if (ui != u_inst.end()) return SampleValue::elem(ui->second);
  auto ai = actual.find(canonical.name);
  if (ai == actual.end()) throw ContractViolation("unbound variable " + canonical.name);
  auto vi = s.assignment.find(ai->second);
  if (vi == s.assignment.end())
    throw ContractViolation("sample does not assign variable " + ai->second);
  return vi->second;
}

}  // namespace

std::set<FeatureVector> extract_feature_vectors(const FeatureSet& s,
                                                const Sample& sample,
                                                const PlaceholderApp& app) {
  // Canonical-to-actual variable naming.
  std::map<std::string, std::string> actual;
  for (size_t i = 0; i < app.args.size(); ++i)
    actual["a" + std::to_string(i)] = app.args[i].name;
  actual["nu"] = app.result.name;

  std::vector<int> universe = sample.element_universe();
  std::set<FeatureVector> out;

  size_t nu = s.quantified.size();
  std::vector<size_t> idx(nu, 0);
  while (true) {
    std::map<std::string, int> u_inst;
    for (size_t i = 0; i < nu; ++i) u_inst[s.quantified[i].name] = universe[idx[i]];

    FeatureVector fv;
    fv.reserve(s.size());
    for (auto& f : s.features) {
      bool bit = false;
      switch (f.kind) {
        case Feature::Kind::PredApp: {
          std::vector<SampleValue> tuple;
          for (auto& a : f.args) tuple.push_back(resolve(a, actual, u_inst, sample));
          auto rel = sample.relations.find(f.pred);
          bit = rel != sample.relations.end() && rel->second.count(tuple) > 0;
          break;
        }
        case Feature::Kind::VarEq: {
          auto l = resolve(f.args[0], actual, u_inst, sample);
          auto r = resolve(f.args[1], actual, u_inst, sample);
          bit = l == r;
          break;
        }
        case Feature::Kind::BoolVar: {
          auto v = resolve(f.args[0], actual, u_inst, sample);
          bit = v.num != 0;
          break;
        }
      }
      fv.push_back(bit);
    }
    out.insert(std::move(fv));

    if (nu == 0) break;
    size_t k = nu;
    while (k > 0) {
      if (++idx[k - 1] < universe.size()) break;
      idx[k - 1] = 0;
      --k;
    }
    if (k == 0) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instantiation and substitution

static ExprPtr feature_to_expr(const Feature& f, const std::map<std::string, Var>& rename) {
  auto rn = [&](const Var& v) {
    auto it = rename.find(v.name);
    return it == rename.end() ? v : it->second;
  };
  switch (f.kind) {
    case Feature::Kind::PredApp: {
      std::vector<Var> args;
      for (auto& a : f.args) args.push_back(rn(a));
      return Expr::mk_pred(f.pred, std::move(args));
    }
    case Feature::Kind::VarEq:
      return Expr::mk_eq(rn(f.args[0]), rn(f.args[1]));
    case Feature::Kind::BoolVar:
      return Expr::mk_boolvar(rn(f.args[0]));
  }
  return Expr::mk_true();
}

static ExprPtr bexpr_to_expr(const BExpr& b, const FeatureSet& s,
                             const std::map<std::string, Var>& rename) {
  switch (b.kind) {
    case BExpr::Kind::True: return Expr::mk_true();
    case BExpr::Kind::False: return Expr::mk_false();
    case BExpr::Kind::Atom:
      if (b.atom < 0 || b.atom >= static_cast<int>(s.size()))
        throw ContractViolation("atom index out of range of feature set");
      return feature_to_expr(s.features[b.atom], rename);
    case BExpr::Kind::Not:
      return Expr::mk_not(bexpr_to_expr(*b.kids[0], s, rename));
    case BExpr::Kind::And:
    case BExpr::Kind::Or: {
      std::vector<ExprPtr> ks;
      for (auto& k : b.kids) ks.push_back(bexpr_to_expr(*k, s, rename));
      return b.kind == BExpr::Kind::And ? Expr::mk_and(std::move(ks))
                                        : Expr::mk_or(std::move(ks));
    }
    case BExpr::Kind::Implies:
      return Expr::mk_implies(bexpr_to_expr(*b.kids[0], s, rename),
                              bexpr_to_expr(*b.kids[1], s, rename));
    case BExpr::Kind::Iff:
      return Expr::mk_iff(bexpr_to_expr(*b.kids[0], s, rename),
                          bexpr_to_expr(*b.kids[1], s, rename));
  }
  return Expr::mk_true();
}

ExprPtr instantiate(const Formula& phi, const FeatureSet& s,
                    const FuncSig& sig, const PlaceholderApp& app,
                    const std::string& qvar_suffix) {
  if (app.args.size() != sig.params.size())
    throw ContractViolation("application arity mismatch for " + sig.name);
  std::map<std::string, Var> rename;
  auto params = sig.param_vars();
  for (size_t i = 0; i < params.size(); ++i) rename[params[i].name] = app.args[i];
  rename[sig.ret_var().name] = app.result;
  std::vector<Var> fresh_u;
  for (auto& uv : phi.quantified) {
    Var fu{uv.name + qvar_suffix, uv.sort};
    rename[uv.name] = fu;
    fresh_u.push_back(fu);
  }
  return Expr::mk_forall(std::move(fresh_u), bexpr_to_expr(*phi.body, s, rename));
}

const Formula& VerificationInterface::at(const std::string& f) const {
  auto it = map.find(f);
  if (it == map.end()) throw ContractViolation("interface has no mapping for " + f);
  return it->second;
}

const FuncSig& SigTable::sig(const std::string& f) const {
  auto it = funcs.find(f);
  if (it == funcs.end()) throw ContractViolation("unknown function " + f);
  return it->second;
}

const FeatureSet& SigTable::fset(const std::string& f) const {
  auto it = feature_sets.find(f);
  if (it == feature_sets.end()) throw ContractViolation("no feature set for " + f);
  return it->second;
}

ExprPtr substitute(const VerificationQuery& q, const VerificationInterface& delta,
                   const SigTable& sigs) {
  std::vector<ExprPtr> conj;
  for (auto& app : q.sigma) {
    if (app.fixed_spec) {
      conj.push_back(app.fixed_spec);
      continue;
    }
    const Formula& phi = delta.at(app.function);
    conj.push_back(instantiate(phi, sigs.fset(app.function), sigs.sig(app.function), app,
                               "_" + app.result.name));
  }
  for (auto& eq : q.sigma_eqs) {
    if (eq.rhs_const.has_value()) {
      auto bv = Expr::mk_boolvar(eq.lhs);
      conj.push_back(*eq.rhs_const ? bv : Expr::mk_not(bv));
    } else if (eq.lhs.sort.kind == SortKind::Boolean) {
      conj.push_back(Expr::mk_iff(Expr::mk_boolvar(eq.lhs), Expr::mk_boolvar(*eq.rhs)));
    } else {
      conj.push_back(Expr::mk_eq(eq.lhs, *eq.rhs));
    }
  }
  return Expr::mk_and(std::move(conj));
}

InterfaceOrder interface_order(const VerificationInterface& d1,
                               const VerificationInterface& d2,
                               const SigTable& sigs) {
  std::set<std::string> dom1, dom2;
  for (auto& [f, _] : d1.map) dom1.insert(f);
  for (auto& [f, _] : d2.map) dom2.insert(f);
  if (dom1 != dom2) throw ContractViolation("interface_order: domain mismatch");

  bool d1_sub_d2 = true, d2_sub_d1 = true, all_equal = true;
  for (auto& f : dom1) {
    auto& s = sigs.fset(f);
    auto p1 = positive_vectors(d1.at(f), s);
    auto p2 = positive_vectors(d2.at(f), s);
    if (p1 != p2) all_equal = false;
    if (!std::includes(p2.begin(), p2.end(), p1.begin(), p1.end())) d1_sub_d2 = false;
    if (!std::includes(p1.begin(), p1.end(), p2.begin(), p2.end())) d2_sub_d1 = false;
  }
  if (all_equal) return InterfaceOrder::Equal;
  if (d1_sub_d2) return InterfaceOrder::SecondWeaker;  // d2 > d1
  if (d2_sub_d1) return InterfaceOrder::FirstWeaker;
  return InterfaceOrder::Incomparable;
}

// ---------------------------------------------------------------------------
// Closed-world evaluation under a sample

namespace {

bool eval_sample_rec(const ExprPtr& e, const Sample& s, const std::vector<int>& universe,
                     std::map<std::string, SampleValue>& env) {
  auto lookup = [&](const Var& v) -> SampleValue {
    auto it = env.find(v.name);
    if (it != env.end()) return it->second;
    auto ai = s.assignment.find(v.name);
    if (ai == s.assignment.end())
      throw ContractViolation("sample does not assign " + v.name);
    return ai->second;
  };
  switch (e->kind) {
    case Expr::Kind::True: return true;
    case Expr::Kind::False: return false;
    case Expr::Kind::Pred: {
      std::vector<SampleValue> t;
      for (auto& v : e->vars) t.push_back(lookup(v));
      auto rel = s.relations.find(e->pred);
      return rel != s.relations.end() && rel->second.count(t) > 0;
    }
    case Expr::Kind::Eq:
      return lookup(e->vars[0]) == lookup(e->vars[1]);
    case Expr::Kind::BoolVar:
      return lookup(e->vars[0]).num != 0;
    case Expr::Kind::Not:
      return !eval_sample_rec(e->kids[0], s, universe, env);
    case Expr::Kind::And:
      for (auto& k : e->kids)
        if (!eval_sample_rec(k, s, universe, env)) return false;
      return true;
    case Expr::Kind::Or:
      for (auto& k : e->kids)
        if (eval_sample_rec(k, s, universe, env)) return true;
      return false;
    case Expr::Kind::Implies:
      return !eval_sample_rec(e->kids[0], s, universe, env) ||
             eval_sample_rec(e->kids[1], s, universe, env);
    case Expr::Kind::Iff:
      return eval_sample_rec(e->kids[0], s, universe, env) ==
             eval_sample_rec(e->kids[1], s, universe, env);
    case Expr::Kind::Forall:
    case Expr::Kind::Exists: {
      bool is_forall = e->kind == Expr::Kind::Forall;
      // Instantiate binders left to right over the element universe.
      std::vector<size_t> idx(e->vars.size(), 0);
      while (true) {
        for (size_t i = 0; i < e->vars.size(); ++i)
          env[e->vars[i].name] = SampleValue::elem(universe[idx[i]]);
        bool r = eval_sample_rec(e->kids[0], s, universe, env);
        for (auto& b : e->vars) env.erase(b.name);
        if (is_forall && !r) return false;
        if (!is_forall && r) return true;
        size_t k = idx.size();
        while (k > 0) {
          if (++idx[k - 1] < universe.size()) break;
          idx[k - 1] = 0;
          --k;
        }
        if (k == 0) break;
      }
      return is_forall;
    }
  }
  return false;
}

}  // namespace

bool eval_under_sample(const ExprPtr& e, const Sample& s) {
  auto universe = s.element_universe();
  std::map<std::string, SampleValue> env;
  return eval_sample_rec(e, s, universe, env);
}

// ---------------------------------------------------------------------------
// Normalization: prime-implicant DNF

namespace {

// Term literal encoding: 0 = absent, 1 = positive, 2 = negative.
using Term = std::vector<uint8_t>;

bool subsumes(const Term& a, const Term& b) {
  // a subsumes b when a's literals are a subset of b's.
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0 && a[i] != b[i]) return false;
  return true;
}

BExprPtr term_to_bexpr(const Term& t) {
  std::vector<BExprPtr> lits;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] == 1) lits.push_back(BExpr::mk_atom(static_cast<int>(i)));
    if (t[i] == 2) lits.push_back(BExpr::mk_not(BExpr::mk_atom(static_cast<int>(i))));
  }
  return BExpr::mk_and(std::move(lits));
}

}  // namespace

Formula normalize(const Formula& phi, const FeatureSet& s) {
  auto pos = positive_vectors(phi, s);
  size_t n = s.size();
  uint64_t total = uint64_t{1} << n;
  if (pos.empty()) return Formula::bottom(phi.quantified);
  if (pos.size() == total) return Formula::top(phi.quantified);

  std::set<Term> terms;
  for (auto& fv : pos) {
    Term t(n);
    for (size_t i = 0; i < n; ++i) t[i] = fv[i] ? 1 : 2;
    terms.insert(std::move(t));
  }

  // Merge terms differing in exactly one literal until fixpoint.
  bool changed = true;
  while (changed) {
    changed = false;
    std::set<Term> next = terms;
    for (auto it = terms.begin(); it != terms.end(); ++it) {
      auto jt = it;
      for (++jt; jt != terms.end(); ++jt) {
        int diff = -1;
        bool mergeable = true;
        for (size_t i = 0; i < n && mergeable; ++i) {
          if ((*it)[i] == (*jt)[i]) continue;
          if ((*it)[i] == 0 || (*jt)[i] == 0) { mergeable = false; break; }
          if (diff >= 0) { mergeable = false; break; }
          diff = static_cast<int>(i);
        }
        if (mergeable && diff >= 0) {
          Term m = *it;
          m[diff] = 0;
          if (next.insert(m).second) changed = true;
        }
      }
    }
    terms.swap(next);
  }

  // Keep only non-subsumed terms.
  std::vector<Term> kept;
  for (auto& t : terms) {
    bool sub = false;
    for (auto& o : terms)
      if (!(o == t) && subsumes(o, t)) { sub = true; break; }
    if (!sub) kept.push_back(t);
  }

  // Drop terms whose removal leaves coverage intact (greedy, deterministic).
  auto covers = [&](const std::vector<Term>& ts, const FeatureVector& fv) {
    for (auto& t : ts) {
      bool ok = true;
      for (size_t i = 0; i < n && ok; ++i) {
        if (t[i] == 1 && !fv[i]) ok = false;
        if (t[i] == 2 && fv[i]) ok = false;
      }
      if (ok) return true;
    }
    return false;
  };
  std::vector<Term> result;
  for (size_t i = 0; i < kept.size(); ++i) {
    std::vector<Term> without;
    for (size_t j = 0; j < kept.size(); ++j)
      if (j != i && std::find(result.begin(), result.end(), kept[j]) == result.end())
        without.push_back(kept[j]);
    without.insert(without.end(), result.begin(), result.end());
    bool needed = false;
    for (auto& fv : pos)
      if (!covers(without, fv)) { needed = true; break; }
    if (needed) result.push_back(kept[i]);
  }
  // Greedy pass may under-select when terms overlap; verify and fall back.
  {
    bool exact = true;
    for (auto& fv : pos)
      if (!covers(result, fv)) { exact = false; break; }
    if (!exact) result = kept;
  }

  std::vector<BExprPtr> disj;
  for (auto& t : result) disj.push_back(term_to_bexpr(t));
  Formula out{phi.quantified, BExpr::mk_or(std::move(disj))};
  return out;
}

namespace {

std::pair<int, bool> literal_of(const BExpr& b) {
  if (b.kind == BExpr::Kind::Atom) return {b.atom, true};
  if (b.kind == BExpr::Kind::Not && b.kids[0]->kind == BExpr::Kind::Atom)
    return {b.kids[0]->atom, false};
  throw ContractViolation("formula body is not in DNF shape");
}

std::vector<std::pair<int, bool>> term_of(const BExpr& b) {
  if (b.kind == BExpr::Kind::True) return {};
  if (b.kind == BExpr::Kind::And) {
    std::vector<std::pair<int, bool>> t;
    for (auto& k : b.kids) t.push_back(literal_of(*k));
    return t;
  }
  return {literal_of(b)};
}

}  // namespace

DnfTerms dnf_terms(const Formula& phi) {
  const BExpr& b = *phi.body;
  if (b.kind == BExpr::Kind::False) return {};
  if (b.kind == BExpr::Kind::Or) {
    DnfTerms out;
    for (auto& k : b.kids) out.push_back(term_of(*k));
    return out;
  }
  return {term_of(b)};
}

Formula formula_from_dnf(const DnfTerms& terms, std::vector<Var> quantified) {
  std::vector<BExprPtr> ts;
  for (auto& t : terms) {
    std::vector<BExprPtr> lits;
    for (auto& [i, v] : t)
      lits.push_back(v ? BExpr::mk_atom(i) : BExpr::mk_not(BExpr::mk_atom(i)));
    ts.push_back(BExpr::mk_and(std::move(lits)));
  }
  return {std::move(quantified), BExpr::mk_or(std::move(ts))};
}

std::string formula_str(const Formula& phi, const FeatureSet& s) {
  std::ostringstream os;
  if (!phi.quantified.empty()) {
    os << "forall ";
    for (size_t i = 0; i < phi.quantified.size(); ++i) {
      if (i) os << " ";
      os << phi.quantified[i].name;
    }
    os << ", ";
  }
  std::function<void(const BExpr&)> pr = [&](const BExpr& b) {
    switch (b.kind) {
      case BExpr::Kind::True: os << "true"; return;
      case BExpr::Kind::False: os << "false"; return;
      case BExpr::Kind::Atom: os << s.features[b.atom].str(); return;
      case BExpr::Kind::Not: os << "!"; pr(*b.kids[0]); return;
      case BExpr::Kind::And:
      case BExpr::Kind::Or: {
        os << "(";
        for (size_t i = 0; i < b.kids.size(); ++i) {
          if (i) os << (b.kind == BExpr::Kind::And ? " && " : " || ");
          pr(*b.kids[i]);
        }
        os << ")";
        return;
      }
      case BExpr::Kind::Implies:
        os << "(";
        pr(*b.kids[0]);
        os << " => ";
        pr(*b.kids[1]);
        os << ")";
        return;
      case BExpr::Kind::Iff:
        os << "(";
        pr(*b.kids[0]);
        os << " <=> ";
        pr(*b.kids[1]);
        os << ")";
        return;
    }
  };
  pr(*phi.body);
  return os.str();
}

}  // namespace abd
