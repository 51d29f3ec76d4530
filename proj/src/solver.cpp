#include "abd/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace abd {

namespace {

std::atomic<long> g_handshake_checks{0};
std::atomic<long> g_handshake_violations{0};

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// NNF + Skolemization.  Quantified variables are element-sorted; existentials
// become fresh constants.  An existential under a universal leaves the
// decidable fragment and reports Unknown via this exception.

struct Fragment : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Nnf {
  std::vector<Var>* skolems;
  int counter = 0;

  ExprPtr run(const ExprPtr& e, bool pos, bool under_forall,
              std::map<std::string, Var>& ren) {
    switch (e->kind) {
      case Expr::Kind::True:
        return pos ? Expr::mk_true() : Expr::mk_false();
      case Expr::Kind::False:
        return pos ? Expr::mk_false() : Expr::mk_true();
      case Expr::Kind::Pred:
      case Expr::Kind::Eq:
      case Expr::Kind::BoolVar: {
        ExprPtr a = substitute_vars(e, ren);
        return pos ? a : Expr::mk_not(a);
      }
      case Expr::Kind::Not:
        return run(e->kids[0], !pos, under_forall, ren);
      case Expr::Kind::And:
      case Expr::Kind::Or: {
        bool mk_and = (e->kind == Expr::Kind::And) == pos;
        std::vector<ExprPtr> ks;
        for (auto& k : e->kids) ks.push_back(run(k, pos, under_forall, ren));
        return mk_and ? Expr::mk_and(std::move(ks)) : Expr::mk_or(std::move(ks));
      }
      case Expr::Kind::Implies: {
        if (pos)
          return Expr::mk_or({run(e->kids[0], false, under_forall, ren),
                              run(e->kids[1], true, under_forall, ren)});
        return Expr::mk_and({run(e->kids[0], true, under_forall, ren),
                             run(e->kids[1], false, under_forall, ren)});
      }
      case Expr::Kind::Iff: {
        // (a&b)|(!a&!b), negated: (a&!b)|(!a&b)
        auto a_t = [&] { return run(e->kids[0], true, under_forall, ren); };
        auto a_f = [&] { return run(e->kids[0], false, under_forall, ren); };
        auto b_t = [&] { return run(e->kids[1], true, under_forall, ren); };
        auto b_f = [&] { return run(e->kids[1], false, under_forall, ren); };
        if (pos)
          return Expr::mk_or({Expr::mk_and({a_t(), b_t()}), Expr::mk_and({a_f(), b_f()})});
        return Expr::mk_or({Expr::mk_and({a_t(), b_f()}), Expr::mk_and({a_f(), b_t()})});
      }
      case Expr::Kind::Forall:
      case Expr::Kind::Exists: {
        bool universal = (e->kind == Expr::Kind::Forall) == pos;
        if (universal) {
          for (auto& b : e->vars)
            if (b.sort.kind != SortKind::Element)
              throw Fragment("non-element quantification");
          std::map<std::string, Var> inner = ren;
          for (auto& b : e->vars) inner.erase(b.name);
          ExprPtr body = run(e->kids[0], pos, true, inner);
          return std::make_shared<Expr>(
              Expr{Expr::Kind::Forall, {}, e->vars, {std::move(body)}});
        }
        if (under_forall) throw Fragment("quantifier alternation");
        std::map<std::string, Var> inner = ren;
        for (auto& b : e->vars) {
          if (b.sort.kind != SortKind::Element) throw Fragment("non-element quantification");
          Var sk{b.name + "!sk" + std::to_string(counter++), b.sort};
          skolems->push_back(sk);
          inner[b.name] = sk;
        }
        return run(e->kids[0], pos, under_forall, inner);
      }
    }
    return Expr::mk_true();
  }
};

// ---------------------------------------------------------------------------
// Ground problem construction

struct Atom {
  enum class Kind { Pred, Eq, Bool };
  Kind kind;
  std::string pred;       // Pred
  std::vector<int> args;  // constant indices; Eq: sorted pair; Bool: single
  bool operator<(const Atom& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (pred != o.pred) return pred < o.pred;
    return args < o.args;
  }
};

constexpr int LIT_TRUE = std::numeric_limits<int>::max();
constexpr int LIT_FALSE = std::numeric_limits<int>::min();

struct Ground {
  std::vector<Var> consts;  // index = constant id; last may be the fresh elem
  std::map<std::string, int> const_ids;
  int fresh_id = -1;

  std::map<Atom, int> atom_vars;
  int nvars = 0;
  std::vector<std::vector<int>> clauses;  // literals: +(v+1)/-(v+1)

  // union-find over constants for component grouping
  std::vector<int> uf;
  int find(int a) { return uf[a] == a ? a : uf[a] = find(uf[a]); }
  void unite(int a, int b) { uf[find(a)] = find(b); }

  std::map<std::string, std::vector<Sort>> pred_shapes;

  int const_id(const Var& v) {
    auto it = const_ids.find(v.name);
    if (it != const_ids.end()) return it->second;
    int id = static_cast<int>(consts.size());
    consts.push_back(v);
    const_ids[v.name] = id;
    uf.push_back(id);
    uf[id] = id;
    return id;
  }

  int new_var() { return nvars++; }

  int atom_var(const Atom& a) {
    auto it = atom_vars.find(a);
    if (it != atom_vars.end()) return it->second;
    int v = new_var();
    atom_vars.emplace(a, v);
    return v;
  }

  // Literal for an atom, folding the designated fresh element: equalities and
  // predicate applications touching it are false (it is a brand-new element
  // lying outside every container and distinct from everything).
  int atom_lit(Atom a) {
    if (a.kind == Atom::Kind::Eq) {
      if (a.args[0] == a.args[1]) return LIT_TRUE;
      if (a.args[0] > a.args[1]) std::swap(a.args[0], a.args[1]);
      if (a.args[0] == fresh_id || a.args[1] == fresh_id) return LIT_FALSE;
    } else if (a.kind == Atom::Kind::Pred) {
      for (int c : a.args)
        if (c == fresh_id) return LIT_FALSE;
    }
    return atom_var(a) + 1;
  }
};

struct GroundBuild {
  Ground& g;
  // Tseitin conversion of the NNF ground tree; returns a literal.
  // Implication-direction only (NNF, root asserted positively).

  int tseitin_and(std::vector<int> lits) {
    std::vector<int> keep;
    for (int l : lits) {
      if (l == LIT_FALSE) return LIT_FALSE;
      if (l != LIT_TRUE) keep.push_back(l);
    }
    if (keep.empty()) return LIT_TRUE;
    if (keep.size() == 1) return keep[0];
    int v = g.new_var() + 1;
    for (int l : keep) g.clauses.push_back({-v, l});
    return v;
  }

  int tseitin_or(std::vector<int> lits) {
    std::vector<int> keep;
    for (int l : lits) {
      if (l == LIT_TRUE) return LIT_TRUE;
      if (l != LIT_FALSE) keep.push_back(l);
    }
    if (keep.empty()) return LIT_FALSE;
    if (keep.size() == 1) return keep[0];
    int v = g.new_var() + 1;
    std::vector<int> cl = {-v};
    cl.insert(cl.end(), keep.begin(), keep.end());
    g.clauses.push_back(std::move(cl));
    return v;
  }

  // env: quantified var name -> constant id; universe: element constant ids
  // this subtree's quantifiers range over.
  int build(const ExprPtr& e, std::map<std::string, int>& env,
            const std::vector<int>& universe) {
    auto cid = [&](const Var& v) -> int {
      auto it = env.find(v.name);
      if (it != env.end()) return it->second;
      auto ci = g.const_ids.find(v.name);
      if (ci == g.const_ids.end()) throw ContractViolation("unknown constant " + v.name);
      return ci->second;
    };
    switch (e->kind) {
      case Expr::Kind::True: return LIT_TRUE;
      case Expr::Kind::False: return LIT_FALSE;
      case Expr::Kind::Pred: {
        Atom a{Atom::Kind::Pred, e->pred, {}};
        std::vector<Sort> shape;
        for (auto& v : e->vars) {
          a.args.push_back(cid(v));
          shape.push_back(g.consts[a.args.back()].sort);
        }
        auto [it, ins] = g.pred_shapes.emplace(e->pred, shape);
        if (!ins && it->second != shape)
          throw ContractViolation("inconsistent arity/sorts for predicate " + e->pred);
        return g.atom_lit(a);
      }
      case Expr::Kind::Eq: {
        int a = cid(e->vars[0]), b = cid(e->vars[1]);
        if (g.consts[a].sort != g.consts[b].sort)
          throw ContractViolation("ill-sorted equality");
        return g.atom_lit({Atom::Kind::Eq, {}, {a, b}});
      }
      case Expr::Kind::BoolVar:
        return g.atom_lit({Atom::Kind::Bool, {}, {cid(e->vars[0])}});
      case Expr::Kind::Not: {
        int l = build(e->kids[0], env, universe);
        if (l == LIT_TRUE) return LIT_FALSE;
        if (l == LIT_FALSE) return LIT_TRUE;
        return -l;
      }
      case Expr::Kind::And:
      case Expr::Kind::Or: {
        std::vector<int> ls;
        for (auto& k : e->kids) ls.push_back(build(k, env, universe));
        return e->kind == Expr::Kind::And ? tseitin_and(std::move(ls))
                                          : tseitin_or(std::move(ls));
      }
      case Expr::Kind::Forall: {
        // Conjunction over all instantiations of the binders.
        std::vector<int> ls;
        size_t n = e->vars.size();
        std::vector<size_t> idx(n, 0);
        if (universe.empty()) return LIT_TRUE;
        while (true) {
          for (size_t i = 0; i < n; ++i) env[e->vars[i].name] = universe[idx[i]];
          ls.push_back(build(e->kids[0], env, universe));
          for (auto& b : e->vars) env.erase(b.name);
          size_t k = n;
          while (k > 0) {
            if (++idx[k - 1] < universe.size()) break;
            idx[k - 1] = 0;
            --k;
          }
          if (k == 0) break;
        }
        return tseitin_and(std::move(ls));
      }
      default:
        throw ContractViolation("unexpected node in NNF formula");
    }
  }
};

// Union all constants appearing in a subtree (including under quantifiers).
void collect_const_ids(const ExprPtr& e, Ground& g, const std::set<std::string>& bound,
                       std::vector<int>& out) {
  switch (e->kind) {
    case Expr::Kind::Pred:
    case Expr::Kind::Eq:
    case Expr::Kind::BoolVar:
      for (auto& v : e->vars)
        if (!bound.count(v.name)) out.push_back(g.const_ids.at(v.name));
      return;
    case Expr::Kind::Forall:
    case Expr::Kind::Exists: {
      std::set<std::string> b2 = bound;
      for (auto& v : e->vars) b2.insert(v.name);
      collect_const_ids(e->kids[0], g, b2, out);
      return;
    }
    default:
      for (auto& k : e->kids) collect_const_ids(k, g, bound, out);
  }
}

// Group constants: any two constants reachable through a shared quantified
// subformula or atom belong together; quantifiers then range only over their
// own group's elements (plus the fresh one), which is sound because every
// foreign element is indistinguishable from the fresh one.
void group_components(const ExprPtr& e, Ground& g) {
  switch (e->kind) {
    case Expr::Kind::And:
    case Expr::Kind::Or:
      for (auto& k : e->kids) group_components(k, g);
      return;
    case Expr::Kind::Not:
      group_components(e->kids[0], g);
      return;
    default: {
      std::vector<int> ids;
      collect_const_ids(e, g, {}, ids);
      for (size_t i = 1; i < ids.size(); ++i) g.unite(ids[0], ids[i]);
      return;
    }
  }
}

// Grounding with per-component universes.
int build_grounded(const ExprPtr& e, Ground& g, GroundBuild& gb) {
  switch (e->kind) {
    case Expr::Kind::And:
    case Expr::Kind::Or: {
      std::vector<int> ls;
      for (auto& k : e->kids) ls.push_back(build_grounded(k, g, gb));
      return e->kind == Expr::Kind::And ? gb.tseitin_and(std::move(ls))
                                        : gb.tseitin_or(std::move(ls));
    }
    case Expr::Kind::Not: {
      int l = build_grounded(e->kids[0], g, gb);
      if (l == LIT_TRUE) return LIT_FALSE;
      if (l == LIT_FALSE) return LIT_TRUE;
      return -l;
    }
    default: {
      std::vector<int> ids;
      collect_const_ids(e, g, {}, ids);
      std::set<int> comps;
      for (int c : ids) comps.insert(g.find(c));
      std::vector<int> universe;
      for (size_t c = 0; c < g.consts.size(); ++c) {
        if (static_cast<int>(c) == g.fresh_id) continue;
        if (g.consts[c].sort.kind != SortKind::Element) continue;
        if (comps.count(g.find(static_cast<int>(c))))
          universe.push_back(static_cast<int>(c));
      }
      universe.push_back(g.fresh_id);
      std::map<std::string, int> env;
      return gb.build(e, env, universe);
    }
  }
}

// Equality axioms (transitivity) and predicate congruence, per component.
void add_equality_axioms(Ground& g) {
  // Collect constants by (component, sort), excluding fresh.
  std::map<std::pair<int, Sort>, std::vector<int>> pools;
  for (size_t c = 0; c < g.consts.size(); ++c) {
    if (static_cast<int>(c) == g.fresh_id) continue;
    if (g.consts[c].sort.kind == SortKind::Boolean) continue;
    pools[{g.find(static_cast<int>(c)), g.consts[c].sort}].push_back(static_cast<int>(c));
  }
  auto eq_lit = [&](int a, int b) { return g.atom_lit({Atom::Kind::Eq, {}, {a, b}}); };

  for (auto& [key, cs] : pools) {
    // Transitivity over every triple (reflexivity/symmetry are structural).
    for (size_t i = 0; i < cs.size(); ++i)
      for (size_t j = i + 1; j < cs.size(); ++j)
        for (size_t k = j + 1; k < cs.size(); ++k) {
          int ab = eq_lit(cs[i], cs[j]), bc = eq_lit(cs[j], cs[k]), ac = eq_lit(cs[i], cs[k]);
          g.clauses.push_back({-ab, -bc, ac});
          g.clauses.push_back({-ab, -ac, bc});
          g.clauses.push_back({-ac, -bc, ab});
        }
  }

  // Congruence: enumerate all predicate tuples within each component and link
  // tuples differing in one position through the equality atom.
  for (auto& [pname, shape] : g.pred_shapes) {
    // Components that have constants for every position.
    std::set<int> comps;
    for (auto& [key, cs] : pools) comps.insert(key.first);
    for (int comp : comps) {
      std::vector<std::vector<int>> pos_pool;
      bool ok = true;
      for (auto& s : shape) {
        auto it = pools.find({comp, s});
        if (it == pools.end()) { ok = false; break; }
        pos_pool.push_back(it->second);
      }
      if (!ok) continue;
      std::vector<size_t> idx(shape.size(), 0);
      while (true) {
        std::vector<int> tuple;
        for (size_t i = 0; i < shape.size(); ++i) tuple.push_back(pos_pool[i][idx[i]]);
        int pt = g.atom_lit({Atom::Kind::Pred, pname, tuple});
        for (size_t i = 0; i < shape.size(); ++i) {
          for (int repl : pos_pool[i]) {
            if (repl == tuple[i]) continue;
            std::vector<int> t2 = tuple;
            t2[i] = repl;
            int pt2 = g.atom_lit({Atom::Kind::Pred, pname, t2});
            int eq = g.atom_lit({Atom::Kind::Eq, {}, {tuple[i], repl}});
            g.clauses.push_back({-eq, -pt, pt2});
          }
        }
        size_t k = idx.size();
        while (k > 0) {
          if (++idx[k - 1] < pos_pool[k - 1].size()) break;
          idx[k - 1] = 0;
          --k;
        }
        if (k == 0) break;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// SAT: DPLL with two-watched literals and chronological backtracking.

struct Dpll {
  int nvars;
  std::vector<std::vector<int>> clauses;
  std::vector<int8_t> value;  // 0 unknown, 1 true, -1 false
  std::vector<std::vector<int>> watchers;  // literal index -> clause ids
  std::vector<int> trail;
  std::vector<size_t> decision_marks;
  std::vector<int8_t> decision_flipped;
  Clock::time_point deadline;
  bool timed_out = false;

  static size_t lidx(int lit) {
    int v = std::abs(lit) - 1;
    return static_cast<size_t>(v) * 2 + (lit > 0 ? 0 : 1);
  }
  int8_t lit_value(int lit) const {
    int8_t v = value[std::abs(lit) - 1];
    return lit > 0 ? v : static_cast<int8_t>(-v);
  }

  // returns false on conflict
  bool assign(int lit) {
    int8_t cur = lit_value(lit);
    if (cur == 1) return true;
    if (cur == -1) return false;
    value[std::abs(lit) - 1] = lit > 0 ? 1 : -1;
    trail.push_back(lit);
    return true;
  }

  bool propagate(size_t& qhead) {
    while (qhead < trail.size()) {
      int lit = trail[qhead++];
      int neg = -lit;
      auto& ws = watchers[lidx(neg)];
      size_t out = 0;
      bool conflict = false;
      for (size_t wi = 0; wi < ws.size(); ++wi) {
        int ci = ws[wi];
        auto& cl = clauses[ci];
        if (conflict) { ws[out++] = ci; continue; }
        // Ensure neg is at position 1.
        if (cl[0] == neg) std::swap(cl[0], cl[1]);
        if (lit_value(cl[0]) == 1) { ws[out++] = ci; continue; }
        bool moved = false;
        for (size_t k = 2; k < cl.size(); ++k) {
          if (lit_value(cl[k]) != -1) {
            std::swap(cl[1], cl[k]);
            watchers[lidx(cl[1])].push_back(ci);
            moved = true;
            break;
          }
        }
        if (moved) continue;  // watcher moved away
        ws[out++] = ci;
        if (!assign(cl[0])) conflict = true;
      }
      ws.resize(out);
      if (conflict) return false;
    }
    return true;
  }

  bool backtrack(size_t& qhead) {
    while (!decision_marks.empty()) {
      size_t mark = decision_marks.back();
      bool flipped = decision_flipped.back();
      int dec = trail[mark];
      while (trail.size() > mark) {
        value[std::abs(trail.back()) - 1] = 0;
        trail.pop_back();
      }
      qhead = trail.size();
      decision_marks.pop_back();
      decision_flipped.pop_back();
      if (!flipped) {
        decision_marks.push_back(trail.size());
        decision_flipped.push_back(1);
        assign(-dec);
        return true;
      }
    }
    return false;
  }

  SatStatus solve() {
    value.assign(nvars, 0);
    watchers.assign(static_cast<size_t>(nvars) * 2, {});
    size_t qhead = 0;
    // Unit clauses and watcher setup.
    for (size_t ci = 0; ci < clauses.size(); ++ci) {
      auto& cl = clauses[ci];
      if (cl.empty()) return SatStatus::Unsat;
      if (cl.size() == 1) {
        if (!assign(cl[0])) return SatStatus::Unsat;
      } else {
        watchers[lidx(cl[0])].push_back(static_cast<int>(ci));
        watchers[lidx(cl[1])].push_back(static_cast<int>(ci));
      }
    }
    long steps = 0;
    int next = 0;
    while (true) {
      if (!propagate(qhead)) {
        if (++steps % 256 == 0 && Clock::now() > deadline) {
          timed_out = true;
          return SatStatus::Unknown;
        }
        if (!backtrack(qhead)) return SatStatus::Unsat;
        next = 0;
        continue;
      }
      // Pick the first unassigned variable; try false first so models lean
      // toward closed-world minimality.
      while (next < nvars && value[next] != 0) ++next;
      if (next == nvars) return SatStatus::Sat;
      decision_marks.push_back(trail.size());
      decision_flipped.push_back(0);
      assign(-(next + 1));
      if (++steps % 256 == 0 && Clock::now() > deadline) {
        timed_out = true;
        return SatStatus::Unknown;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Model decoding

Sample decode_model(const Ground& g, const std::vector<int8_t>& value) {
  auto atom_true = [&](const Atom& a) {
    auto it = g.atom_vars.find(a);
    return it != g.atom_vars.end() && value[it->second] == 1;
  };
  // Union-find over equality atoms interpreted true.
  std::vector<int> cls(g.consts.size());
  std::iota(cls.begin(), cls.end(), 0);
  std::function<int(int)> find = [&](int a) { return cls[a] == a ? a : cls[a] = find(cls[a]); };
  for (auto& [a, v] : g.atom_vars) {
    if (a.kind == Atom::Kind::Eq && value[v] == 1)
      cls[find(a.args[0])] = find(a.args[1]);
  }
  // Deterministic value per class, in constant-creation order.
  std::map<int, SampleValue> class_val;
  int next_elem = 0, next_cont = 0;
  for (size_t c = 0; c < g.consts.size(); ++c) {
    if (static_cast<int>(c) == g.fresh_id) continue;
    if (g.consts[c].sort.kind == SortKind::Boolean) continue;
    int r = find(static_cast<int>(c));
    if (class_val.count(r)) continue;
    if (g.consts[c].sort.kind == SortKind::Element)
      class_val[r] = SampleValue::elem(next_elem++);
    else
      class_val[r] = SampleValue::container(next_cont++);
  }
  Sample s;
  for (size_t c = 0; c < g.consts.size(); ++c) {
    if (static_cast<int>(c) == g.fresh_id) continue;
    const Var& v = g.consts[c];
    if (v.sort.kind == SortKind::Boolean) {
      Atom a{Atom::Kind::Bool, {}, {static_cast<int>(c)}};
      s.assignment[v.name] = SampleValue::boolean(atom_true(a));
    } else {
      s.assignment[v.name] = class_val.at(find(static_cast<int>(c)));
    }
  }
  for (auto& [a, var] : g.atom_vars) {
    if (a.kind != Atom::Kind::Pred || value[var] != 1) continue;
    std::vector<SampleValue> tuple;
    for (int c : a.args) tuple.push_back(class_val.at(find(c)));
    s.relations[a.pred].insert(std::move(tuple));
  }
  // Predicates mentioned but with no true tuple still get an (empty) entry.
  for (auto& [p, _] : g.pred_shapes) s.relations.emplace(p, std::set<std::vector<SampleValue>>{});
  return s;
}

// ---------------------------------------------------------------------------
// External cross-check (optional)

void cross_check(const std::string& bin, const ExprPtr& sentence, SatStatus internal) {
  if (internal == SatStatus::Unknown) return;
  std::string path = "/tmp/abd_query_XXXXXX";
  std::vector<char> buf(path.begin(), path.end());
  buf.push_back('\0');
  int fd = mkstemp(buf.data());
  if (fd < 0) return;
  {
    std::ofstream out(buf.data());
    out << to_smtlib(sentence);
  }
  std::string cmd = bin + " " + buf.data() + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string line;
  if (p) {
    char c;
    while (fread(&c, 1, 1, p) == 1 && c != '\n') line.push_back(c);
    pclose(p);
  }
  std::remove(buf.data());
  if (line == "sat" && internal == SatStatus::Unsat)
    throw ContractViolation("external solver disagrees: sat vs unsat");
  if (line == "unsat" && internal == SatStatus::Sat)
    throw ContractViolation("external solver disagrees: unsat vs sat");
}

}  // namespace

// ---------------------------------------------------------------------------

SatResult Solver::check_sat(const ExprPtr& sentence) const {
  std::vector<Var> skolems;
  ExprPtr nnf;
  try {
    Nnf n{&skolems};
    std::map<std::string, Var> ren;
    nnf = n.run(sentence, true, false, ren);
  } catch (const Fragment& f) {
    return {SatStatus::Unknown, {}, f.what()};
  }

  Ground g;
  std::set<Var> frees;
  collect_free_vars(nnf, frees);
  for (auto& v : frees) g.const_id(v);  // deterministic: set order
  // (Skolems are already free in the NNF formula, so they are included.)
  g.fresh_id = g.const_id({"!fresh", Sort::element()});

  group_components(nnf, g);

  GroundBuild gb{g};
  int root = build_grounded(nnf, g, gb);
  if (root == LIT_FALSE) return {SatStatus::Unsat, {}, {}};
  if (root != LIT_TRUE) g.clauses.push_back({root});
  add_equality_axioms(g);

  Dpll d;
  d.nvars = g.nvars;
  d.clauses = g.clauses;
  d.deadline = Clock::now() + std::chrono::milliseconds(opts_.timeout_ms);
  SatStatus st = d.solve();
  if (!opts_.solver_bin.empty()) cross_check(opts_.solver_bin, sentence, st);
  if (st == SatStatus::Unknown) return {st, {}, "timeout"};
  if (st == SatStatus::Unsat) return {st, {}, {}};
  // pad in case root == LIT_TRUE left vars untouched
  std::vector<int8_t> vals = d.value;
  vals.resize(g.nvars, -1);
  return {SatStatus::Sat, decode_model(g, vals), {}};
}

VerifyResult Solver::verify(const ExprPtr& sentence) const {
  SatResult r = check_sat(Expr::mk_not(sentence));
  switch (r.status) {
    case SatStatus::Unsat:
      return {VerifyStatus::OK, {}, {}};
    case SatStatus::Unknown:
      return {VerifyStatus::Unknown, {}, r.reason};
    case SatStatus::Sat: {
      if (opts_.handshake) {
        ++g_handshake_checks;
        if (eval_under_sample(sentence, r.model)) {
          ++g_handshake_violations;
          throw ContractViolation("soundness handshake failed: model does not falsify query");
        }
      }
      return {VerifyStatus::Sat, r.model, {}};
    }
  }
  return {VerifyStatus::Unknown, {}, "unreachable"};
}

bool Solver::check_nontrivial(const VerificationQuery& q, const VerificationInterface& delta,
                              const SigTable& sigs) const {
  SatResult r = check_sat(substitute(q, delta, sigs));
  if (r.status == SatStatus::Unknown) throw SolverUnknown(r.reason);
  return r.status == SatStatus::Sat;
}

bool Solver::entails(const Formula& phi1, const Formula& phi2, const FeatureSet& s,
                     const FuncSig& sig) const {
  PlaceholderApp app{sig.name, sig.param_vars(), sig.ret_var(), nullptr};
  ExprPtr a = instantiate(phi1, s, sig, app, "!1");
  ExprPtr b = instantiate(phi2, s, sig, app, "!2");
  VerifyResult r = verify(Expr::mk_implies(a, b));
  if (r.status == VerifyStatus::Unknown) throw SolverUnknown(r.reason);
  return r.status == VerifyStatus::OK;
}

long Solver::handshake_checks() { return g_handshake_checks.load(); }
long Solver::handshake_violations() { return g_handshake_violations.load(); }

// ---------------------------------------------------------------------------
// SMT-LIB v2 emission

namespace {

void emit_expr(std::ostream& os, const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::True: os << "true"; return;
    case Expr::Kind::False: os << "false"; return;
    case Expr::Kind::Pred: {
      os << "(" << e->pred;
      for (auto& v : e->vars) os << " " << v.name;
      os << ")";
      return;
    }
    case Expr::Kind::Eq:
      os << "(= " << e->vars[0].name << " " << e->vars[1].name << ")";
      return;
    case Expr::Kind::BoolVar:
      os << e->vars[0].name;
      return;
    case Expr::Kind::Not:
      os << "(not ";
      emit_expr(os, e->kids[0]);
      os << ")";
      return;
    case Expr::Kind::And:
    case Expr::Kind::Or: {
      os << (e->kind == Expr::Kind::And ? "(and" : "(or");
      for (auto& k : e->kids) {
        os << " ";
        emit_expr(os, k);
      }
      os << ")";
      return;
    }
    case Expr::Kind::Implies:
      os << "(=> ";
      emit_expr(os, e->kids[0]);
      os << " ";
      emit_expr(os, e->kids[1]);
      os << ")";
      return;
    case Expr::Kind::Iff:
      os << "(= ";
      emit_expr(os, e->kids[0]);
      os << " ";
      emit_expr(os, e->kids[1]);
      os << ")";
      return;
    case Expr::Kind::Forall:
    case Expr::Kind::Exists: {
      os << (e->kind == Expr::Kind::Forall ? "(forall (" : "(exists (");
      for (size_t i = 0; i < e->vars.size(); ++i) {
        if (i) os << " ";
        os << "(" << e->vars[i].name << " Elem)";
      }
      os << ") ";
      emit_expr(os, e->kids[0]);
      os << ")";
      return;
    }
  }
}

std::string sort_name(const Sort& s) {
  switch (s.kind) {
    case SortKind::Element: return "Elem";
    case SortKind::Boolean: return "Bool";
    case SortKind::Container: return "Cont_" + s.datatype;
  }
  return "Elem";
}

struct PredSig {
  std::vector<Sort> shape;
};

void collect_preds(const ExprPtr& e, std::map<std::string, std::vector<Sort>>& preds,
                   std::map<std::string, Sort>& qsorts) {
  if (e->kind == Expr::Kind::Pred) {
    std::vector<Sort> shape;
    for (auto& v : e->vars) {
      auto it = qsorts.find(v.name);
      shape.push_back(it != qsorts.end() ? it->second : v.sort);
    }
    preds.emplace(e->pred, shape);
  }
  if (e->kind == Expr::Kind::Forall || e->kind == Expr::Kind::Exists)
    for (auto& b : e->vars) qsorts[b.name] = b.sort;
  for (auto& k : e->kids) collect_preds(k, preds, qsorts);
}

}  // namespace

std::string to_smtlib(const ExprPtr& sentence) {
  std::ostringstream os;
  os << "(set-logic UF)\n(set-option :produce-models true)\n";
  std::set<Var> frees;
  collect_free_vars(sentence, frees);
  std::set<std::string> sorts = {"Elem"};
  for (auto& v : frees) sorts.insert(sort_name(v.sort));
  for (auto& s : sorts)
    if (s != "Bool") os << "(declare-sort " << s << " 0)\n";
  std::map<std::string, std::vector<Sort>> preds;
  std::map<std::string, Sort> qsorts;
  collect_preds(sentence, preds, qsorts);
  for (auto& [p, shape] : preds) {
    os << "(declare-fun " << p << " (";
    for (size_t i = 0; i < shape.size(); ++i) {
      if (i) os << " ";
      os << sort_name(shape[i]);
    }
    os << ") Bool)\n";
  }
  for (auto& v : frees)
    os << "(declare-const " << v.name << " " << sort_name(v.sort) << ")\n";
  // The designated fresh element: outside every container, distinct from
  // every named element (mirrors the internal engine's intended semantics).
  os << "(declare-const elem!fresh Elem)\n";
  for (auto& v : frees)
    if (v.sort.kind == SortKind::Element)
      os << "(assert (not (= elem!fresh " << v.name << ")))\n";
  for (auto& [p, shape] : preds) {
    // forall over container positions of datatypes + other elems: assert the
    // predicate false whenever the fresh element fills an element slot.
    std::ostringstream binders, apply;
    int bi = 0;
    bool any_elem = false;
    apply << "(" << p;
    for (auto& s : shape) {
      if (s.kind == SortKind::Element) {
        any_elem = true;
        apply << " elem!fresh";
      } else {
        std::string b = "b" + std::to_string(bi++);
        binders << "(" << b << " " << sort_name(s) << ") ";
        apply << " " << b;
      }
    }
    apply << ")";
    if (!any_elem) continue;
    if (bi == 0)
      os << "(assert (not " << apply.str() << "))\n";
    else
      os << "(assert (forall (" << binders.str() << ") (not " << apply.str() << ")))\n";
  }
  os << "(assert ";
  emit_expr(os, sentence);
  os << ")\n(check-sat)\n";
  return os.str();
}

}  // namespace abd
