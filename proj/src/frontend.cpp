#include "abd/frontend.hpp"

#include <sstream>

namespace abd {

// ---------------------------------------------------------------------------
// S-expressions

namespace {

struct SExpr {
  bool is_atom = false;
  std::string atom;
  std::vector<SExpr> kids;
  int line = 0, col = 0;

  std::string where() const {
    return "line " + std::to_string(line) + ":" + std::to_string(col);
  }
};

struct Parser {
  const std::string& text;
  size_t pos = 0;
  int line = 1, col = 1;

  void advance() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }
  void skip_ws() {
    while (pos < text.size()) {
      if (text[pos] == ';') {
        while (pos < text.size() && text[pos] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(text[pos]))) {
        advance();
      } else {
        break;
      }
    }
  }
  SExpr parse() {
    skip_ws();
    if (pos >= text.size())
      throw ConfigError("parse error at line " + std::to_string(line) + ": unexpected end");
    SExpr e;
    e.line = line;
    e.col = col;
    if (text[pos] == '(') {
      advance();
      while (true) {
        skip_ws();
        if (pos >= text.size())
          throw ConfigError("parse error at " + e.where() + ": unclosed '('");
        if (text[pos] == ')') {
          advance();
          break;
        }
        e.kids.push_back(parse());
      }
      return e;
    }
    if (text[pos] == ')')
      throw ConfigError("parse error at line " + std::to_string(line) + ":" +
                        std::to_string(col) + ": unexpected ')'");
    e.is_atom = true;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')' && text[pos] != ';') {
      e.atom.push_back(text[pos]);
      advance();
    }
    return e;
  }
};

const std::string& atom(const SExpr& e, const char* what) {
  if (!e.is_atom) throw ConfigError(std::string("expected ") + what + " at " + e.where());
  return e.atom;
}

int to_int(const SExpr& e) {
  try {
    return std::stoi(atom(e, "integer"));
  } catch (const std::exception&) {
    throw ConfigError("expected integer at " + e.where());
  }
}

const SExpr& nth(const SExpr& e, size_t i, const char* what) {
  if (e.is_atom || e.kids.size() <= i)
    throw ConfigError(std::string("malformed ") + what + " at " + e.where());
  return e.kids[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Config interpretation

namespace {

Sort resolve_sort(const std::string& name, const std::vector<std::string>& datatypes,
                  const SExpr& at) {
  if (name == "elem") return Sort::element();
  if (name == "bool") return Sort::boolean();
  for (auto& d : datatypes)
    if (d == name) return Sort::container(d);
  throw ConfigError("unknown sort '" + name + "' at " + at.where());
}

ExprPtr parse_expr(const SExpr& e, std::map<std::string, Sort>& scope,
                   const ConfigFile& cfg) {
  if (e.is_atom) {
    if (e.atom == "true") return Expr::mk_true();
    if (e.atom == "false") return Expr::mk_false();
    auto it = scope.find(e.atom);
    if (it == scope.end())
      throw ConfigError("unknown variable '" + e.atom + "' at " + e.where());
    if (it->second.kind != SortKind::Boolean)
      throw ConfigError("'" + e.atom + "' is not boolean at " + e.where());
    return Expr::mk_boolvar({e.atom, it->second});
  }
  const std::string& head = atom(nth(e, 0, "expression"), "operator");
  auto sub = [&](size_t i) { return parse_expr(nth(e, i, "expression"), scope, cfg); };
  auto rest = [&]() {
    std::vector<ExprPtr> ks;
    for (size_t i = 1; i < e.kids.size(); ++i) ks.push_back(sub(i));
    return ks;
  };
  if (head == "and") return Expr::mk_and(rest());
  if (head == "or") return Expr::mk_or(rest());
  if (head == "not") return Expr::mk_not(sub(1));
  if (head == "implies") return Expr::mk_implies(sub(1), sub(2));
  if (head == "iff") return Expr::mk_iff(sub(1), sub(2));
  if (head == "forall" || head == "exists") {
    std::vector<Var> binders;
    const SExpr& bs = nth(e, 1, "quantifier");
    for (auto& b : bs.kids) binders.push_back({atom(b, "binder"), Sort::element()});
    if (bs.is_atom) binders.push_back({bs.atom, Sort::element()});
    std::map<std::string, Sort> inner = scope;
    for (auto& b : binders) inner[b.name] = b.sort;
    ExprPtr body = parse_expr(nth(e, 2, "quantifier"), inner, cfg);
    return head == "forall" ? Expr::mk_forall(binders, body)
                            : Expr::mk_exists(binders, body);
  }
  if (head == "=") {
    Var a{atom(nth(e, 1, "equality"), "variable"), {}};
    Var b{atom(nth(e, 2, "equality"), "variable"), {}};
    auto ai = scope.find(a.name), bi = scope.find(b.name);
    if (ai == scope.end() || bi == scope.end())
      throw ConfigError("unknown variable in equality at " + e.where());
    a.sort = ai->second;
    b.sort = bi->second;
    if (a.sort != b.sort) throw ConfigError("ill-sorted equality at " + e.where());
    return Expr::mk_eq(a, b);
  }
  // predicate application
  for (auto& p : cfg.predicates) {
    if (p.name != head) continue;
    if (e.kids.size() - 1 != p.signature.size())
      throw ConfigError("arity mismatch for " + head + " at " + e.where());
    std::vector<Var> args;
    for (size_t i = 1; i < e.kids.size(); ++i) {
      std::string n = atom(e.kids[i], "argument");
      auto it = scope.find(n);
      if (it == scope.end())
        throw ConfigError("unknown variable '" + n + "' at " + e.kids[i].where());
      if (it->second != p.signature[i - 1])
        throw ConfigError("ill-sorted argument '" + n + "' at " + e.kids[i].where());
      args.push_back({n, it->second});
    }
    return Expr::mk_pred(head, std::move(args));
  }
  throw ConfigError("unknown operator or predicate '" + head + "' at " + e.where());
}

std::vector<Stmt> parse_stmts(const SExpr& list, const ConfigFile& cfg);

Stmt parse_stmt(const SExpr& e, const ConfigFile& cfg) {
  const std::string& head = atom(nth(e, 0, "statement"), "statement");
  Stmt s;
  if (head == "bind") {
    s.kind = Stmt::Kind::Bind;
    s.var = atom(nth(e, 1, "bind"), "variable");
    const SExpr& call = nth(e, 2, "bind");
    s.func = atom(nth(call, 0, "call"), "function");
    for (size_t i = 1; i < call.kids.size(); ++i)
      s.args.push_back(atom(call.kids[i], "argument"));
    return s;
  }
  if (head == "if") {
    s.kind = Stmt::Kind::If;
    s.cond = atom(nth(e, 1, "if"), "condition");
    s.then_body = parse_stmts(nth(e, 2, "if"), cfg);
    s.else_body = parse_stmts(nth(e, 3, "if"), cfg);
    return s;
  }
  if (head == "return") {
    s.kind = Stmt::Kind::Return;
    s.ret = atom(nth(e, 1, "return"), "variable");
    return s;
  }
  throw ConfigError("unknown statement '" + head + "' at " + e.where());
}

std::vector<Stmt> parse_stmts(const SExpr& list, const ConfigFile& cfg) {
  if (list.is_atom) throw ConfigError("expected statement list at " + list.where());
  std::vector<Stmt> out;
  for (auto& k : list.kids) out.push_back(parse_stmt(k, cfg));
  return out;
}

}  // namespace

ConfigFile parse_config(const std::string& text) {
  Parser p{text};
  p.skip_ws();
  if (p.pos >= text.size()) throw ConfigError("parse error: empty configuration");
  SExpr root = p.parse();
  if (root.is_atom || root.kids.empty() ||
      !(root.kids[0].is_atom && root.kids[0].atom == "config"))
    throw ConfigError("expected (config ...) at " + root.where());

  ConfigFile cfg;
  const SExpr* assert_form = nullptr;
  const SExpr* client_form = nullptr;

  for (size_t i = 1; i < root.kids.size(); ++i) {
    const SExpr& f = root.kids[i];
    const std::string& head = atom(nth(f, 0, "form"), "form");
    if (head == "datatype") {
      cfg.datatypes.push_back(atom(nth(f, 1, "datatype"), "name"));
    } else if (head == "predicate") {
      MethodPredicate mp;
      mp.name = atom(nth(f, 1, "predicate"), "name");
      for (auto& s : nth(f, 2, "predicate").kids)
        mp.signature.push_back(resolve_sort(atom(s, "sort"), cfg.datatypes, s));
      if (mp.signature.size() < 2)
        throw ConfigError("predicate arity must be >= 2 at " + f.where());
      cfg.pred_impl[mp.name] = atom(nth(f, 3, "predicate"), "builtin");
      builtin_predicate(cfg.pred_impl[mp.name]);  // validate
      cfg.predicates.push_back(std::move(mp));
    } else if (head == "library") {
      FuncSig sig;
      sig.name = atom(nth(f, 1, "library"), "name");
      for (auto& s : nth(f, 2, "library").kids)
        sig.params.push_back(resolve_sort(atom(s, "sort"), cfg.datatypes, s));
      sig.ret = resolve_sort(atom(nth(f, 3, "library"), "sort"), cfg.datatypes, f);
      cfg.lib_impl[sig.name] = atom(nth(f, 4, "library"), "builtin");
      builtin_library(cfg.lib_impl[sig.name]);  // validate
      cfg.library.push_back(std::move(sig));
    } else if (head == "client") {
      client_form = &f;
    } else if (head == "assert") {
      assert_form = &f;
    } else if (head == "generator") {
      for (size_t j = 1; j < f.kids.size(); ++j) {
        const SExpr& g = f.kids[j];
        const std::string& k = atom(nth(g, 0, "generator"), "key");
        if (k == "seed") cfg.gen.seed = static_cast<uint64_t>(to_int(nth(g, 1, "seed")));
        else if (k == "max-size") cfg.gen.max_container_size = to_int(nth(g, 1, "max-size"));
        else if (k == "streak") cfg.gen.consistent_streak_to_stop = to_int(nth(g, 1, "streak"));
        else if (k == "elem-domain") {
          cfg.gen.elem_lo = to_int(nth(g, 1, "elem-domain"));
          cfg.gen.elem_hi = to_int(nth(g, 2, "elem-domain"));
        } else throw ConfigError("unknown generator key '" + k + "' at " + g.where());
      }
    } else if (head == "limits") {
      for (size_t j = 1; j < f.kids.size(); ++j) {
        const SExpr& g = f.kids[j];
        const std::string& k = atom(nth(g, 0, "limits"), "key");
        if (k == "max-qvars") cfg.limits.max_qvars = to_int(nth(g, 1, "max-qvars"));
        else if (k == "weaken-bound") cfg.limits.weaken_bound_s = to_int(nth(g, 1, "weaken-bound"));
        else if (k == "timeout-smt") cfg.limits.timeout_smt_s = to_int(nth(g, 1, "timeout-smt"));
        else throw ConfigError("unknown limits key '" + k + "' at " + g.where());
      }
    } else {
      throw ConfigError("unknown form '" + head + "' at " + f.where());
    }
  }

  if (!client_form) throw ConfigError("configuration lacks a client");
  if (!assert_form) throw ConfigError("configuration lacks an assertion");
  if (cfg.gen.elem_lo > cfg.gen.elem_hi) throw ConfigError("empty element domain");

  const SExpr& c = *client_form;
  cfg.client.name = atom(nth(c, 1, "client"), "name");
  for (auto& pv : nth(c, 2, "client").kids) {
    std::string n = atom(nth(pv, 0, "param"), "name");
    Sort s = resolve_sort(atom(nth(pv, 1, "param"), "sort"), cfg.datatypes, pv);
    cfg.client.params.push_back({n, s});
  }
  cfg.client.ret = resolve_sort(atom(nth(c, 3, "client"), "sort"), cfg.datatypes, c);
  for (size_t i = 4; i < c.kids.size(); ++i)
    cfg.client.body.push_back(parse_stmt(c.kids[i], cfg));

  std::map<std::string, Sort> scope;
  for (auto& pv : cfg.client.params) scope[pv.name] = pv.sort;
  scope["nu"] = cfg.client.ret;
  cfg.assertion = parse_expr(nth(*assert_form, 1, "assert"), scope, cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Printing (round-trip)

namespace {

std::string sort_str(const Sort& s) {
  switch (s.kind) {
    case SortKind::Element: return "elem";
    case SortKind::Boolean: return "bool";
    case SortKind::Container: return s.datatype;
  }
  return "elem";
}

void print_sexpr_expr(std::ostream& os, const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::True: os << "true"; return;
    case Expr::Kind::False: os << "false"; return;
    case Expr::Kind::BoolVar: os << e->vars[0].name; return;
    case Expr::Kind::Pred: {
      os << "(" << e->pred;
      for (auto& v : e->vars) os << " " << v.name;
      os << ")";
      return;
    }
    case Expr::Kind::Eq:
      os << "(= " << e->vars[0].name << " " << e->vars[1].name << ")";
      return;
    case Expr::Kind::Not:
      os << "(not ";
      print_sexpr_expr(os, e->kids[0]);
      os << ")";
      return;
    case Expr::Kind::And:
    case Expr::Kind::Or:
      os << (e->kind == Expr::Kind::And ? "(and" : "(or");
      for (auto& k : e->kids) {
        os << " ";
        print_sexpr_expr(os, k);
      }
      os << ")";
      return;
    case Expr::Kind::Implies:
    case Expr::Kind::Iff:
      os << (e->kind == Expr::Kind::Implies ? "(implies " : "(iff ");
      print_sexpr_expr(os, e->kids[0]);
      os << " ";
      print_sexpr_expr(os, e->kids[1]);
      os << ")";
      return;
    case Expr::Kind::Forall:
    case Expr::Kind::Exists:
      os << (e->kind == Expr::Kind::Forall ? "(forall (" : "(exists (");
      for (size_t i = 0; i < e->vars.size(); ++i) {
        if (i) os << " ";
        os << e->vars[i].name;
      }
      os << ") ";
      print_sexpr_expr(os, e->kids[0]);
      os << ")";
      return;
  }
}

void print_stmt(std::ostream& os, const Stmt& s, int indent) {
  std::string ind(indent, ' ');
  switch (s.kind) {
    case Stmt::Kind::Bind:
      os << ind << "(bind " << s.var << " (" << s.func;
      for (auto& a : s.args) os << " " << a;
      os << "))\n";
      return;
    case Stmt::Kind::Return:
      os << ind << "(return " << s.ret << ")\n";
      return;
    case Stmt::Kind::If:
      os << ind << "(if " << s.cond << "\n" << ind << "  (\n";
      for (auto& t : s.then_body) print_stmt(os, t, indent + 3);
      os << ind << "  )\n" << ind << "  (\n";
      for (auto& t : s.else_body) print_stmt(os, t, indent + 3);
      os << ind << "  ))\n";
      return;
  }
}

}  // namespace

std::string print_config(const ConfigFile& cfg) {
  std::ostringstream os;
  os << "(config\n";
  for (auto& d : cfg.datatypes) os << "  (datatype " << d << ")\n";
  for (auto& p : cfg.predicates) {
    os << "  (predicate " << p.name << " (";
    for (size_t i = 0; i < p.signature.size(); ++i) {
      if (i) os << " ";
      os << sort_str(p.signature[i]);
    }
    os << ") " << cfg.pred_impl.at(p.name) << ")\n";
  }
  for (auto& f : cfg.library) {
    os << "  (library " << f.name << " (";
    for (size_t i = 0; i < f.params.size(); ++i) {
      if (i) os << " ";
      os << sort_str(f.params[i]);
    }
    os << ") " << sort_str(f.ret) << " " << cfg.lib_impl.at(f.name) << ")\n";
  }
  os << "  (client " << cfg.client.name << " (";
  for (size_t i = 0; i < cfg.client.params.size(); ++i) {
    if (i) os << " ";
    os << "(" << cfg.client.params[i].name << " " << sort_str(cfg.client.params[i].sort)
       << ")";
  }
  os << ") " << sort_str(cfg.client.ret) << "\n";
  for (auto& s : cfg.client.body) print_stmt(os, s, 4);
  os << "  )\n  (assert ";
  print_sexpr_expr(os, cfg.assertion);
  os << ")\n";
  os << "  (generator (seed " << cfg.gen.seed << ") (max-size " << cfg.gen.max_container_size
     << ") (elem-domain " << cfg.gen.elem_lo << " " << cfg.gen.elem_hi << ") (streak "
     << cfg.gen.consistent_streak_to_stop << "))\n";
  os << "  (limits (max-qvars " << cfg.limits.max_qvars << ") (weaken-bound "
     << cfg.limits.weaken_bound_s << ") (timeout-smt " << cfg.limits.timeout_smt_s << ")))\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Paths -> queries

namespace {

struct PathState {
  std::vector<PlaceholderApp> sigma;
  std::vector<VarConstraint> eqs;
  std::map<std::string, Sort> env;
  std::string id = "p";
};

const FuncSig* find_sig(const ConfigFile& cfg, const std::string& name) {
  for (auto& f : cfg.library)
    if (f.name == name) return &f;
  return nullptr;
}

void walk(const ConfigFile& cfg, const std::vector<Stmt>& stmts, size_t i, PathState st,
          std::vector<VerificationQuery>& out) {
  if (i >= stmts.size())
    throw ConfigError("client path without a return in " + cfg.client.name);
  const Stmt& s = stmts[i];
  switch (s.kind) {
    case Stmt::Kind::Bind: {
      if (st.env.count(s.var))
        throw ConfigError("variable rebound: " + s.var);
      std::vector<Var> args;
      std::vector<Sort> want;
      Sort ret;
      if (s.func == "self") {
        for (auto& p : cfg.client.params) want.push_back(p.sort);
        ret = cfg.client.ret;
      } else {
        const FuncSig* sig = find_sig(cfg, s.func);
        if (!sig) throw ConfigError("unknown function '" + s.func + "'");
        want = sig->params;
        ret = sig->ret;
      }
      if (s.args.size() != want.size())
        throw ConfigError("arity mismatch calling " + s.func);
      for (size_t k = 0; k < s.args.size(); ++k) {
        auto it = st.env.find(s.args[k]);
        if (it == st.env.end())
          throw ConfigError("use of unbound variable '" + s.args[k] + "'");
        if (it->second != want[k])
          throw ConfigError("ill-sorted argument '" + s.args[k] + "' to " + s.func);
        args.push_back({s.args[k], it->second});
      }
      PlaceholderApp app{s.func, std::move(args), {s.var, ret}, nullptr};
      if (s.func == "self") {
        // The recursive call's spec is the provided postcondition instance.
        std::map<std::string, Var> ren;
        for (size_t k = 0; k < cfg.client.params.size(); ++k)
          ren[cfg.client.params[k].name] = app.args[k];
        ren["nu"] = app.result;
        app.fixed_spec = substitute_vars(cfg.assertion, ren);
      }
      st.env[s.var] = ret;
      st.sigma.push_back(std::move(app));
      walk(cfg, stmts, i + 1, std::move(st), out);
      return;
    }
    case Stmt::Kind::If: {
      auto it = st.env.find(s.cond);
      if (it == st.env.end()) throw ConfigError("branch on unbound '" + s.cond + "'");
      if (it->second.kind != SortKind::Boolean)
        throw ConfigError("branch on non-boolean '" + s.cond + "'");
      if (i + 1 != stmts.size())
        throw ConfigError("statements after a branch are unsupported");
      {
        PathState t = st;
        t.id += "T";
        t.eqs.push_back({{s.cond, Sort::boolean()}, std::nullopt, true});
        walk(cfg, s.then_body, 0, std::move(t), out);
      }
      {
        PathState e = std::move(st);
        e.id += "F";
        e.eqs.push_back({{s.cond, Sort::boolean()}, std::nullopt, false});
        walk(cfg, s.else_body, 0, std::move(e), out);
      }
      return;
    }
    case Stmt::Kind::Return: {
      auto it = st.env.find(s.ret);
      if (it == st.env.end()) throw ConfigError("return of unbound '" + s.ret + "'");
      if (it->second != cfg.client.ret)
        throw ConfigError("ill-sorted return of '" + s.ret + "'");
      VerificationQuery q;
      q.path_id = st.id;
      q.sigma = st.sigma;
      q.sigma_eqs = st.eqs;
      q.sigma_eqs.push_back({{"nu", cfg.client.ret}, Var{s.ret, it->second}, std::nullopt});
      q.phi = cfg.assertion;
      out.push_back(std::move(q));
      return;
    }
  }
}

}  // namespace

std::vector<VerificationQuery> paths_to_queries(const ConfigFile& cfg) {
  std::vector<VerificationQuery> out;
  PathState st;
  for (auto& p : cfg.client.params) st.env[p.name] = p.sort;
  walk(cfg, cfg.client.body, 0, std::move(st), out);
  return out;
}

Library build_library(const ConfigFile& cfg) {
  Library lib;
  for (auto& f : cfg.library)
    lib[f.name] = LibraryImpl{f.name, f.params, f.ret, builtin_library(cfg.lib_impl.at(f.name))};
  return lib;
}

Predicates build_predicates(const ConfigFile& cfg) {
  Predicates ps;
  for (auto& p : cfg.predicates)
    ps[p.name] = PredicateImpl{p.name, p.signature, builtin_predicate(cfg.pred_impl.at(p.name))};
  return ps;
}

SigTable build_sigtable(const ConfigFile& cfg, const std::vector<Var>& u) {
  SigTable t;
  for (auto& f : cfg.library) {
    t.funcs[f.name] = f;
    t.feature_sets[f.name] = build_feature_set(cfg.predicates, f, u);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Concrete client interpretation

namespace {

struct Returned {
  Value v;
};

Value exec_stmts(const ClientIR& ir, const Library& lib, const std::vector<Stmt>& stmts,
                 std::map<std::string, Value>& env, int depth);

Value exec_body(const ClientIR& ir, const Library& lib, const std::vector<Value>& args,
                int depth) {
  if (depth <= 0) throw DomainError("recursion depth exhausted");
  if (args.size() != ir.params.size()) throw ContractViolation("client arity mismatch");
  std::map<std::string, Value> env;
  for (size_t i = 0; i < args.size(); ++i) env[ir.params[i].name] = args[i];
  return exec_stmts(ir, lib, ir.body, env, depth);
}

Value exec_stmts(const ClientIR& ir, const Library& lib, const std::vector<Stmt>& stmts,
                 std::map<std::string, Value>& env, int depth) {
  for (auto& s : stmts) {
    switch (s.kind) {
      case Stmt::Kind::Bind: {
        std::vector<Value> args;
        for (auto& a : s.args) args.push_back(env.at(a));
        if (s.func == "self") {
          env[s.var] = exec_body(ir, lib, args, depth - 1);
        } else {
          env[s.var] = lib.at(s.func).fn(args);
        }
        break;
      }
      case Stmt::Kind::If: {
        const Value& c = env.at(s.cond);
        return exec_stmts(ir, lib, c.num ? s.then_body : s.else_body, env, depth);
      }
      case Stmt::Kind::Return:
        return env.at(s.ret);
    }
  }
  throw ContractViolation("client body fell through without return");
}

}  // namespace

Value exec_client(const ClientIR& ir, const Library& lib, const std::vector<Value>& args,
                  int depth_limit) {
  return exec_body(ir, lib, args, depth_limit);
}

}  // namespace abd
