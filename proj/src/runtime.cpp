#include "abd/runtime.hpp"

#include <algorithm>
#include <sstream>

namespace abd {

std::string Value::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Elem: os << num; break;
    case Kind::Bool: os << (num ? "true" : "false"); break;
    case Kind::List: {
      os << "[";
      for (size_t i = 0; i < kids.size(); ++i) {
        if (i) os << ";";
        os << kids[i].str();
      }
      os << "]";
      break;
    }
    case Kind::Leaf: os << "leaf"; break;
    case Kind::Tree:
      os << "(node " << kids[0].str() << " " << kids[1].str() << " " << kids[2].str() << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Built-ins

namespace {

void need(bool ok, const char* what) {
  if (!ok) throw ContractViolation(std::string("ill-sorted argument: ") + what);
}

bool is_list(const Value& v) { return v.kind == Value::Kind::List; }
bool is_tree(const Value& v) {
  return v.kind == Value::Kind::Tree || v.kind == Value::Kind::Leaf;
}
bool is_elem(const Value& v) { return v.kind == Value::Kind::Elem; }

bool tree_mem_impl(const Value& t, int u) {
  if (t.kind == Value::Kind::Leaf) return false;
  return t.kids[0].num == u || tree_mem_impl(t.kids[1], u) || tree_mem_impl(t.kids[2], u);
}

Value tree_insert_impl(int x, const Value& t) {
  if (t.kind == Value::Kind::Leaf)
    return Value::tree(Value::elem(x), Value::leaf(), Value::leaf());
  if (x < t.kids[0].num)
    return Value::tree(t.kids[0], tree_insert_impl(x, t.kids[1]), t.kids[2]);
  if (x > t.kids[0].num)
    return Value::tree(t.kids[0], t.kids[1], tree_insert_impl(x, t.kids[2]));
  return t;
}

}  // namespace

std::function<Value(const std::vector<Value>&)> builtin_library(const std::string& name) {
  if (name == "list_push")
    return [](const std::vector<Value>& a) {
      need(a.size() == 2 && is_elem(a[0]) && is_list(a[1]), "list_push");
      Value r = a[1];
      r.kids.insert(r.kids.begin(), a[0]);
      return r;
    };
  if (name == "list_top")
    return [](const std::vector<Value>& a) {
      need(a.size() == 1 && is_list(a[0]), "list_top");
      if (a[0].kids.empty()) throw DomainError("top of empty list");
      return a[0].kids.front();
    };
  if (name == "list_tail")
    return [](const std::vector<Value>& a) {
      need(a.size() == 1 && is_list(a[0]), "list_tail");
      if (a[0].kids.empty()) throw DomainError("tail of empty list");
      Value r = a[0];
      r.kids.erase(r.kids.begin());
      return r;
    };
  if (name == "list_is_empty")
    return [](const std::vector<Value>& a) {
      need(a.size() == 1 && is_list(a[0]), "list_is_empty");
      return Value::boolean(a[0].kids.empty());
    };
  if (name == "list_snoc")
    return [](const std::vector<Value>& a) {
      need(a.size() == 2 && is_list(a[0]) && is_elem(a[1]), "list_snoc");
      Value r = a[0];
      r.kids.push_back(a[1]);
      return r;
    };
  if (name == "tree_maket")
    return [](const std::vector<Value>& a) {
      need(a.size() == 3 && is_elem(a[0]) && is_tree(a[1]) && is_tree(a[2]), "tree_maket");
      return Value::tree(a[0], a[1], a[2]);
    };
  if (name == "tree_insert")
    return [](const std::vector<Value>& a) {
      need(a.size() == 2 && is_elem(a[0]) && is_tree(a[1]), "tree_insert");
      return tree_insert_impl(a[0].num, a[1]);
    };
  throw ConfigError("unknown builtin library function: " + name);
}

std::function<bool(const std::vector<Value>&)> builtin_predicate(const std::string& name) {
  if (name == "list_hd")
    return [](const std::vector<Value>& a) {
      need(a.size() == 2 && is_list(a[0]) && is_elem(a[1]), "list_hd");
      return !a[0].kids.empty() && a[0].kids.front().num == a[1].num;
    };
  if (name == "list_mem")
    return [](const std::vector<Value>& a) {
      need(a.size() == 2 && is_list(a[0]) && is_elem(a[1]), "list_mem");
      for (auto& e : a[0].kids)
        if (e.num == a[1].num) return true;
      return false;
    };
  if (name == "list_ord")
    // ord(l, u, v): v occurs strictly after some occurrence of u.
    return [](const std::vector<Value>& a) {
      need(a.size() == 3 && is_list(a[0]) && is_elem(a[1]) && is_elem(a[2]), "list_ord");
      bool seen_u = false;
      for (auto& e : a[0].kids) {
        if (seen_u && e.num == a[2].num) return true;
        if (e.num == a[1].num) seen_u = true;
      }
      return false;
    };
  if (name == "tree_mem")
    return [](const std::vector<Value>& a) {
      need(a.size() == 2 && is_tree(a[0]) && is_elem(a[1]), "tree_mem");
      return tree_mem_impl(a[0], a[1].num);
    };
  if (name == "tree_root")
    return [](const std::vector<Value>& a) {
      need(a.size() == 2 && is_tree(a[0]) && is_elem(a[1]), "tree_root");
      return a[0].kind == Value::Kind::Tree && a[0].kids[0].num == a[1].num;
    };
  if (name == "elem_lt")
    return [](const std::vector<Value>& a) {
      need(a.size() == 2 && is_elem(a[0]) && is_elem(a[1]), "elem_lt");
      return a[0].num < a[1].num;
    };
  throw ConfigError("unknown builtin predicate: " + name);
}

bool eval_predicate(const PredicateImpl& p, const std::vector<Value>& args) {
  return p.fn(args);
}

Value eval_library(const LibraryImpl& f, const std::vector<Value>& args) {
  return f.fn(args);
}

// ---------------------------------------------------------------------------
// Generator

int Gen::pick_int(int lo, int hi) {
  return static_cast<int>(eng_() % static_cast<uint64_t>(hi - lo + 1)) + lo;
}

Value Gen::generate(const Sort& sort) {
  switch (sort.kind) {
    case SortKind::Element:
      return Value::elem(pick_int(cfg_.elem_lo, cfg_.elem_hi));
    case SortKind::Boolean:
      return Value::boolean(pick_int(0, 1) == 1);
    case SortKind::Container: {
      if (sort.datatype == "tree") {
        std::function<Value(int)> gen_tree = [&](int budget) -> Value {
          if (budget <= 0 || pick_int(0, 2) == 0) return Value::leaf();
          Value root = Value::elem(pick_int(cfg_.elem_lo, cfg_.elem_hi));
          return Value::tree(root, gen_tree(budget / 2), gen_tree(budget / 2));
        };
        return gen_tree(cfg_.max_container_size);
      }
      int n = pick_int(0, cfg_.max_container_size);
      std::vector<Value> es;
      for (int i = 0; i < n; ++i) es.push_back(Value::elem(pick_int(cfg_.elem_lo, cfg_.elem_hi)));
      return Value::list(std::move(es));
    }
  }
  return Value::elem(0);
}

// ---------------------------------------------------------------------------
// Samples from concrete environments

namespace {

void collect_elems(const Value& v, std::set<int>& out) {
  if (v.kind == Value::Kind::Elem) out.insert(v.num);
  for (auto& k : v.kids) collect_elems(k, out);
}

bool value_matches(const Value& v, const Sort& s) {
  switch (s.kind) {
    case SortKind::Element: return v.kind == Value::Kind::Elem;
    case SortKind::Boolean: return v.kind == Value::Kind::Bool;
    case SortKind::Container:
      if (s.datatype == "tree")
        return v.kind == Value::Kind::Tree || v.kind == Value::Kind::Leaf;
      return v.kind == Value::Kind::List;
  }
  return false;
}

}  // namespace

Sample make_sample(const std::map<std::string, Value>& env, const Predicates& preds) {
  Sample s;
  // Structural container ids.
  std::map<Value, int> cont_ids;
  std::set<int> elems;
  for (auto& [name, v] : env) {
    collect_elems(v, elems);
    switch (v.kind) {
      case Value::Kind::Elem:
        s.assignment[name] = SampleValue::elem(v.num);
        break;
      case Value::Kind::Bool:
        s.assignment[name] = SampleValue::boolean(v.num != 0);
        break;
      default: {
        auto [it, _] = cont_ids.emplace(v, static_cast<int>(cont_ids.size()));
        s.assignment[name] = SampleValue::container(it->second);
        break;
      }
    }
  }
  int fresh = elems.empty() ? 0 : *elems.rbegin() + 1;
  std::vector<int> universe(elems.begin(), elems.end());
  universe.push_back(fresh);

  for (auto& [pname, p] : preds) {
    s.relations[pname];  // ensure closed-world entry exists
    // Enumerate well-sorted tuples; container slots draw from env containers,
    // element slots from the element universe.
    std::vector<std::vector<std::pair<Value, SampleValue>>> pools;
    bool ok = true;
    for (auto& srt : p.sig) {
      std::vector<std::pair<Value, SampleValue>> pool;
      if (srt.kind == SortKind::Element) {
        for (int e : universe) pool.push_back({Value::elem(e), SampleValue::elem(e)});
      } else {
        for (auto& [v, id] : cont_ids)
          if (value_matches(v, srt)) pool.push_back({v, SampleValue::container(id)});
      }
      if (pool.empty()) { ok = false; break; }
      pools.push_back(std::move(pool));
    }
    if (!ok) continue;
    std::vector<size_t> idx(p.sig.size(), 0);
    while (true) {
      std::vector<Value> args;
      std::vector<SampleValue> tuple;
      for (size_t i = 0; i < idx.size(); ++i) {
        args.push_back(pools[i][idx[i]].first);
        tuple.push_back(pools[i][idx[i]].second);
      }
      if (p.fn(args)) s.relations[pname].insert(std::move(tuple));
      size_t k = idx.size();
      while (k > 0) {
        if (++idx[k - 1] < pools[k - 1].size()) break;
        idx[k - 1] = 0;
        --k;
      }
      if (k == 0) break;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Client path execution

Sample run_client_path(const VerificationQuery& q,
                       const std::map<std::string, Value>& inputs,
                       const Library& lib, const Predicates& preds,
                       const SelfFn& self) {
  std::map<std::string, Value> env = inputs;
  for (auto& app : q.sigma) {
    std::vector<Value> args;
    for (auto& a : app.args) {
      auto it = env.find(a.name);
      if (it == env.end())
        throw ContractViolation("unbound variable in path: " + a.name);
      args.push_back(it->second);
    }
    Value result;
    if (app.function == "self" || app.fixed_spec) {
      if (!self) throw ContractViolation("recursive call without executor");
      result = self(args);
    } else {
      auto it = lib.find(app.function);
      if (it == lib.end()) throw ContractViolation("unknown function " + app.function);
      result = it->second.fn(args);
    }
    env[app.result.name] = std::move(result);
  }
  // Path constraints: booleans fixed by branches must match; variable
  // equalities bind (result naming) or must agree.
  for (auto& c : q.sigma_eqs) {
    auto li = env.find(c.lhs.name);
    if (c.rhs_const.has_value()) {
      if (li == env.end()) throw ContractViolation("unbound " + c.lhs.name);
      if ((li->second.num != 0) != *c.rhs_const)
        throw DomainError("inputs drive a different path");
    } else {
      auto ri = env.find(c.rhs->name);
      if (li != env.end() && ri != env.end()) {
        if (!(li->second == ri->second)) throw DomainError("inputs drive a different path");
      } else if (li == env.end() && ri != env.end()) {
        env[c.lhs.name] = ri->second;
      } else if (ri == env.end() && li != env.end()) {
        env[c.rhs->name] = li->second;
      } else {
        throw ContractViolation("unbound equality " + c.lhs.name);
      }
    }
  }
  return make_sample(env, preds);
}

// ---------------------------------------------------------------------------
// Inconsistency search

std::map<std::string, std::set<FeatureVector>> sample_vectors(
    const Sample& s, const SigTable& sigs, const std::vector<PlaceholderApp>& apps) {
  std::map<std::string, std::set<FeatureVector>> out;
  for (auto& app : apps) {
    if (app.fixed_spec || app.function == "self") continue;
    auto fvs = extract_feature_vectors(sigs.fset(app.function), s, app);
    out[app.function].insert(fvs.begin(), fvs.end());
  }
  return out;
}

std::optional<Observation> find_inconsistency(
    const VerificationInterface& delta, const SigTable& sigs, const Library& lib,
    const Predicates& preds, const std::vector<VerificationQuery>& queries,
    const std::vector<Var>& client_params, const SelfFn& self, Gen& gen) {
  const int stop = gen.config().consistent_streak_to_stop;
  const long max_attempts = static_cast<long>(stop) * 50;

  std::vector<std::string> fnames;
  for (auto& [f, _] : sigs.funcs) fnames.push_back(f);
  // One "round" = each function standalone + one client path draw.
  int streak = 0;
  long attempts = 0;
  size_t qi = 0;

  auto check = [&](const Sample& s,
                   const std::map<std::string, std::set<FeatureVector>>& vecs)
      -> std::optional<Observation> {
    bool consistent = true;
    for (auto& [f, fvs] : vecs) {
      const Formula& phi = delta.at(f);
      for (auto& fv : fvs)
        if (!classify(phi, fv)) { consistent = false; break; }
      if (!consistent) break;
    }
    if (consistent) {
      ++streak;
      return std::nullopt;
    }
    Sample labeled = s;
    labeled.label = SampleLabel::Positive;
    return Observation{labeled, vecs};
  };

  while (streak < stop && attempts < max_attempts) {
    for (auto& f : fnames) {
      ++attempts;
      const LibraryImpl& impl = lib.at(f);
      std::vector<Value> args;
      for (auto& srt : impl.params) args.push_back(gen.generate(srt));
      Value result;
      try {
        result = impl.fn(args);
      } catch (const DomainError&) {
        continue;  // discarded draw
      }
      std::map<std::string, Value> env;
      for (size_t i = 0; i < args.size(); ++i) env["a" + std::to_string(i)] = args[i];
      env["nu"] = result;
      Sample s = make_sample(env, preds);
      PlaceholderApp app{f, sigs.sig(f).param_vars(), sigs.sig(f).ret_var(), nullptr};
      std::map<std::string, std::set<FeatureVector>> vecs;
      vecs[f] = extract_feature_vectors(sigs.fset(f), s, app);
      if (auto obs = check(s, vecs)) return obs;
      if (streak >= stop) return std::nullopt;
    }
    if (!queries.empty()) {
      ++attempts;
      const VerificationQuery& q = queries[qi++ % queries.size()];
      std::map<std::string, Value> inputs;
      for (auto& pv : client_params) inputs[pv.name] = gen.generate(pv.sort);
      try {
        Sample s = run_client_path(q, inputs, lib, preds, self);
        auto vecs = sample_vectors(s, sigs, q.sigma);
        if (auto obs = check(s, vecs)) return obs;
      } catch (const DomainError&) {
        // discarded draw
      }
      if (streak >= stop) return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace abd
