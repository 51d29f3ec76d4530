#include "abd/infer.hpp"

#include <cstdlib>
#include <iostream>
#include <algorithm>
#include <cmath>

namespace abd {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<Var> default_qvars(size_t k) {
  std::vector<Var> u;
  for (size_t i = 0; i < k; ++i) u.push_back({"u" + std::to_string(i), Sort::element()});
  return u;
}

Engine::Engine(SpecConfig cfg, SolverOptions sopts)
    : cfg_(std::move(cfg)), solver_(sopts) {}

const SigTable& Engine::sigs_for(const std::vector<Var>& u) {
  auto it = sig_cache_.find(u.size());
  if (it != sig_cache_.end()) return it->second;
  SigTable t;
  for (auto& f : cfg_.F) {
    t.funcs[f.name] = f;
    t.feature_sets[f.name] = build_feature_set(cfg_.P, f, u);
  }
  return sig_cache_.emplace(u.size(), std::move(t)).first->second;
}

VerificationQuery Engine::rename_query(const VerificationQuery& q,
                                       const std::string& suffix) const {
  std::map<std::string, Var> ren;
  auto touch = [&](const Var& v) {
    if (!ren.count(v.name)) ren[v.name] = {v.name + suffix, v.sort};
  };
  for (auto& app : q.sigma) {
    for (auto& a : app.args) touch(a);
    touch(app.result);
    if (app.fixed_spec) {
      std::set<Var> fs;
      collect_free_vars(app.fixed_spec, fs);
      for (auto& v : fs) touch(v);
    }
  }
  for (auto& c : q.sigma_eqs) {
    touch(c.lhs);
    if (c.rhs) touch(*c.rhs);
  }
  std::set<Var> fs;
  collect_free_vars(q.phi, fs);
  for (auto& v : fs) touch(v);

  VerificationQuery out;
  out.path_id = q.path_id + suffix;
  for (auto& app : q.sigma) {
    PlaceholderApp a2;
    a2.function = app.function;
    for (auto& a : app.args) a2.args.push_back(ren.at(a.name));
    a2.result = ren.at(app.result.name);
    if (app.fixed_spec) a2.fixed_spec = substitute_vars(app.fixed_spec, ren);
    out.sigma.push_back(std::move(a2));
  }
  for (auto& c : q.sigma_eqs) {
    VarConstraint c2;
    c2.lhs = ren.at(c.lhs.name);
    if (c.rhs) c2.rhs = ren.at(c.rhs->name);
    c2.rhs_const = c.rhs_const;
    out.sigma_eqs.push_back(std::move(c2));
  }
  out.phi = substitute_vars(q.phi, ren);
  return out;
}

void Engine::ensure_assigned(Sample& s, const std::vector<Var>& vars) const {
  int next_elem = 0, next_cont = 0;
  for (auto& [_, v] : s.assignment) {
    if (v.kind == SampleValue::Kind::Elem) next_elem = std::max(next_elem, v.num + 1);
    if (v.kind == SampleValue::Kind::Container) next_cont = std::max(next_cont, v.num + 1);
  }
  for (auto& [_, tuples] : s.relations)
    for (auto& t : tuples)
      for (auto& v : t) {
        if (v.kind == SampleValue::Kind::Elem) next_elem = std::max(next_elem, v.num + 1);
        if (v.kind == SampleValue::Kind::Container) next_cont = std::max(next_cont, v.num + 1);
      }
  for (auto& v : vars) {
    if (s.assignment.count(v.name)) continue;
    // Unconstrained in the model: any fresh interpretation extends it.
    switch (v.sort.kind) {
      case SortKind::Element: s.assignment[v.name] = SampleValue::elem(next_elem++); break;
      case SortKind::Container: s.assignment[v.name] = SampleValue::container(next_cont++); break;
      case SortKind::Boolean: s.assignment[v.name] = SampleValue::boolean(false); break;
    }
  }
}

// ---------------------------------------------------------------------------
// Phase 1: SpecInfer

SpecInferResult Engine::spec_infer(const std::vector<Var>& u, Metrics& m) {
  auto t0 = Clock::now();
  const SigTable& sigs = sigs_for(u);

  std::map<std::string, std::set<FeatureVector>> pi, omega;
  VerificationInterface delta;
  for (auto& f : cfg_.F) delta.map.emplace(f.name, Formula::top(u));

  long bound = 8;
  for (auto& f : cfg_.F)
    bound += 1L << std::min<size_t>(sigs.fset(f.name).size(), 20);

  GenConfig gc = cfg_.gen;
  gc.seed = cfg_.gen.seed + u.size() * 1000003;
  Gen gen(gc);

  auto relearn = [&](const std::string& f) {
    delta.map[f] = learn({pi[f], omega[f], sigs.fset(f)});
  };

  auto finish = [&](SpecInferResult r) {
    m.time_consistent_s += seconds_since(t0);
    return r;
  };

  for (long outer = 0; outer <= bound; ++outer) {
    // Inner loop: reconcile with observed executions.
    for (long inner = 0; inner <= bound; ++inner) {
      auto obs = find_inconsistency(delta, sigs, cfg_.gammaF, cfg_.gammaP, cfg_.queries,
                                    cfg_.client_params, cfg_.self, gen);
      if (!obs) break;
      for (auto& [f, fvs] : obs->vectors) {
        for (auto& fv : fvs) {
          if (pi[f].insert(fv).second) ++m.gathered_vectors;
          omega[f].erase(fv);
        }
        relearn(f);
      }
    }

    // Outer: verify every query.
    bool all_ok = true;
    bool any_new = false;
    Sample last_neg;
    for (auto& q : cfg_.queries) {
      ExprPtr vc = Expr::mk_implies(substitute(q, delta, sigs), q.phi);
      VerifyResult r = solver_.verify(vc);
      if (r.status == VerifyStatus::Unknown)
        throw SolverUnknown("interface search: " + r.reason);
      if (r.status == VerifyStatus::OK) continue;
      all_ok = false;
      ++m.cex_count;
      Sample s = r.model;
      s.label = SampleLabel::Negative;
      last_neg = s;
      for (auto& app : q.sigma) {
        if (app.fixed_spec || app.function == "self") continue;
        std::vector<Var> needed = app.args;
        needed.push_back(app.result);
        ensure_assigned(s, needed);
        auto fvs = extract_feature_vectors(sigs.fset(app.function), s, app);
        for (auto& fv : fvs) {
          if (pi[app.function].count(fv)) continue;  // filtered against pi
          if (omega[app.function].insert(fv).second) any_new = true;
        }
      }
    }

    if (all_ok) {
      for (auto& q : cfg_.queries)
        if (!solver_.check_nontrivial(q, delta, sigs))
          return finish({SpecInferResult::Kind::FailNone, {}, {}});
      return finish({SpecInferResult::Kind::Delta, delta, {}});
    }
    if (!any_new) return finish({SpecInferResult::Kind::FailSample, {}, last_neg});
    for (auto& f : cfg_.F) relearn(f.name);
  }
  throw ContractViolation("interface search exceeded its progress bound");
}

// ---------------------------------------------------------------------------
// Phase 2: Weaken

Formula Engine::weaken(const VerificationInterface& delta, const std::string& f,
                       const std::vector<Var>& u, Clock::time_point deadline,
                       bool& maximal, Metrics& m) {
  auto t0 = Clock::now();
  const SigTable& sigs = sigs_for(u);
  const FeatureSet& S = sigs.fset(f);

  const std::vector<VerificationQuery>& qs = cfg_.queries;
  std::vector<std::vector<PlaceholderApp>> f_apps(qs.size());
  for (size_t i = 0; i < qs.size(); ++i)
    for (auto& app : qs[i].sigma)
      if (!app.fixed_spec && app.function == f) f_apps[i].push_back(app);

  auto with_f = [&](const Formula& phi) {
    VerificationInterface d = delta;
    d.map[f] = phi;
    return d;
  };
  // The safety condition is a conjunction of per-path sentences over disjoint
  // constants, so check one path at a time; the first falsifying model (with
  // its path index) doubles as the counterexample.
  struct SafetyHit {
    Sample model;
    size_t qi = 0;
  };
  auto safety_check = [&](const Formula& cand) -> std::optional<SafetyHit> {
    VerificationInterface d = with_f(cand);
    for (size_t i = 0; i < qs.size(); ++i) {
      // Paths with no occurrence of f are unaffected by the candidate and
      // already verified safe under `delta`.
      if (f_apps[i].empty()) continue;
      VerifyResult r =
          solver_.verify(Expr::mk_implies(substitute(qs[i], d, sigs), qs[i].phi));
      if (r.status == VerifyStatus::Unknown) throw SolverUnknown("weakening: " + r.reason);
      if (r.status == VerifyStatus::Sat) return SafetyHit{r.model, i};
    }
    return std::nullopt;
  };

  const Formula& base = delta.at(f);
  std::set<FeatureVector> pi, omega;
  Formula w_exact = Formula::bottom(u);  // exact, verified-safe disjunction of pi
  Formula w = w_exact;                   // current working hypothesis (may be learned)

  auto current = [&]() { return formula_or(base, w_exact); };
  auto out_of_time = [&]() { return Clock::now() > deadline; };
  auto finish = [&](const Formula& phi) {
    m.time_weaken_s += seconds_since(t0);
    return S.size() <= 12 ? normalize(phi, S) : phi;
  };

  // Sort one extracted vector into pi or omega; returns true when new.
  auto sort_vector = [&](const FeatureVector& fv) {
    if (pi.count(fv) || omega.count(fv)) return false;
    Formula cand = formula_or(current(), unitary_classifier(fv, S));
    if (!safety_check(cand)) {
      pi.insert(fv);
      w_exact = formula_or(w_exact, unitary_classifier(fv, S));
    } else {
      omega.insert(fv);  // stays negative permanently
    }
    return true;
  };

  auto update = [&](const SafetyHit& hit) {
    bool progress = false;
    for (auto& app : f_apps[hit.qi]) {
      Sample s = hit.model;
      std::vector<Var> needed = app.args;
      needed.push_back(app.result);
      ensure_assigned(s, needed);
      for (auto& fv : extract_feature_vectors(S, s, app)) progress |= sort_vector(fv);
    }
    return progress;
  };

  try {
    while (true) {
      if (out_of_time()) {
        maximal = false;
        return finish(current());
      }
      ++m.weakening_iterations;
      Formula guess = formula_or(formula_or(base, w), unitary_classifier_any(omega, S));
      auto hit = safety_check(guess);
      if (!hit) break;

      update(*hit);
      // Generalize, then restore safety.
      w = learn({pi, omega, S});
      while (true) {
        if (out_of_time()) {
          maximal = false;
          return finish(current());
        }
        auto shit = safety_check(formula_or(base, w));
        if (!shit) {
          w_exact = w;  // verified safe as a whole
          break;
        }
        if (!update(*shit)) {
          w = w_exact;  // generalization unsafe and no new data: fall back
          break;
        }
        w = learn({pi, omega, S});
      }
    }

    // Exhaustive final pass on small feature sets: admit every remaining
    // vector whose admission is safe, so no weakening vector survives.
    if (S.size() <= 9) {
      size_t n = S.size();
      for (uint64_t msk = 0; msk < (uint64_t{1} << n); ++msk) {
        if (out_of_time()) {
          maximal = false;
          return finish(current());
        }
        FeatureVector fv(n);
        for (size_t i = 0; i < n; ++i) fv[i] = (msk >> i) & 1;
        if (classify(current(), fv)) continue;
        Formula cand = formula_or(current(), unitary_classifier(fv, S));
        if (!safety_check(cand)) w_exact = formula_or(w_exact, unitary_classifier(fv, S));
      }
    }
  } catch (const SolverUnknown& e) {
    if (std::getenv("ABD_TRACE")) std::cerr << "[weaken " << f << "] unknown: " << e.what() << "\n";
    maximal = false;
    return finish(current());
  }
  return finish(current());
}

// ---------------------------------------------------------------------------
// Concrete counterexample extraction

namespace {

void enum_lists(int max_size, const std::vector<int>& elems, std::vector<Value>& out) {
  out.push_back(Value::list({}));
  std::vector<std::vector<Value>> prev = {{}};
  for (int n = 1; n <= max_size; ++n) {
    std::vector<std::vector<Value>> cur;
    for (auto& base : prev)
      for (int e : elems) {
        auto l = base;
        l.push_back(Value::elem(e));
        cur.push_back(l);
        out.push_back(Value::list(l));
      }
    prev = std::move(cur);
  }
}

void enum_trees(int max_nodes, const std::vector<int>& elems, std::vector<Value>& out) {
  std::vector<std::vector<Value>> by_size(max_nodes + 1);
  by_size[0] = {Value::leaf()};
  for (int n = 1; n <= max_nodes; ++n)
    for (int e : elems)
      for (int l = 0; l < n; ++l)
        for (auto& lt : by_size[l])
          for (auto& rt : by_size[n - 1 - l])
            by_size[n].push_back(Value::tree(Value::elem(e), lt, rt));
  for (auto& bucket : by_size)
    for (auto& t : bucket) out.push_back(t);
}

}  // namespace

std::optional<bool> Engine::run_assertion(const std::map<std::string, Value>& inputs) {
  if (client_ir.body.empty()) return std::nullopt;
  std::vector<Value> args;
  for (auto& p : cfg_.client_params) args.push_back(inputs.at(p.name));
  Value result;
  try {
    result = exec_client(client_ir, cfg_.gammaF, args);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  std::map<std::string, Value> env = inputs;
  env["nu"] = result;
  Sample s = make_sample(env, cfg_.gammaP);
  for (auto& q : cfg_.queries)
    if (!eval_under_sample(q.phi, s)) return false;
  return true;
}

std::optional<std::map<std::string, Value>> Engine::extract_cex(const Sample&) {
  // Smallest-first exhaustive search, then seeded random draws.  The negative
  // sample guides nothing here beyond having triggered the search: the
  // binding condition is concrete falsification of the assertion.
  if (client_ir.body.empty()) return std::nullopt;
  std::vector<int> small_elems;
  for (int e = cfg_.gen.elem_lo; e <= std::min(cfg_.gen.elem_lo + 2, cfg_.gen.elem_hi); ++e)
    small_elems.push_back(e);

  std::vector<std::vector<Value>> pools;
  long total = 1;
  for (auto& p : cfg_.client_params) {
    std::vector<Value> pool;
    switch (p.sort.kind) {
      case SortKind::Element:
        for (int e : small_elems) pool.push_back(Value::elem(e));
        break;
      case SortKind::Boolean:
        pool.push_back(Value::boolean(false));
        pool.push_back(Value::boolean(true));
        break;
      case SortKind::Container:
        if (p.sort.datatype == "tree")
          enum_trees(2, small_elems, pool);
        else
          enum_lists(3, small_elems, pool);
        break;
    }
    total *= static_cast<long>(pool.size());
    pools.push_back(std::move(pool));
  }
  if (total <= 200000 && !pools.empty()) {
    std::vector<size_t> idx(pools.size(), 0);
    while (true) {
      std::map<std::string, Value> inputs;
      for (size_t i = 0; i < pools.size(); ++i)
        inputs[cfg_.client_params[i].name] = pools[i][idx[i]];
      auto ok = run_assertion(inputs);
      if (ok.has_value() && !*ok) return inputs;
      size_t k = idx.size();
      while (k > 0) {
        if (++idx[k - 1] < pools[k - 1].size()) break;
        idx[k - 1] = 0;
        --k;
      }
      if (k == 0) break;
    }
  }
  GenConfig gc = cfg_.gen;
  gc.seed = cfg_.gen.seed ^ 0x9e3779b97f4a7c15ULL;
  Gen gen(gc);
  for (int i = 0; i < 2000; ++i) {
    std::map<std::string, Value> inputs;
    for (auto& p : cfg_.client_params) inputs[p.name] = gen.generate(p.sort);
    auto ok = run_assertion(inputs);
    if (ok.has_value() && !*ok) return inputs;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Phase 3: the outer loop

InferenceOutcome Engine::multi_abduce(const InferenceLimits& limits) {
  InferenceOutcome out;
  Metrics& m = out.metrics;
  for (int k = 0; k <= limits.k_max; ++k) {
    std::vector<Var> u = default_qvars(k);
    m.qvar_count = k;
    SpecInferResult r;
    try {
      r = spec_infer(u, m);
    } catch (const SolverUnknown& e) {
      out.kind = InferenceOutcome::Kind::Aborted;
      out.reason = e.what();
      return out;
    }
    switch (r.kind) {
      case SpecInferResult::Kind::FailSample: {
        auto cex = extract_cex(r.fail_sample);
        if (cex) {
          out.kind = InferenceOutcome::Kind::Counterexample;
          out.cex_inputs = *cex;
          return out;
        }
        break;  // spurious: grow the prefix
      }
      case SpecInferResult::Kind::FailNone:
        break;  // vacuous substitution: grow the prefix
      case SpecInferResult::Kind::Delta: {
        VerificationInterface delta = r.delta;
        auto deadline =
            Clock::now() + std::chrono::duration_cast<Clock::duration>(
                               std::chrono::duration<double>(limits.weaken_bound_s));
        bool maximal = true;
        const SigTable& sigs = sigs_for(u);
        int passes = 0;
        while (true) {
          VerificationInterface before = delta;
          for (auto& f : cfg_.F)
            delta.map[f.name] = weaken(delta, f.name, u, deadline, maximal, m);
          ++passes;
          if (!maximal) break;
          if (interface_order(delta, before, sigs) == InterfaceOrder::Equal) break;
          if (passes > 64) {
            maximal = false;
            break;
          }
        }
        out.kind = InferenceOutcome::Kind::Interface;
        out.delta = delta;
        out.maximal = maximal;
        for (auto& f : cfg_.F) {
          const FeatureSet& S = sigs.fset(f.name);
          if (S.size() <= 16)
            m.positive_vectors_per_fn[f.name] =
                static_cast<long>(positive_vectors(delta.at(f.name), S).size());
        }
        return out;
      }
    }
  }
  out.kind = InferenceOutcome::Kind::Aborted;
  out.reason = "quantified-variable bound exhausted";
  return out;
}

Engine make_engine(const ConfigFile& cfg, SolverOptions sopts) {
  SpecConfig sc;
  sc.queries = paths_to_queries(cfg);
  sc.P = cfg.predicates;
  sc.F = cfg.library;
  sc.gammaF = build_library(cfg);
  sc.gammaP = build_predicates(cfg);
  sc.client_params = cfg.client.params;
  sc.gen = cfg.gen;
  Library lib = sc.gammaF;
  ClientIR ir = cfg.client;
  sc.self = [lib, ir](const std::vector<Value>& args) { return exec_client(ir, lib, args); };
  if (sopts.timeout_ms == 10000) sopts.timeout_ms = cfg.limits.timeout_smt_s * 1000;
  Engine e(std::move(sc), sopts);
  e.client_ir = cfg.client;
  return e;
}

bool Engine::consistent_with_executions(const VerificationInterface& delta,
                                        const std::vector<Var>& u, int n, uint64_t seed) {
  const SigTable& sigs = sigs_for(u);
  GenConfig gc = cfg_.gen;
  gc.seed = seed;
  Gen gen(gc);
  std::vector<std::string> fnames;
  for (auto& f : cfg_.F) fnames.push_back(f.name);
  int done = 0;
  size_t qi = 0;
  while (done < n) {
    for (auto& f : fnames) {
      if (done >= n) break;
      const LibraryImpl& impl = cfg_.gammaF.at(f);
      std::vector<Value> args;
      for (auto& srt : impl.params) args.push_back(gen.generate(srt));
      Value result;
      try {
        result = impl.fn(args);
      } catch (const DomainError&) {
        continue;
      }
      ++done;
      std::map<std::string, Value> env;
      for (size_t i = 0; i < args.size(); ++i) env["a" + std::to_string(i)] = args[i];
      env["nu"] = result;
      Sample s = make_sample(env, cfg_.gammaP);
      PlaceholderApp app{f, sigs.sig(f).param_vars(), sigs.sig(f).ret_var(), nullptr};
      for (auto& fv : extract_feature_vectors(sigs.fset(f), s, app))
        if (!classify(delta.at(f), fv)) return false;
    }
    if (!cfg_.queries.empty() && done < n) {
      const VerificationQuery& q = cfg_.queries[qi++ % cfg_.queries.size()];
      std::map<std::string, Value> inputs;
      for (auto& pv : cfg_.client_params) inputs[pv.name] = gen.generate(pv.sort);
      try {
        Sample s = run_client_path(q, inputs, cfg_.gammaF, cfg_.gammaP, cfg_.self);
        ++done;
        for (auto& [f, fvs] : sample_vectors(s, sigs, q.sigma))
          for (auto& fv : fvs)
            if (!classify(delta.at(f), fv)) return false;
      } catch (const DomainError&) {
      }
    }
  }
  return true;
}

}  // namespace abd
