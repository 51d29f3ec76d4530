// Command-line entry point: run one configuration, or bench a directory.
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "abd/infer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace abd;

namespace {

struct Flags {
  std::optional<uint64_t> seed;
  std::optional<int> timeout_smt;
  std::optional<double> weaken_bound;
  std::optional<int> max_qvars;
  std::optional<int> samples;
  std::string out;
  std::string format = "text";
  std::string solver_bin;
  int jobs = 1;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string hash_hex(const std::string& s) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << std::hash<std::string>{}(s);
  return os.str();
}

struct RunReport {
  std::string config_path, config_hash;
  uint64_t seed = 0;
  InferenceOutcome outcome;
  std::vector<std::pair<std::string, std::string>> spec_texts;  // fn -> pretty
  json interface_json;
  double wall_s = 0;
};

RunReport run_one(const std::string& path, const Flags& fl) {
  std::string text = read_file(path);
  ConfigFile cfg = parse_config(text);
  if (fl.seed) cfg.gen.seed = *fl.seed;
  if (fl.samples) cfg.gen.consistent_streak_to_stop = *fl.samples;
  if (fl.timeout_smt) cfg.limits.timeout_smt_s = *fl.timeout_smt;
  if (fl.weaken_bound) cfg.limits.weaken_bound_s = static_cast<int>(*fl.weaken_bound);
  if (fl.max_qvars) cfg.limits.max_qvars = *fl.max_qvars;

  SolverOptions sopts;
  sopts.solver_bin = fl.solver_bin;
  if (sopts.solver_bin.empty())
    if (const char* env = std::getenv("ABD_SOLVER_BIN")) sopts.solver_bin = env;

  Engine engine = make_engine(cfg, sopts);
  InferenceLimits lim;
  lim.k_max = cfg.limits.max_qvars;
  lim.weaken_bound_s = cfg.limits.weaken_bound_s;

  RunReport rep;
  rep.config_path = path;
  rep.config_hash = hash_hex(text);
  rep.seed = cfg.gen.seed;
  auto t0 = std::chrono::steady_clock::now();
  rep.outcome = engine.multi_abduce(lim);
  rep.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (rep.outcome.kind == InferenceOutcome::Kind::Interface) {
    const SigTable& sigs = engine.sigs_for(default_qvars(rep.outcome.metrics.qvar_count));
    json specs = json::array();
    for (auto& f : cfg.library) {
      const Formula& phi = rep.outcome.delta.at(f.name);
      const FeatureSet& S = sigs.fset(f.name);
      rep.spec_texts.push_back({f.name, formula_str(phi, S)});
      json jt = json::array();
      for (auto& term : dnf_terms(phi)) {
        json lits = json::array();
        for (auto& [i, v] : term) lits.push_back({{"i", i}, {"v", v}});
        jt.push_back(lits);
      }
      json feats = json::array();
      for (auto& feat : S.features) feats.push_back(feat.str());
      specs.push_back({{"function", f.name}, {"terms", jt}, {"features", feats}});
    }
    rep.interface_json = specs;
  }
  return rep;
}

json metrics_json(const Metrics& m) {
  return {{"qvars", m.qvar_count},
          {"cex", m.cex_count},
          {"gathered", m.gathered_vectors},
          {"positive", m.positive_vectors_per_fn},
          {"weakening_iterations", m.weakening_iterations}};
}

void emit_json_lines(std::ostream& os, const RunReport& r) {
  json cfgline = {{"event", "config"},
                  {"path", r.config_path},
                  {"hash", r.config_hash},
                  {"seed", r.seed}};
  os << cfgline.dump() << "\n";
  json res = {{"event", "result"}};
  switch (r.outcome.kind) {
    case InferenceOutcome::Kind::Interface:
      res["outcome"] = "interface";
      res["maximal"] = r.outcome.maximal;
      res["interface"] = r.interface_json;
      break;
    case InferenceOutcome::Kind::Counterexample: {
      res["outcome"] = "counterexample";
      json inputs;
      for (auto& [k, v] : r.outcome.cex_inputs) inputs[k] = v.str();
      res["inputs"] = inputs;
      break;
    }
    case InferenceOutcome::Kind::Aborted:
      res["outcome"] = "aborted";
      res["reason"] = r.outcome.reason;
      break;
  }
  res["metrics"] = metrics_json(r.outcome.metrics);
  os << res.dump() << "\n";
  json timing = {{"event", "timing"},
                 {"wall_s", r.wall_s},
                 {"time_consistent_s", r.outcome.metrics.time_consistent_s},
                 {"time_weaken_s", r.outcome.metrics.time_weaken_s}};
  os << timing.dump() << "\n";
}

void emit_text(std::ostream& os, const RunReport& r) {
  os << "config:  " << r.config_path << " (hash " << r.config_hash << ", seed " << r.seed
     << ")\n";
  switch (r.outcome.kind) {
    case InferenceOutcome::Kind::Interface:
      os << "outcome: interface" << (r.outcome.maximal ? "" : " (non-maximal: bound hit)")
         << "\n";
      for (auto& [f, s] : r.spec_texts) os << "  " << f << " |-> " << s << "\n";
      break;
    case InferenceOutcome::Kind::Counterexample:
      os << "outcome: counterexample\n";
      for (auto& [k, v] : r.outcome.cex_inputs) os << "  " << k << " = " << v.str() << "\n";
      break;
    case InferenceOutcome::Kind::Aborted:
      os << "outcome: aborted (" << r.outcome.reason << ")\n";
      break;
  }
  const Metrics& m = r.outcome.metrics;
  os << "metrics: |u|=" << m.qvar_count << " cex=" << m.cex_count
     << " gather=" << m.gathered_vectors << " weaken-iters=" << m.weakening_iterations;
  long pos_total = 0;
  for (auto& [_, n] : m.positive_vectors_per_fn) pos_total += n;
  os << " |phi+|=" << pos_total << "\n";
  os << "time:    consistent=" << std::fixed << std::setprecision(2) << m.time_consistent_s
     << "s weaken=" << m.time_weaken_s << "s wall=" << r.wall_s << "s\n";
}

int exit_code(const InferenceOutcome& o) {
  switch (o.kind) {
    case InferenceOutcome::Kind::Interface: return 0;
    case InferenceOutcome::Kind::Counterexample: return 1;
    case InferenceOutcome::Kind::Aborted: return 2;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abductive specification inference"};
  app.require_subcommand(1);
  Flags fl;
  std::string config_path, suite_dir;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--seed", fl.seed, "generator seed override");
    c->add_option("--timeout-smt", fl.timeout_smt, "per-query solver timeout (s)");
    c->add_option("--weaken-bound", fl.weaken_bound, "weakening time bound (s)");
    c->add_option("--max-qvars", fl.max_qvars, "quantified-variable bound");
    c->add_option("--samples", fl.samples, "consistent-streak stopping count");
    c->add_option("--out", fl.out, "also write the report to this file");
    c->add_option("--format", fl.format, "text | json-lines")
        ->check(CLI::IsMember({"text", "json-lines"}));
    c->add_option("--solver", fl.solver_bin, "external SMT solver binary (cross-check)");
  };

  CLI::App* runc = app.add_subcommand("run", "run one configuration");
  runc->add_option("config", config_path, "configuration file")->required();
  add_common(runc);

  CLI::App* benchc = app.add_subcommand("bench", "run every *.cfg in a directory");
  benchc->add_option("suite", suite_dir, "directory of configurations")->required();
  benchc->add_option("--jobs", fl.jobs, "parallel worker slots");
  add_common(benchc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 64;
  }

  try {
    if (runc->parsed()) {
      RunReport rep = run_one(config_path, fl);
      std::ostringstream buf;
      if (fl.format == "json-lines")
        emit_json_lines(buf, rep);
      else
        emit_text(buf, rep);
      std::cout << buf.str();
      if (!fl.out.empty()) std::ofstream(fl.out) << buf.str();
      return exit_code(rep.outcome);
    }

    // bench
    std::vector<std::string> paths;
    for (auto& e : fs::directory_iterator(suite_dir))
      if (e.path().extension() == ".cfg") paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) {
      std::cerr << "no .cfg files in " << suite_dir << "\n";
      return 2;
    }

    struct Row {
      std::string name, outcome, error;
      Metrics m;
      long sigma_apps = 0, pos_total = 0;
      size_t nfuncs = 0, npreds = 0;
      double wall = 0;
    };
    std::vector<Row> rows(paths.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= paths.size()) return;
        Row& row = rows[i];
        row.name = fs::path(paths[i]).stem().string();
        try {
          ConfigFile cfg = parse_config(read_file(paths[i]));
          row.nfuncs = cfg.library.size();
          row.npreds = cfg.predicates.size();
          for (auto& q : paths_to_queries(cfg)) row.sigma_apps += q.sigma.size();
          RunReport rep = run_one(paths[i], fl);
          row.m = rep.outcome.metrics;
          row.wall = rep.wall_s;
          for (auto& [_, n] : row.m.positive_vectors_per_fn) row.pos_total += n;
          switch (rep.outcome.kind) {
            case InferenceOutcome::Kind::Interface:
              row.outcome = rep.outcome.maximal ? "interface" : "interface*";
              break;
            case InferenceOutcome::Kind::Counterexample: row.outcome = "cex"; break;
            case InferenceOutcome::Kind::Aborted:
              row.outcome = "aborted";
              row.error = rep.outcome.reason;
              break;
          }
        } catch (const std::exception& e) {
          row.outcome = "error";
          row.error = e.what();
        }
      }
    };
    std::vector<std::future<void>> futs;
    for (int j = 1; j < std::max(1, fl.jobs); ++j)
      futs.push_back(std::async(std::launch::async, worker));
    worker();
    for (auto& f : futs) f.get();

    std::ostringstream os;
    os << std::left << std::setw(22) << "benchmark" << std::right << std::setw(11)
       << "outcome" << std::setw(5) << "|F|" << std::setw(5) << "|R|" << std::setw(5)
       << "|P|" << std::setw(5) << "|u|" << std::setw(6) << "cex" << std::setw(9)
       << "time_c" << std::setw(8) << "gather" << std::setw(7) << "|phi+|" << std::setw(9)
       << "time_w" << "\n";
    json sidecar = json::array();
    for (auto& r : rows) {
      os << std::left << std::setw(22) << r.name << std::right << std::setw(11) << r.outcome
         << std::setw(5) << r.nfuncs << std::setw(5) << r.sigma_apps << std::setw(5)
         << r.npreds << std::setw(5) << r.m.qvar_count << std::setw(6) << r.m.cex_count
         << std::setw(9) << std::fixed << std::setprecision(2) << r.m.time_consistent_s
         << std::setw(8) << r.m.gathered_vectors << std::setw(7) << r.pos_total
         << std::setw(9) << r.m.time_weaken_s << "\n";
      if (!r.error.empty()) os << "    ! " << r.error << "\n";
      json jr = {{"benchmark", r.name}, {"outcome", r.outcome},
                 {"metrics", metrics_json(r.m)},
                 {"timing", {{"wall_s", r.wall}, {"time_consistent_s", r.m.time_consistent_s},
                             {"time_weaken_s", r.m.time_weaken_s}}}};
      if (!r.error.empty()) jr["error"] = r.error;
      sidecar.push_back(jr);
    }
    std::cout << os.str();
    if (!fl.out.empty()) std::ofstream(fl.out) << sidecar.dump(2) << "\n";
    for (auto& r : rows)
      if (r.outcome == "error") return 2;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
