#pragma once
// Configuration files: datatype/predicate/library declarations plus a minimal
// client IR, compiled into verification queries by a straight-line weakest
// liberal precondition pass over each control-flow path.

#include "abd/logic.hpp"
#include "abd/runtime.hpp"

namespace abd {

struct Stmt {
  enum class Kind { Bind, If, Return };
  Kind kind = Kind::Return;
  // Bind: var = func(args); func == "self" is the recursive call.
  std::string var, func;
  std::vector<std::string> args;
  // If: branch on a boolean variable.
  std::string cond;
  std::vector<Stmt> then_body, else_body;
  // Return
  std::string ret;
};

struct ClientIR {
  std::string name;
  std::vector<Var> params;
  Sort ret;
  std::vector<Stmt> body;
};

struct ConfigFile {
  std::vector<std::string> datatypes;
  std::vector<MethodPredicate> predicates;  // declaration order
  std::map<std::string, std::string> pred_impl;
  std::vector<FuncSig> library;  // declaration order
  std::map<std::string, std::string> lib_impl;
  ClientIR client;
  ExprPtr assertion;  // postcondition over client params and `nu`
  GenConfig gen;
  struct Limits {
    int max_qvars = 3;
    int weaken_bound_s = 60;
    int timeout_smt_s = 10;
  } limits;
};

ConfigFile parse_config(const std::string& text);
std::string print_config(const ConfigFile& cfg);

// One query per branch valuation (true branch explored first).  Sigma holds
// the path's applications (recursive calls carry the instantiated
// postcondition as a fixed spec), the branch constraints, and the result
// binding nu = returned-variable; Phi is the postcondition.
std::vector<VerificationQuery> paths_to_queries(const ConfigFile& cfg);

Library build_library(const ConfigFile& cfg);
Predicates build_predicates(const ConfigFile& cfg);
SigTable build_sigtable(const ConfigFile& cfg, const std::vector<Var>& u);

// Concrete interpretation of the client (branches follow actual values,
// recursion bounded); throws DomainError on partial-op failure or depth
// exhaustion.
Value exec_client(const ClientIR& ir, const Library& lib, const std::vector<Value>& args,
                  int depth_limit = 64);

}  // namespace abd
