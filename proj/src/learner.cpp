#include "abd/learner.hpp"

#include <cmath>

namespace abd {

std::shared_ptr<const DecisionTree> DecisionTree::leaf(bool label) {
  auto t = std::make_shared<DecisionTree>();
  t->feature = -1;
  t->leaf_label = label;
  return t;
}

std::shared_ptr<const DecisionTree> DecisionTree::node(
    int f, std::shared_ptr<const DecisionTree> tr, std::shared_ptr<const DecisionTree> fl) {
  auto t = std::make_shared<DecisionTree>();
  t->feature = f;
  t->on_true = std::move(tr);
  t->on_false = std::move(fl);
  return t;
}

bool tree_classify(const DecisionTree& t, const FeatureVector& fv) {
  const DecisionTree* cur = &t;
  while (!cur->is_leaf()) cur = fv[cur->feature] ? cur->on_true.get() : cur->on_false.get();
  return cur->leaf_label;
}

namespace {

double entropy(size_t p, size_t n) {
  size_t tot = p + n;
  if (tot == 0 || p == 0 || n == 0) return 0.0;
  double fp = double(p) / tot, fn = double(n) / tot;
  return -fp * std::log2(fp) - fn * std::log2(fn);
}

std::shared_ptr<const DecisionTree> id3(const std::vector<FeatureVector>& pos,
                                        const std::vector<FeatureVector>& neg,
                                        std::vector<bool>& used, size_t nfeat) {
  if (neg.empty()) return DecisionTree::leaf(true);  // includes the empty case
  if (pos.empty()) return DecisionTree::leaf(false);

  double base = entropy(pos.size(), neg.size());
  int best = -1;
  double best_gain = -1.0;
  for (size_t f = 0; f < nfeat; ++f) {
    if (used[f]) continue;
    size_t pt = 0, nt = 0;
    for (auto& v : pos) pt += v[f];
    for (auto& v : neg) nt += v[f];
    size_t pf = pos.size() - pt, nf = neg.size() - nt;
    size_t tot = pos.size() + neg.size();
    double rem = (double(pt + nt) / tot) * entropy(pt, nt) +
                 (double(pf + nf) / tot) * entropy(pf, nf);
    double gain = base - rem;
    if (gain > best_gain + 1e-12) {
      best_gain = gain;
      best = static_cast<int>(f);
    }
  }
  if (best < 0)
    throw ContractViolation("decision tree: indistinguishable labeled vectors");

  std::vector<FeatureVector> pt, pf, nt, nf;
  for (auto& v : pos) (v[best] ? pt : pf).push_back(v);
  for (auto& v : neg) (v[best] ? nt : nf).push_back(v);
  used[best] = true;
  auto tr = id3(pt, nt, used, nfeat);
  auto fl = id3(pf, nf, used, nfeat);
  used[best] = false;
  return DecisionTree::node(best, std::move(tr), std::move(fl));
}

void paths(const DecisionTree& t, std::vector<BExprPtr>& lits, std::vector<BExprPtr>& out) {
  if (t.is_leaf()) {
    if (t.leaf_label) out.push_back(BExpr::mk_and(lits));
    return;
  }
  lits.push_back(BExpr::mk_atom(t.feature));
  paths(*t.on_true, lits, out);
  lits.back() = BExpr::mk_not(BExpr::mk_atom(t.feature));
  paths(*t.on_false, lits, out);
  lits.pop_back();
}

}  // namespace

std::shared_ptr<const DecisionTree> learn_tree(const LabeledData& data) {
  for (auto& fv : data.pi) {
    if (fv.size() != data.feature_set.size())
      throw ContractViolation("vector length mismatch");
    if (data.omega.count(fv))
      throw ContractViolation("learn: pi and omega are not disjoint");
  }
  for (auto& fv : data.omega)
    if (fv.size() != data.feature_set.size())
      throw ContractViolation("vector length mismatch");

  std::vector<FeatureVector> pos(data.pi.begin(), data.pi.end());
  std::vector<FeatureVector> neg(data.omega.begin(), data.omega.end());
  std::vector<bool> used(data.feature_set.size(), false);
  return id3(pos, neg, used, data.feature_set.size());
}

Formula tree_to_formula(const std::shared_ptr<const DecisionTree>& t, const FeatureSet& s) {
  std::vector<BExprPtr> lits, terms;
  paths(*t, lits, terms);
  Formula raw{s.quantified, BExpr::mk_or(std::move(terms))};
  if (s.size() <= 12) return normalize(raw, s);
  return raw;
}

Formula learn(const LabeledData& data) {
  return tree_to_formula(learn_tree(data), data.feature_set);
}

}  // namespace abd
