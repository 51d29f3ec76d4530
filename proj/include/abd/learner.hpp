#pragma once
// Decision-tree learning of hypothesis-space formulas from disjoint
// positive/negative feature-vector sets.

#include <memory>

#include "abd/logic.hpp"

namespace abd {

struct LabeledData {
  std::set<FeatureVector> pi;     // positive
  std::set<FeatureVector> omega;  // negative
  FeatureSet feature_set;
};

struct DecisionTree {
  // leaf when feature < 0
  int feature = -1;
  bool leaf_label = true;
  std::shared_ptr<const DecisionTree> on_true, on_false;

  static std::shared_ptr<const DecisionTree> leaf(bool label);
  static std::shared_ptr<const DecisionTree> node(int f,
                                                  std::shared_ptr<const DecisionTree> t,
                                                  std::shared_ptr<const DecisionTree> e);
  bool is_leaf() const { return feature < 0; }
};

// ID3 (information gain, ties to the lowest feature index, no pruning), then
// tree_to_formula.  Separates pi/omega exactly; throws ContractViolation on
// non-disjoint input.
Formula learn(const LabeledData& data);

std::shared_ptr<const DecisionTree> learn_tree(const LabeledData& data);

// Disjunction over positive-leaf paths of the conjunction of path literals,
// normalized.
Formula tree_to_formula(const std::shared_ptr<const DecisionTree>& t, const FeatureSet& s);

bool tree_classify(const DecisionTree& t, const FeatureVector& fv);

}  // namespace abd
