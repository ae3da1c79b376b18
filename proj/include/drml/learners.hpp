#pragma once

#include <span>
#include <vector>

#include "drml/linalg.hpp"

namespace drml {

enum class LearnerKind { linear, logistic, tree, stack };

struct TreeParams {
  int max_depth = 6;
  int min_leaf = 20;
  bool prune = false;   // cost-complexity with a CV-chosen penalty
  int prune_cv_folds = 5;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::linear;
  TreeParams tree;
  std::vector<LearnerSpec> members;  // stack only; members may not be stacks
  int cv_folds = 5;                  // stack weight folds

  static LearnerSpec linear() { return {}; }
  static LearnerSpec logistic() {
    LearnerSpec s;
    s.kind = LearnerKind::logistic;
    return s;
  }
  static LearnerSpec tree_spec(int max_depth = 6, int min_leaf = 20,
                               bool prune = false) {
    LearnerSpec s;
    s.kind = LearnerKind::tree;
    s.tree.max_depth = max_depth;
    s.tree.min_leaf = min_leaf;
    s.tree.prune = prune;
    return s;
  }
  static LearnerSpec stack(std::vector<LearnerSpec> member_specs,
                           int cv_folds = 5);
  // Pruned tree, unpruned tree, and a generalized linear member.
  static LearnerSpec default_stack(bool probability_target);
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;  // node mean
  int left = -1;
  int right = -1;
  std::size_t n_rows = 0;
  double sse = 0.0;  // training sum of squared errors at this node
};

class FittedLearner {
 public:
  FittedLearner() = default;

  LearnerKind kind() const { return kind_; }
  std::size_t n_features() const { return n_features_; }
  bool is_constant() const { return constant_; }
  bool convergence_warning() const { return warning_; }

  double predict_row(std::span<const double> row) const;
  std::vector<double> predict(const Matrix& features) const;

  // Introspection (tests, diagnostics).
  const std::vector<double>& coefficients() const { return coef_; }
  const std::vector<TreeNode>& tree_nodes() const { return nodes_; }
  const std::vector<double>& stack_weights() const { return weights_; }
  const std::vector<FittedLearner>& stack_members() const { return members_; }

 private:
  friend class LearnerFitter;
  LearnerKind kind_ = LearnerKind::linear;
  std::size_t n_features_ = 0;
  bool constant_ = false;
  double constant_value_ = 0.0;
  bool warning_ = false;
  std::vector<double> coef_;  // intercept first
  std::vector<TreeNode> nodes_;
  std::vector<FittedLearner> members_;
  std::vector<double> weights_;
};

// Fits spec on (features, target). Row order does not affect the result:
// rows are brought into a canonical order before any accumulation, so
// duplicated datasets with permuted rows produce bit-identical fits.
FittedLearner fit(const LearnerSpec& spec, const Matrix& features,
                  const std::vector<double>& target, bool is_probability);

}  // namespace drml
