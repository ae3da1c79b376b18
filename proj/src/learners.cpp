#include "drml/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "drml/common.hpp"

namespace drml {

LearnerSpec LearnerSpec::stack(std::vector<LearnerSpec> member_specs,
                               int cv_folds) {
  if (member_specs.empty()) throw input_error("stack requires members");
  for (const auto& m : member_specs) {
    if (m.kind == LearnerKind::stack) {
      throw input_error("stack members may not be stacks");
    }
  }
  LearnerSpec s;
  s.kind = LearnerKind::stack;
  s.members = std::move(member_specs);
  s.cv_folds = cv_folds;
  return s;
}

LearnerSpec LearnerSpec::default_stack(bool probability_target) {
  return stack({tree_spec(6, 20, true), tree_spec(6, 20, false),
                probability_target ? logistic() : linear()});
}

namespace {

constexpr double kCoefCap = 30.0;  // logistic separation guard

std::vector<std::size_t> canonical_order(const Matrix& x,
                                         const std::vector<double>& y) {
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return y[a] < y[b];
  });
  return order;
}

bool constant_target(const std::vector<double>& y) {
  for (double v : y) {
    if (v != y.front()) return false;
  }
  return true;
}

}  // namespace

// All mutation of FittedLearner internals happens through this fitter so the
// fitted objects stay immutable to callers.
class LearnerFitter {
 public:
  static FittedLearner constant(LearnerKind kind, std::size_t p, double value) {
    FittedLearner f;
    f.kind_ = kind;
    f.n_features_ = p;
    f.constant_ = true;
    f.constant_value_ = value;
    return f;
  }

  static FittedLearner linear_fit(const Matrix& x, const std::vector<double>& y);
  static FittedLearner logistic_fit(const Matrix& x,
                                    const std::vector<double>& y);
  static FittedLearner tree_fit(const Matrix& x, const std::vector<double>& y,
                                const TreeParams& params);
  static FittedLearner stack_fit(const LearnerSpec& spec, const Matrix& x,
                                 const std::vector<double>& y,
                                 bool is_probability);

  static FittedLearner dispatch(const LearnerSpec& spec, const Matrix& x,
                                const std::vector<double>& y,
                                bool is_probability);
};

namespace {

// ---------------------------------------------------------------------------
// Linear / logistic

// Accumulates the normal equations X'WX b = X'Wz with an intercept column.
void weighted_normal_equations(const Matrix& x, const std::vector<double>& w,
                               const std::vector<double>& z, Matrix& xtx,
                               std::vector<double>& xtz) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  xtx = Matrix(p + 1, p + 1);
  xtz.assign(p + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double zi = z[i];
    xtx(0, 0) += wi;
    xtz[0] += wi * zi;
    for (std::size_t j = 0; j < p; ++j) {
      const double xij = x(i, j);
      xtx(0, j + 1) += wi * xij;
      xtz[j + 1] += wi * xij * zi;
      for (std::size_t k = j; k < p; ++k) {
        xtx(j + 1, k + 1) += wi * xij * x(i, k);
      }
    }
  }
  for (std::size_t j = 0; j <= p; ++j) {
    for (std::size_t k = 0; k < j; ++k) xtx(j, k) = xtx(k, j);
  }
}

double linear_predictor(const Matrix& x, const std::vector<double>& coef,
                        std::size_t i) {
  double eta = coef[0];
  for (std::size_t j = 0; j < x.cols(); ++j) eta += coef[j + 1] * x(i, j);
  return eta;
}

}  // namespace

FittedLearner LearnerFitter::linear_fit(const Matrix& x,
                                        const std::vector<double>& y) {
  if (constant_target(y)) {
    return constant(LearnerKind::linear, x.cols(), y.front());
  }
  Matrix xtx;
  std::vector<double> xty;
  weighted_normal_equations(x, {}, y, xtx, xty);
  FittedLearner f;
  f.kind_ = LearnerKind::linear;
  f.n_features_ = x.cols();
  f.coef_ = solve_spd(xtx, xty);
  return f;
}

FittedLearner LearnerFitter::logistic_fit(const Matrix& x,
                                          const std::vector<double>& y) {
  if (constant_target(y)) {
    return constant(LearnerKind::logistic, x.cols(), y.front());
  }
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  std::vector<double> coef(p + 1, 0.0);
  std::vector<double> w(n), z(n);
  bool warning = false;
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = linear_predictor(x, coef, i);
      const double mu = expit(eta);
      const double wi = std::max(mu * (1.0 - mu), 1e-10);
      w[i] = wi;
      z[i] = eta + (y[i] - mu) / wi;
    }
    Matrix xtx;
    std::vector<double> xtz;
    weighted_normal_equations(x, w, z, xtx, xtz);
    const std::vector<double> next = solve_spd(xtx, xtz);
    double step = 0.0;
    for (std::size_t j = 0; j <= p; ++j) {
      step = std::max(step, std::fabs(next[j] - coef[j]));
    }
    coef = next;
    double biggest = 0.0;
    for (double c : coef) biggest = std::max(biggest, std::fabs(c));
    if (biggest > kCoefCap) {
      // Separation: predictions saturate, downstream clipping governs.
      for (double& c : coef) c = clip(c, -kCoefCap, kCoefCap);
      warning = true;
      converged = true;
      break;
    }
    if (step < 1e-8) {
      converged = true;
      break;
    }
  }
  FittedLearner f;
  f.kind_ = LearnerKind::logistic;
  f.n_features_ = p;
  f.coef_ = std::move(coef);
  f.warning_ = warning || !converged;
  return f;
}

// ---------------------------------------------------------------------------
// Regression tree

namespace {

struct TreeBuilder {
  const Matrix& x;
  const std::vector<double>& y;
  TreeParams params;
  std::vector<TreeNode> nodes;

  // rows arrive ordered; sums run over target-sorted copies so results do
  // not depend on the caller's row order.
  int build(std::vector<std::size_t> rows, int depth) {
    const std::size_t n = rows.size();
    std::vector<std::size_t> by_target(rows);
    std::sort(by_target.begin(), by_target.end(),
              [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
    double sum = 0.0, sum2 = 0.0;
    for (const std::size_t i : by_target) {
      sum += y[i];
      sum2 += y[i] * y[i];
    }
    const double node_mean = sum / static_cast<double>(n);
    const double node_sse = std::max(0.0, sum2 - node_mean * sum);

    TreeNode node;
    node.value = node_mean;
    node.n_rows = n;
    node.sse = node_sse;
    const int id = static_cast<int>(nodes.size());
    nodes.push_back(node);

    if (depth >= params.max_depth || n < 2 * static_cast<std::size_t>(params.min_leaf) ||
        node_sse <= 0.0 || x.cols() == 0) {
      return id;
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      std::vector<std::size_t> idx(rows);
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
        return y[a] < y[b];
      });
      double left_sum = 0.0, left_sum2 = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        const std::size_t i = idx[k - 1];
        left_sum += y[i];
        left_sum2 += y[i] * y[i];
        if (x(idx[k - 1], j) == x(idx[k], j)) continue;
        if (k < static_cast<std::size_t>(params.min_leaf) ||
            n - k < static_cast<std::size_t>(params.min_leaf)) {
          continue;
        }
        const double nl = static_cast<double>(k);
        const double nr = static_cast<double>(n - k);
        const double right_sum = sum - left_sum;
        const double right_sum2 = sum2 - left_sum2;
        const double sse_l = std::max(0.0, left_sum2 - left_sum * left_sum / nl);
        const double sse_r =
            std::max(0.0, right_sum2 - right_sum * right_sum / nr);
        const double gain = node_sse - sse_l - sse_r;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(j);
          best_threshold = 0.5 * (x(idx[k - 1], j) + x(idx[k], j));
        }
      }
    }
    if (best_feature < 0 || best_gain <= 0.0) return id;

    std::vector<std::size_t> left_rows, right_rows;
    left_rows.reserve(rows.size());
    right_rows.reserve(rows.size());
    for (const std::size_t i : rows) {
      if (x(i, static_cast<std::size_t>(best_feature)) <= best_threshold) {
        left_rows.push_back(i);
      } else {
        right_rows.push_back(i);
      }
    }
    nodes[id].feature = best_feature;
    nodes[id].threshold = best_threshold;
    nodes[id].left = build(std::move(left_rows), depth + 1);
    nodes[id].right = build(std::move(right_rows), depth + 1);
    return id;
  }
};

std::vector<TreeNode> build_tree(const Matrix& x, const std::vector<double>& y,
                                 const TreeParams& params) {
  TreeBuilder builder{x, y, params, {}};
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), 0);
  builder.build(std::move(rows), 0);
  return builder.nodes;
}

double tree_predict_row(const std::vector<TreeNode>& nodes,
                        std::span<const double> row) {
  int id = 0;
  while (nodes[id].feature >= 0) {
    id = row[static_cast<std::size_t>(nodes[id].feature)] <=
                 nodes[id].threshold
             ? nodes[id].left
             : nodes[id].right;
  }
  return nodes[id].value;
}

// Subtree leaf SSE and leaf count with `collapsed` treated as leaves.
void subtree_stats(const std::vector<TreeNode>& nodes,
                   const std::vector<char>& collapsed, int id, double& sse,
                   int& leaves) {
  if (nodes[id].feature < 0 || collapsed[id]) {
    sse += nodes[id].sse;
    leaves += 1;
    return;
  }
  subtree_stats(nodes, collapsed, nodes[id].left, sse, leaves);
  subtree_stats(nodes, collapsed, nodes[id].right, sse, leaves);
}

// Weakest-link alpha sequence of a tree; per-sample cost scale.
std::vector<double> pruning_alphas(const std::vector<TreeNode>& nodes,
                                   double n_train) {
  std::vector<double> alphas;
  if (nodes.empty() || nodes[0].feature < 0) return alphas;
  std::vector<char> collapsed(nodes.size(), 0);
  for (;;) {
    double weakest = std::numeric_limits<double>::infinity();
    std::vector<int> internal;
    for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
      if (nodes[id].feature < 0 || collapsed[id]) continue;
      internal.push_back(id);
      double sub_sse = 0.0;
      int leaves = 0;
      subtree_stats(nodes, collapsed, id, sub_sse, leaves);
      const double g =
          (nodes[id].sse - sub_sse) / (n_train * std::max(1, leaves - 1));
      weakest = std::min(weakest, g);
    }
    if (internal.empty()) break;
    alphas.push_back(std::max(0.0, weakest));
    for (const int id : internal) {
      double sub_sse = 0.0;
      int leaves = 0;
      subtree_stats(nodes, collapsed, id, sub_sse, leaves);
      const double g =
          (nodes[id].sse - sub_sse) / (n_train * std::max(1, leaves - 1));
      if (g <= weakest * (1.0 + 1e-12)) collapsed[id] = 1;
    }
    if (collapsed[0]) break;
  }
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  return alphas;
}

// Smallest cost-complexity-optimal subtree at penalty alpha.
struct PruneResult {
  int id;
  double sse;
  int leaves;
};

PruneResult prune_rec(const std::vector<TreeNode>& nodes, int id, double alpha,
                      double n_train, std::vector<TreeNode>& out) {
  const TreeNode& node = nodes[id];
  if (node.feature < 0) {
    out.push_back(node);
    return {static_cast<int>(out.size() - 1), node.sse, 1};
  }
  TreeNode copy = node;
  const int self = static_cast<int>(out.size());
  out.push_back(copy);
  const PruneResult left = prune_rec(nodes, node.left, alpha, n_train, out);
  const PruneResult right = prune_rec(nodes, node.right, alpha, n_train, out);
  const double sub_sse = left.sse + right.sse;
  const int leaves = left.leaves + right.leaves;
  // Collapse when a single leaf costs no more than the subtree.
  if (node.sse / n_train + alpha <=
      sub_sse / n_train + alpha * leaves + 1e-15) {
    out.resize(static_cast<std::size_t>(self));
    TreeNode leaf = node;
    leaf.feature = -1;
    leaf.left = leaf.right = -1;
    out.push_back(leaf);
    return {self, node.sse, 1};
  }
  out[static_cast<std::size_t>(self)].left = left.id;
  out[static_cast<std::size_t>(self)].right = right.id;
  return {self, sub_sse, leaves};
}

std::vector<TreeNode> prune_tree(const std::vector<TreeNode>& nodes,
                                 double alpha, double n_train) {
  std::vector<TreeNode> out;
  out.reserve(nodes.size());
  prune_rec(nodes, 0, alpha, n_train, out);
  return out;
}

double holdout_sse(const std::vector<TreeNode>& nodes, const Matrix& x,
                   const std::vector<double>& y,
                   const std::vector<std::size_t>& rows) {
  double sse = 0.0;
  for (const std::size_t i : rows) {
    const double e = y[i] - tree_predict_row(nodes, x.row(i));
    sse += e * e;
  }
  return sse;
}

std::vector<TreeNode> fit_pruned_tree(const Matrix& x,
                                      const std::vector<double>& y,
                                      const TreeParams& params) {
  const std::size_t n = y.size();
  std::vector<TreeNode> full = build_tree(x, y, params);
  const std::vector<double> path = pruning_alphas(full, static_cast<double>(n));
  if (path.empty()) return full;

  std::vector<double> candidates{0.0};
  if (path.front() > 0.0) candidates.push_back(0.5 * path.front());
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    candidates.push_back(std::sqrt(path[k] * path[k + 1]));
  }
  candidates.push_back(path.back() * 1.5);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  const int folds =
      std::max(2, std::min<int>(params.prune_cv_folds, static_cast<int>(n)));
  std::vector<double> cv_sse(candidates.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows, val_rows;
    for (std::size_t i = 0; i < n; ++i) {
      (static_cast<int>(i % folds) == f ? val_rows : train_rows).push_back(i);
    }
    if (train_rows.empty() || val_rows.empty()) continue;
    const Matrix xt = x.select_rows(train_rows);
    std::vector<double> yt(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) yt[i] = y[train_rows[i]];
    const std::vector<TreeNode> fold_tree = build_tree(xt, yt, params);
    const double fold_n = static_cast<double>(train_rows.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const std::vector<TreeNode> pruned =
          prune_tree(fold_tree, candidates[c], fold_n);
      cv_sse[c] += holdout_sse(pruned, x, y, val_rows);
    }
  }
  // Ties favor the larger penalty (smaller tree).
  std::size_t best = 0;
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    if (cv_sse[c] <= cv_sse[best]) best = c;
  }
  return prune_tree(full, candidates[best], static_cast<double>(n));
}

}  // namespace

FittedLearner LearnerFitter::tree_fit(const Matrix& x,
                                      const std::vector<double>& y,
                                      const TreeParams& params) {
  if (constant_target(y)) {
    return constant(LearnerKind::tree, x.cols(), y.front());
  }
  FittedLearner f;
  f.kind_ = LearnerKind::tree;
  f.n_features_ = x.cols();
  f.nodes_ = params.prune ? fit_pruned_tree(x, y, params)
                          : build_tree(x, y, params);
  return f;
}

// ---------------------------------------------------------------------------
// Stack

namespace {

// min ||O w - y||^2 over w >= 0 by projected gradient, then normalize to the
// simplex. The step 1/trace(O'O) bounds the Lipschitz constant.
std::vector<double> convex_weights(const Matrix& oof,
                                   const std::vector<double>& y) {
  const std::size_t m = oof.cols();
  Matrix gram(m, m);
  std::vector<double> moment(m, 0.0);
  for (std::size_t i = 0; i < oof.rows(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      moment[j] += oof(i, j) * y[i];
      for (std::size_t k = j; k < m; ++k) {
        gram(j, k) += oof(i, j) * oof(i, k);
      }
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < j; ++k) gram(j, k) = gram(k, j);
  }
  double trace = 0.0;
  for (std::size_t j = 0; j < m; ++j) trace += gram(j, j);
  const double step = trace > 0.0 ? 1.0 / trace : 1.0;

  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  for (int iter = 0; iter < 100000; ++iter) {
    double max_change = 0.0;
    std::vector<double> grad(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      double g = -moment[j];
      for (std::size_t k = 0; k < m; ++k) g += gram(j, k) * w[k];
      grad[j] = g;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double next = std::max(0.0, w[j] - step * grad[j]);
      max_change = std::max(max_change, std::fabs(next - w[j]));
      w[j] = next;
    }
    if (max_change < 1e-10) break;
  }
  double total = 0.0;
  for (double v : w) total += v;
  if (total <= 1e-12) {
    w.assign(m, 1.0 / static_cast<double>(m));
  } else {
    for (double& v : w) v /= total;
  }
  return w;
}

}  // namespace

FittedLearner LearnerFitter::stack_fit(const LearnerSpec& spec, const Matrix& x,
                                       const std::vector<double>& y,
                                       bool is_probability) {
  const std::size_t n = y.size();
  const std::size_t m = spec.members.size();
  const int folds = std::max(
      2, std::min<int>(spec.cv_folds, static_cast<int>(n)));

  Matrix oof(n, m);
  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_rows, val_rows;
    for (std::size_t i = 0; i < n; ++i) {
      (static_cast<int>(i % folds) == f ? val_rows : train_rows).push_back(i);
    }
    if (train_rows.empty() || val_rows.empty()) continue;
    const Matrix xt = x.select_rows(train_rows);
    std::vector<double> yt(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) yt[i] = y[train_rows[i]];
    for (std::size_t j = 0; j < m; ++j) {
      const FittedLearner member =
          LearnerFitter::dispatch(spec.members[j], xt, yt, is_probability);
      for (const std::size_t i : val_rows) {
        oof(i, j) = member.predict_row(x.row(i));
      }
    }
  }

  FittedLearner f;
  f.kind_ = LearnerKind::stack;
  f.n_features_ = x.cols();
  f.weights_ = convex_weights(oof, y);
  f.members_.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    f.members_.push_back(
        LearnerFitter::dispatch(spec.members[j], x, y, is_probability));
    f.warning_ = f.warning_ || f.members_.back().convergence_warning();
  }
  return f;
}

FittedLearner LearnerFitter::dispatch(const LearnerSpec& spec, const Matrix& x,
                                      const std::vector<double>& y,
                                      bool is_probability) {
  switch (spec.kind) {
    case LearnerKind::linear:
      return linear_fit(x, y);
    case LearnerKind::logistic:
      return logistic_fit(x, y);
    case LearnerKind::tree:
      return tree_fit(x, y, spec.tree);
    case LearnerKind::stack:
      return stack_fit(spec, x, y, is_probability);
  }
  throw input_error("unknown learner kind");
}

// ---------------------------------------------------------------------------

double FittedLearner::predict_row(std::span<const double> row) const {
  if (row.size() != n_features_) {
    throw input_error("predict: feature dimension mismatch");
  }
  if (constant_) return constant_value_;
  switch (kind_) {
    case LearnerKind::linear: {
      double eta = coef_[0];
      for (std::size_t j = 0; j < n_features_; ++j) eta += coef_[j + 1] * row[j];
      return eta;
    }
    case LearnerKind::logistic: {
      double eta = coef_[0];
      for (std::size_t j = 0; j < n_features_; ++j) eta += coef_[j + 1] * row[j];
      return expit(eta);
    }
    case LearnerKind::tree:
      return tree_predict_row(nodes_, row);
    case LearnerKind::stack: {
      double value = 0.0;
      for (std::size_t j = 0; j < members_.size(); ++j) {
        if (weights_[j] != 0.0) value += weights_[j] * members_[j].predict_row(row);
      }
      return value;
    }
  }
  throw input_error("unknown learner kind");
}

std::vector<double> FittedLearner::predict(const Matrix& features) const {
  std::vector<double> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    out[i] = predict_row(features.row(i));
  }
  return out;
}

FittedLearner fit(const LearnerSpec& spec, const Matrix& features,
                  const std::vector<double>& target, bool is_probability) {
  if (features.rows() != target.size()) {
    throw input_error("fit: feature/target length mismatch");
  }
  if (target.empty()) throw input_error("fit: empty training data");
  if (is_probability) {
    for (double v : target) {
      if (v < 0.0 || v > 1.0) {
        throw input_error("fit: probability target outside [0,1]");
      }
    }
  }
  const std::vector<std::size_t> order = canonical_order(features, target);
  const Matrix xo = features.select_rows(order);
  std::vector<double> yo(target.size());
  for (std::size_t i = 0; i < order.size(); ++i) yo[i] = target[order[i]];
  return LearnerFitter::dispatch(spec, xo, yo, is_probability);
}

}  // namespace drml
