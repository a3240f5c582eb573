#include "lpcert/model.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "lpcert/errors.h"

namespace lpcert {
namespace {

void CheckDimension(std::span<const double> x, std::size_t dimension) {
  if (x.size() != dimension) {
    throw InputError("input has " + std::to_string(x.size()) +
                     " features, model expects " + std::to_string(dimension));
  }
}

}  // namespace

void StumpEnsemble::Validate() const {
  for (const Stump& s : stumps) {
    if (s.feature < 0 || static_cast<std::size_t>(s.feature) >= dimension) {
      throw InputError("stump feature " + std::to_string(s.feature) +
                       " out of range for dimension " +
                       std::to_string(dimension));
    }
    if (!std::isfinite(s.threshold) || !std::isfinite(s.left_value) ||
        !std::isfinite(s.right_value)) {
      throw InputError("stump holds a non-finite value");
    }
  }
}

double EvaluateStumpEnsemble(const StumpEnsemble& ensemble,
                             std::span<const double> x) {
  CheckDimension(x, ensemble.dimension);
  double sum = 0.0;
  for (const Stump& s : ensemble.stumps) sum += s.Evaluate(x);
  return sum;
}

std::size_t FeatureAggregate::IntervalOf(double value) const {
  return static_cast<std::size_t>(
      std::upper_bound(thresholds.begin(), thresholds.end(), value) -
      thresholds.begin());
}

double FeatureAggregate::Lower(std::size_t interval) const {
  return interval == 0 ? -std::numeric_limits<double>::infinity()
                       : thresholds[interval - 1];
}

double FeatureAggregate::Upper(std::size_t interval) const {
  return interval == thresholds.size()
             ? std::numeric_limits<double>::infinity()
             : thresholds[interval];
}

std::map<int, FeatureAggregate> AggregateFeatures(
    const StumpEnsemble& ensemble) {
  std::map<int, std::vector<const Stump*>> by_feature;
  for (const Stump& s : ensemble.stumps) by_feature[s.feature].push_back(&s);

  std::map<int, FeatureAggregate> out;
  for (auto& [feature, stumps] : by_feature) {
    std::stable_sort(stumps.begin(), stumps.end(),
                     [](const Stump* a, const Stump* b) {
                       return a->threshold < b->threshold;
                     });
    FeatureAggregate agg;
    agg.feature = feature;
    double base = 0.0;
    std::vector<double> jumps;
    for (const Stump* s : stumps) {
      base += s->left_value;
      if (agg.thresholds.empty() || agg.thresholds.back() != s->threshold) {
        agg.thresholds.push_back(s->threshold);
        jumps.push_back(0.0);
      }
      jumps.back() += s->right_value - s->left_value;
    }
    agg.interval_values.reserve(jumps.size() + 1);
    agg.interval_values.push_back(base);
    for (double jump : jumps) {
      agg.interval_values.push_back(agg.interval_values.back() + jump);
    }
    out.emplace(feature, std::move(agg));
  }
  return out;
}

Tree Tree::Leaf(double value) {
  Tree t;
  t.nodes_[0].value = value;
  return t;
}

Tree Tree::Split(int feature, double threshold, Tree left, Tree right) {
  Tree t;
  TreeNode& root = t.nodes_[0];
  root.feature = feature;
  root.threshold = threshold;
  const auto append = [&t](const Tree& sub) {
    const int offset = static_cast<int>(t.nodes_.size());
    for (TreeNode n : sub.nodes_) {
      if (!n.is_leaf()) {
        n.left += offset;
        n.right += offset;
      }
      t.nodes_.push_back(n);
    }
    return offset;
  };
  const int l = append(left);
  const int r = append(right);
  t.nodes_[0].left = l;
  t.nodes_[0].right = r;
  return t;
}

Tree Tree::FromNodes(std::vector<TreeNode> nodes) {
  if (nodes.empty()) throw InputError("tree has no nodes");
  const int n = static_cast<int>(nodes.size());
  std::vector<int> parents(nodes.size(), 0);
  for (const TreeNode& node : nodes) {
    if (node.is_leaf()) continue;
    for (int child : {node.left, node.right}) {
      if (child <= 0 || child >= n) throw InputError("tree child out of range");
      ++parents[child];
    }
  }
  for (int i = 1; i < n; ++i) {
    if (parents[i] != 1) {
      throw InputError("tree node " + std::to_string(i) +
                       " is not reached exactly once");
    }
  }
  Tree t;
  t.nodes_ = std::move(nodes);
  // A cycle through the root is impossible (root has no parent), and every
  // other node has one parent, so reachability from 0 remains to be checked.
  std::vector<int> stack{0};
  int seen = 0;
  while (!stack.empty()) {
    const TreeNode& node = t.nodes_[stack.back()];
    stack.pop_back();
    if (++seen > n) throw InputError("tree contains a cycle");
    if (!node.is_leaf()) {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  if (seen != n) throw InputError("tree has unreachable nodes");
  return t;
}

int Tree::NumLeaves() const {
  return static_cast<int>(std::count_if(
      nodes_.begin(), nodes_.end(),
      [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::Depth() const {
  std::function<int(int)> depth = [&](int i) -> int {
    const TreeNode& n = nodes_[i];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth(n.left), depth(n.right));
  };
  return depth(0);
}

int Tree::Route(std::span<const double> x) const {
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& n = nodes_[i];
    i = x[n.feature] >= n.threshold ? n.right : n.left;
  }
  return i;
}

void TreeEnsemble::Validate() const {
  for (const Tree& tree : trees) {
    for (const TreeNode& n : tree.nodes()) {
      if (n.is_leaf()) {
        if (!std::isfinite(n.value)) {
          throw InputError("tree leaf holds a non-finite value");
        }
        continue;
      }
      if (static_cast<std::size_t>(n.feature) >= dimension) {
        throw InputError("tree split feature " + std::to_string(n.feature) +
                         " out of range for dimension " +
                         std::to_string(dimension));
      }
      if (!std::isfinite(n.threshold)) {
        throw InputError("tree split threshold is not finite");
      }
    }
  }
}

double EvaluateTree(const Tree& tree, std::span<const double> x,
                    std::size_t dimension) {
  CheckDimension(x, dimension);
  return tree.Evaluate(x);
}

double EvaluateTreeEnsemble(const TreeEnsemble& ensemble,
                            std::span<const double> x) {
  CheckDimension(x, ensemble.dimension);
  double sum = 0.0;
  for (const Tree& t : ensemble.trees) sum += t.Evaluate(x);
  return sum;
}

}  // namespace lpcert
