#ifndef LPCERT_MODEL_H_
#define LPCERT_MODEL_H_

#include <cstddef>
#include <map>
#include <span>
#include <variant>
#include <vector>

namespace lpcert {

// A point to classify together with its label (-1 or +1).
struct Sample {
  std::vector<double> features;
  int label = 1;
};

// One-feature threshold classifier. Inputs with x[feature] >= threshold are
// routed right.
struct Stump {
  int feature = 0;
  double threshold = 0.0;
  double left_value = 0.0;
  double right_value = 0.0;

  double Evaluate(std::span<const double> x) const {
    return x[feature] >= threshold ? right_value : left_value;
  }

  friend bool operator==(const Stump&, const Stump&) = default;
};

// Additive ensemble F(x) = sum_i stump_i(x).
struct StumpEnsemble {
  std::size_t dimension = 0;
  std::vector<Stump> stumps;

  // Throws InputError if a stump references a feature >= dimension or holds
  // a non-finite value.
  void Validate() const;

  friend bool operator==(const StumpEnsemble&, const StumpEnsemble&) = default;
};

double EvaluateStumpEnsemble(const StumpEnsemble& ensemble,
                             std::span<const double> x);

// The sum of all stumps on one feature, as a step function of x[feature].
//
// Interval t covers [thresholds[t-1], thresholds[t]) with the convention
// thresholds[-1] = -inf and thresholds[n] = +inf, so there are
// thresholds.size() + 1 intervals and interval_values[t] is the summed
// prediction there.
struct FeatureAggregate {
  int feature = 0;
  std::vector<double> thresholds;
  std::vector<double> interval_values;

  std::size_t IntervalOf(double value) const;
  double Evaluate(double value) const {
    return interval_values[IntervalOf(value)];
  }
  double Lower(std::size_t interval) const;
  double Upper(std::size_t interval) const;
};

// Per-feature aggregates keyed by feature index. Features without stumps are
// absent. Equal thresholds are merged.
std::map<int, FeatureAggregate> AggregateFeatures(const StumpEnsemble& ensemble);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// A binary decision tree stored as a flat node array with the root at index
// 0. Routing matches Stump: right iff x[feature] >= threshold.
class Tree {
 public:
  Tree() : nodes_{TreeNode{}} {}

  static Tree Leaf(double value);
  static Tree Split(int feature, double threshold, Tree left, Tree right);
  // Builds from raw nodes; throws InputError unless they form a proper
  // binary tree rooted at 0.
  static Tree FromNodes(std::vector<TreeNode> nodes);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int index) const { return nodes_[index]; }

  int NumLeaves() const;
  int Depth() const;
  // Index of the leaf reached by x.
  int Route(std::span<const double> x) const;
  double Evaluate(std::span<const double> x) const {
    return nodes_[Route(x)].value;
  }

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::vector<TreeNode> nodes_;
};

struct TreeEnsemble {
  std::size_t dimension = 0;
  std::vector<Tree> trees;

  void Validate() const;

  friend bool operator==(const TreeEnsemble&, const TreeEnsemble&) = default;
};

double EvaluateTree(const Tree& tree, std::span<const double> x,
                    std::size_t dimension);
double EvaluateTreeEnsemble(const TreeEnsemble& ensemble,
                            std::span<const double> x);

using Model = std::variant<StumpEnsemble, TreeEnsemble>;

}  // namespace lpcert

#endif  // LPCERT_MODEL_H_
