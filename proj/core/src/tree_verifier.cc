#include "lpcert/tree_verifier.h"

#include <algorithm>
#include <string>

#include "lpcert/errors.h"

namespace lpcert {
namespace {

void CheckSample(std::size_t dimension, const Sample& sample) {
  if (sample.features.size() != dimension) {
    throw InputError("sample has " + std::to_string(sample.features.size()) +
                     " features, model expects " + std::to_string(dimension));
  }
}

using Part = std::vector<PseudoNode>;

// Joins the parts of one group into cliques that intersect each other and
// the perturbation ball. Partial cliques outside the ball are dropped early:
// a later intersection only shrinks the box.
Part EnumerateCliques(std::span<const Part> group, const Sample& sample,
                      Norm norm, double budget, std::size_t max_cliques) {
  Part current = group.front();
  for (std::size_t k = 1; k < group.size(); ++k) {
    Part next;
    for (const PseudoNode& clique : current) {
      for (const PseudoNode& node : group[k]) {
        std::optional<AxisBox> box = BoxIntersect(clique.box, node.box);
        if (!box || ReachCost(sample.features, *box, norm) > budget) continue;
        if (next.size() == max_cliques) {
          throw ResourceError("clique enumeration exceeded " +
                              std::to_string(max_cliques) +
                              " live pseudo-nodes");
        }
        PseudoNode merged;
        merged.members = clique.members;
        merged.members.insert(merged.members.end(), node.members.begin(),
                              node.members.end());
        merged.box = std::move(*box);
        merged.value = clique.value + node.value;
        next.push_back(std::move(merged));
      }
    }
    current = std::move(next);
  }
  return current;
}

}  // namespace

std::vector<LeafRecord> ComputeLeafBoxes(const Tree& tree,
                                         std::size_t dimension,
                                         int tree_index) {
  std::vector<LeafRecord> leaves;
  std::vector<std::pair<int, AxisBox>> stack;
  stack.emplace_back(0, AxisBox(dimension));
  while (!stack.empty()) {
    auto [index, box] = std::move(stack.back());
    stack.pop_back();
    const TreeNode& node = tree.node(index);
    if (node.is_leaf()) {
      leaves.push_back({tree_index, index, std::move(box), node.value});
      continue;
    }
    // A split that contradicts an ancestor leaves one child unreachable;
    // such a child has no region and contributes no leaves.
    AxisBox right = box;
    if (right.RestrictLower(node.feature, node.threshold)) {
      stack.emplace_back(node.right, std::move(right));
    }
    if (box.RestrictUpper(node.feature, node.threshold)) {
      stack.emplace_back(node.left, std::move(box));
    }
  }
  std::sort(leaves.begin(), leaves.end(),
            [](const LeafRecord& a, const LeafRecord& b) {
              return a.leaf_id < b.leaf_id;
            });
  return leaves;
}

VerificationResult VerifySingleTree(const Tree& tree, std::size_t dimension,
                                    const Sample& sample,
                                    const PerturbationSpec& spec) {
  CheckSample(dimension, sample);
  spec.Validate();
  const double y = sample.label;
  if (spec.epsilon == 0.0) {
    return VerificationResult::Make(y * tree.Evaluate(sample.features), true);
  }
  const double budget = ReachBudget(spec);
  double margin = kInf;
  for (const LeafRecord& leaf : ComputeLeafBoxes(tree, dimension)) {
    if (ReachCost(sample.features, leaf.box, spec.norm) <= budget) {
      margin = std::min(margin, y * leaf.value);
    }
  }
  return VerificationResult::Make(margin, true);
}

VerificationResult VerifyEnsembleMultilevel(const TreeEnsemble& ensemble,
                                            const Sample& sample,
                                            const PerturbationSpec& spec,
                                            const MultiLevelConfig& config) {
  if (config.clique_size < 1 || config.levels < 1) {
    throw InputError("multi-level verification needs K >= 1 and L >= 1");
  }
  CheckSample(ensemble.dimension, sample);
  spec.Validate();
  const double y = sample.label;
  if (spec.epsilon == 0.0 || ensemble.trees.empty()) {
    return VerificationResult::Make(
        y * EvaluateTreeEnsemble(ensemble, sample.features), true);
  }
  const double budget = ReachBudget(spec);

  std::vector<Part> parts;
  parts.reserve(ensemble.trees.size());
  for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
    Part part;
    for (LeafRecord& leaf : ComputeLeafBoxes(ensemble.trees[t],
                                             ensemble.dimension,
                                             static_cast<int>(t))) {
      if (ReachCost(sample.features, leaf.box, spec.norm) > budget) continue;
      part.push_back(PseudoNode{{{leaf.tree_index, leaf.leaf_id}},
                                std::move(leaf.box),
                                leaf.value});
    }
    parts.push_back(std::move(part));
  }

  const std::size_t k = static_cast<std::size_t>(config.clique_size);
  for (int level = 0; level < config.levels && parts.size() > 1; ++level) {
    std::vector<Part> merged;
    for (std::size_t begin = 0; begin < parts.size(); begin += k) {
      const std::size_t end = std::min(parts.size(), begin + k);
      merged.push_back(EnumerateCliques(
          std::span<const Part>(parts).subspan(begin, end - begin), sample,
          spec.norm, budget, config.max_cliques));
    }
    parts = std::move(merged);
  }

  double margin = 0.0;
  for (const Part& part : parts) {
    double lowest = kInf;
    for (const PseudoNode& node : part) lowest = std::min(lowest, y * node.value);
    margin += lowest;
  }
  return VerificationResult::Make(margin, parts.size() == 1);
}

}  // namespace lpcert
