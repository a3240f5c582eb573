#ifndef LPCERT_TREE_VERIFIER_H_
#define LPCERT_TREE_VERIFIER_H_

#include <cstddef>
#include <utility>
#include <vector>

#include "lpcert/geometry.h"
#include "lpcert/model.h"
#include "lpcert/stump_verifier.h"

namespace lpcert {

// Decision region of one leaf.
struct LeafRecord {
  int tree_index = 0;
  int leaf_id = 0;  // node index inside the tree
  AxisBox box;
  double value = 0.0;
};

// A clique of leaves, one per tree of a group, whose boxes intersect.
struct PseudoNode {
  std::vector<std::pair<int, int>> members;  // (tree_index, leaf_id)
  AxisBox box;
  double value = 0.0;  // sum of member leaf values
};

struct MultiLevelConfig {
  int clique_size = 2;  // K: trees (or virtual trees) merged per group
  int levels = 1;       // L
  // Live pseudo-nodes allowed per group before giving up.
  std::size_t max_cliques = 1'000'000;
};

// Leaf boxes in one pass over the tree. Boxes follow the routing rule: the
// left child of a split on (f, t) gets x_f < t, the right child x_f >= t.
std::vector<LeafRecord> ComputeLeafBoxes(const Tree& tree,
                                         std::size_t dimension,
                                         int tree_index = 0);

// Exact verification of a single tree under any norm.
VerificationResult VerifySingleTree(const Tree& tree, std::size_t dimension,
                                    const Sample& sample,
                                    const PerturbationSpec& spec);

// Sound verification of a tree ensemble by multi-level clique enumeration.
// Exact (complete = true) when the levels merge every tree into a single
// group, e.g. K >= T with L = 1.
VerificationResult VerifyEnsembleMultilevel(const TreeEnsemble& ensemble,
                                            const Sample& sample,
                                            const PerturbationSpec& spec,
                                            const MultiLevelConfig& config);

}  // namespace lpcert

#endif  // LPCERT_TREE_VERIFIER_H_
