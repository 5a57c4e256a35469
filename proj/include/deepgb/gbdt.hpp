#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace deepgb {

/// Integer feature columns for the tree learner: one inner vector per
/// feature, all of equal length.
using CodeColumns = std::vector<std::vector<int>>;

struct GbdtConfig {
    int n_trees = 800;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_samples_leaf = 1;
};

/// Node storage for a binary regression tree. Nodes are kept in preorder;
/// leaves have left == right == -1 and carry `value`, internal nodes carry
/// (feature, threshold) with the routing rule `code <= threshold -> left`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;

    bool is_leaf() const { return left < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict_row(std::span<const int> codes) const;
};

/// Least-squares boosted trees: predict(x) = base + lr * sum of tree outputs.
struct GbdtModel {
    double base = 0.0;
    double learning_rate = 0.1;
    std::size_t n_features = 0;
    std::vector<RegressionTree> trees;
};

/// Greedy recursive least-squares tree fit. At each node the split
/// maximizing SSE reduction is chosen over thresholds at midpoints of
/// consecutive distinct sorted codes; ties break to the lowest feature
/// index, then the lowest threshold. Nodes stop at max_depth, purity, or
/// when a child would fall under min_samples_leaf. Leaf value is the mean
/// residual of its samples.
///
/// All sums are taken over sorted values, so the fitted tree is invariant
/// to the order of training rows.
RegressionTree fit_tree(const CodeColumns& features, const std::vector<double>& residuals,
                        int max_depth, int min_samples_leaf = 1);

GbdtModel gbdt_fit(const CodeColumns& features, const std::vector<double>& target,
                   const GbdtConfig& config);

std::vector<double> gbdt_predict(const GbdtModel& model, const CodeColumns& features);

} // namespace deepgb
