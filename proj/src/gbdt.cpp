#include "deepgb/gbdt.hpp"

#include "deepgb/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace deepgb {

namespace {

std::size_t column_length(const CodeColumns& features) {
    return features.empty() ? 0 : features[0].size();
}

/// Sum over ascending-sorted values. Fixes the floating-point summation
/// order so the fitted model does not depend on row order.
double ordered_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (const double x : v) s += x;
    return s;
}

double ordered_mean(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
    std::vector<double> vals;
    vals.reserve(idx.size());
    for (const std::size_t i : idx) vals.push_back(v[i]);
    return ordered_sum(std::move(vals)) / static_cast<double>(idx.size());
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
};

/// Best split for the samples in `idx`. The SSE reduction
///   SSE_parent - (SSE_L + SSE_R)
/// is maximized by maximizing sumL^2/nL + sumR^2/nR, which is what `score`
/// holds (the parent term is constant across candidates).
SplitChoice best_split(const CodeColumns& features, const std::vector<double>& residuals,
                       const std::vector<std::size_t>& idx, int min_samples_leaf) {
    SplitChoice best;
    const std::size_t n = idx.size();
    std::vector<std::pair<int, double>> samples;
    for (std::size_t f = 0; f < features.size(); ++f) {
        const auto& column = features[f];
        samples.clear();
        samples.reserve(n);
        for (const std::size_t i : idx) samples.emplace_back(column[i], residuals[i]);
        // (code, value) order makes prefix sums independent of row order
        std::sort(samples.begin(), samples.end());
        if (samples.front().first == samples.back().first) continue;

        double left_sum = 0.0;
        std::size_t left_n = 0;
        double total = 0.0;
        for (const auto& s : samples) total += s.second;

        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_sum += samples[i].second;
            ++left_n;
            if (samples[i].first == samples[i + 1].first) continue;
            if (left_n < static_cast<std::size_t>(min_samples_leaf) ||
                n - left_n < static_cast<std::size_t>(min_samples_leaf)) {
                continue;
            }
            const double threshold =
                (static_cast<double>(samples[i].first) + static_cast<double>(samples[i + 1].first)) / 2.0;
            const double right_sum = total - left_sum;
            const double score = left_sum * left_sum / static_cast<double>(left_n) +
                                 right_sum * right_sum / static_cast<double>(n - left_n);
            // strict improvement keeps the first (lowest feature, lowest
            // threshold) candidate on ties
            if (score > best.score) {
                best.found = true;
                best.feature = static_cast<int>(f);
                best.threshold = threshold;
                best.score = score;
            }
        }
    }
    return best;
}

int build_node(const CodeColumns& features, const std::vector<double>& residuals,
               const std::vector<std::size_t>& idx, int depth, int max_depth,
               int min_samples_leaf, std::vector<TreeNode>& nodes) {
    const int self = static_cast<int>(nodes.size());
    nodes.emplace_back();

    const double mean = ordered_mean(residuals, idx);
    bool pure = true;
    for (const std::size_t i : idx) {
        if (residuals[i] != residuals[idx[0]]) {
            pure = false;
            break;
        }
    }

    SplitChoice split;
    if (!pure && depth < max_depth) {
        split = best_split(features, residuals, idx, min_samples_leaf);
    }
    if (!split.found) {
        nodes[self].value = mean;
        return self;
    }

    std::vector<std::size_t> left_idx, right_idx;
    for (const std::size_t i : idx) {
        if (static_cast<double>(features[static_cast<std::size_t>(split.feature)][i]) <=
            split.threshold) {
            left_idx.push_back(i);
        } else {
            right_idx.push_back(i);
        }
    }
    nodes[self].feature = split.feature;
    nodes[self].threshold = split.threshold;
    const int left = build_node(features, residuals, left_idx, depth + 1, max_depth,
                                min_samples_leaf, nodes);
    const int right = build_node(features, residuals, right_idx, depth + 1, max_depth,
                                 min_samples_leaf, nodes);
    nodes[self].left = left;
    nodes[self].right = right;
    return self;
}

} // namespace

double RegressionTree::predict_row(std::span<const int> codes) const {
    std::size_t at = 0;
    while (!nodes[at].is_leaf()) {
        const TreeNode& n = nodes[at];
        at = static_cast<std::size_t>(
            static_cast<double>(codes[static_cast<std::size_t>(n.feature)]) <= n.threshold
                ? n.left
                : n.right);
    }
    return nodes[at].value;
}

RegressionTree fit_tree(const CodeColumns& features, const std::vector<double>& residuals,
                        int max_depth, int min_samples_leaf) {
    const std::size_t n = column_length(features);
    if (residuals.empty() || residuals.size() != n) {
        throw TrainError("fit_tree: need matching non-empty features and residuals");
    }
    if (max_depth < 1 || min_samples_leaf < 1) {
        throw ConfigError("fit_tree: max_depth and min_samples_leaf must be >= 1");
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    RegressionTree tree;
    build_node(features, residuals, idx, 0, max_depth, min_samples_leaf, tree.nodes);
    return tree;
}

GbdtModel gbdt_fit(const CodeColumns& features, const std::vector<double>& target,
                   const GbdtConfig& config) {
    const std::size_t n = column_length(features);
    if (n == 0 || target.size() != n) {
        throw TrainError("gbdt_fit: empty dataset or length mismatch");
    }
    if (config.n_trees < 1) throw ConfigError("gbdt_fit: n_trees must be >= 1");
    if (config.learning_rate <= 0.0 || config.learning_rate > 1.0) {
        throw ConfigError("gbdt_fit: learning_rate must be in (0, 1]");
    }

    GbdtModel model;
    model.learning_rate = config.learning_rate;
    model.n_features = features.size();
    model.base = ordered_sum(target) / static_cast<double>(n);

    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = target[i] - model.base;

    std::vector<int> row(features.size());
    model.trees.reserve(static_cast<std::size_t>(config.n_trees));
    for (int t = 0; t < config.n_trees; ++t) {
        RegressionTree tree =
            fit_tree(features, residual, config.max_depth, config.min_samples_leaf);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < features.size(); ++f) row[f] = features[f][i];
            residual[i] -= config.learning_rate * tree.predict_row(row);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

std::vector<double> gbdt_predict(const GbdtModel& model, const CodeColumns& features) {
    if (features.size() != model.n_features) {
        throw ShapeError("gbdt_predict: model trained on " + std::to_string(model.n_features) +
                         " features, got " + std::to_string(features.size()));
    }
    const std::size_t n = column_length(features);
    std::vector<double> out(n, model.base);
    std::vector<int> row(features.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < features.size(); ++f) row[f] = features[f][i];
        double acc = 0.0;
        for (const auto& tree : model.trees) acc += tree.predict_row(row);
        out[i] += model.learning_rate * acc;
    }
    return out;
}

} // namespace deepgb
