#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "claimcomb/errors.hpp"
#include "claimcomb/numeric.hpp"
#include "claimcomb/solvers.hpp"

namespace claimcomb::solvers {
namespace {

// One candidate split, chosen by squared-error reduction. Ties resolve to
// the lowest feature index, then the leftmost threshold.
struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct NodeStats {
    double sum = 0.0;
    std::size_t count = 0;
};

class TreeBuilder {
public:
    TreeBuilder(const PredictionMatrix& preds, std::size_t min_leaf)
        : preds_(preds), min_leaf_(std::max<std::size_t>(min_leaf, 1)) {
        const std::size_t n = preds.rows();
        sorted_.resize(preds.cols());
        for (std::size_t f = 0; f < preds.cols(); ++f) {
            auto& order = sorted_[f];
            order.resize(n);
            std::iota(order.begin(), order.end(), std::size_t{0});
            const auto col = preds.column(f);
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                if (col[a] != col[b]) return col[a] < col[b];
                return a < b;
            });
        }
    }

    // Fits one depth-limited tree to the residuals.
    RegressionTree build(std::span<const double> residuals, std::size_t max_depth) {
        const std::size_t n = preds_.rows();
        RegressionTree tree;
        node_of_row_.assign(n, 0);

        NodeStats root{compensated_sum(residuals), n};
        tree.nodes.push_back(leaf_node(root));
        std::vector<int> level_nodes = {0};

        for (std::size_t depth = 0; depth < max_depth && !level_nodes.empty(); ++depth) {
            const auto splits = best_splits_for_level(tree, level_nodes, residuals);
            std::vector<int> next_level;
            for (std::size_t v = 0; v < level_nodes.size(); ++v) {
                const int node_id = level_nodes[v];
                const Split& split = splits[v];
                if (split.feature < 0 || split.gain <= 0.0) continue;
                const int left = static_cast<int>(tree.nodes.size());
                const int right = left + 1;
                tree.nodes[node_id].feature = split.feature;
                tree.nodes[node_id].threshold = split.threshold;
                tree.nodes[node_id].left = left;
                tree.nodes[node_id].right = right;
                tree.nodes.push_back({});
                tree.nodes.push_back({});
                next_level.push_back(left);
                next_level.push_back(right);
            }
            if (next_level.empty()) break;
            reassign_rows(tree, residuals);
            fill_leaf_values(tree, residuals);
            level_nodes = std::move(next_level);
        }
        fill_leaf_values(tree, residuals);
        return tree;
    }

private:
    static TreeNode leaf_node(const NodeStats& s) {
        TreeNode node;
        node.value = s.count > 0 ? s.sum / static_cast<double>(s.count) : 0.0;
        return node;
    }

    // One pass per feature over the presorted order computes the best split
    // of every node in the level simultaneously.
    std::vector<Split> best_splits_for_level(const RegressionTree& tree,
                                             const std::vector<int>& level_nodes,
                                             std::span<const double> residuals) {
        std::vector<int> slot(tree.nodes.size(), -1);
        for (std::size_t v = 0; v < level_nodes.size(); ++v) {
            slot[static_cast<std::size_t>(level_nodes[v])] = static_cast<int>(v);
        }
        std::vector<NodeStats> totals(level_nodes.size());
        for (std::size_t i = 0; i < preds_.rows(); ++i) {
            const int s = slot[static_cast<std::size_t>(node_of_row_[i])];
            if (s < 0) continue;
            totals[static_cast<std::size_t>(s)].sum += residuals[i];
            ++totals[static_cast<std::size_t>(s)].count;
        }

        std::vector<Split> best(level_nodes.size());
        std::vector<NodeStats> prefix(level_nodes.size());
        std::vector<double> last_value(level_nodes.size());
        std::vector<bool> has_last(level_nodes.size());

        for (std::size_t f = 0; f < preds_.cols(); ++f) {
            const auto col = preds_.column(f);
            std::fill(prefix.begin(), prefix.end(), NodeStats{});
            std::fill(has_last.begin(), has_last.end(), false);
            for (const std::size_t row : sorted_[f]) {
                const int s = slot[static_cast<std::size_t>(node_of_row_[row])];
                if (s < 0) continue;
                auto& p = prefix[static_cast<std::size_t>(s)];
                const auto& t = totals[static_cast<std::size_t>(s)];
                const double value = col[row];
                if (has_last[static_cast<std::size_t>(s)] &&
                    value > last_value[static_cast<std::size_t>(s)] && p.count >= min_leaf_ &&
                    t.count - p.count >= min_leaf_) {
                    // Candidate split between the previous and current value.
                    const double nl = static_cast<double>(p.count);
                    const double nr = static_cast<double>(t.count - p.count);
                    const double sl = p.sum;
                    const double sr = t.sum - p.sum;
                    const double gain = sl * sl / nl + sr * sr / nr -
                                        t.sum * t.sum / static_cast<double>(t.count);
                    auto& b = best[static_cast<std::size_t>(s)];
                    if (gain > b.gain) {
                        b.gain = gain;
                        b.feature = static_cast<int>(f);
                        b.threshold =
                            0.5 * (last_value[static_cast<std::size_t>(s)] + value);
                    }
                }
                p.sum += residuals[row];
                ++p.count;
                last_value[static_cast<std::size_t>(s)] = value;
                has_last[static_cast<std::size_t>(s)] = true;
            }
        }
        return best;
    }

    void reassign_rows(const RegressionTree& tree, std::span<const double>) {
        for (std::size_t i = 0; i < node_of_row_.size(); ++i) {
            int node = node_of_row_[i];
            while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
                const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
                const double v = preds_(i, static_cast<std::size_t>(nd.feature));
                node = v <= nd.threshold ? nd.left : nd.right;
            }
            node_of_row_[i] = node;
        }
    }

    void fill_leaf_values(RegressionTree& tree, std::span<const double> residuals) {
        std::vector<NodeStats> stats(tree.nodes.size());
        for (std::size_t i = 0; i < node_of_row_.size(); ++i) {
            auto& s = stats[static_cast<std::size_t>(node_of_row_[i])];
            s.sum += residuals[i];
            ++s.count;
        }
        for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
            if (tree.nodes[v].feature < 0) {
                tree.nodes[v].value = stats[v].count > 0
                                          ? stats[v].sum / static_cast<double>(stats[v].count)
                                          : 0.0;
            }
        }
    }

    const PredictionMatrix& preds_;
    std::size_t min_leaf_;
    std::vector<std::vector<std::size_t>> sorted_; // per feature, rows ascending
    std::vector<int> node_of_row_;
};

} // namespace

double RegressionTree::predict_row(const PredictionMatrix& preds, std::size_t row) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& nd = nodes[static_cast<std::size_t>(node)];
        const double v = preds(row, static_cast<std::size_t>(nd.feature));
        node = v <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[static_cast<std::size_t>(node)].value;
}

BoostedModel boost_fit(const PredictionMatrix& preds, std::span<const double> y,
                       const BoostOptions& options) {
    if (preds.rows() != y.size()) {
        throw Error::invalid("boost_fit: response length does not match the prediction rows");
    }
    if (y.empty()) throw Error::invalid("boost_fit: empty response");
    if (options.n_trees < 1) throw Error::invalid("boost_fit: n_trees must be >= 1");
    if (options.max_depth < 1) throw Error::invalid("boost_fit: max_depth must be >= 1");
    if (!(options.learning_rate > 0.0)) {
        throw Error::invalid("boost_fit: learning_rate must be positive");
    }

    BoostedModel model;
    model.learning_rate = options.learning_rate;
    model.base_score = mean(y);
    model.trees.reserve(options.n_trees);
    model.train_mse.reserve(options.n_trees);

    std::vector<double> residuals(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) residuals[i] = y[i] - model.base_score;

    TreeBuilder builder(preds, options.min_leaf);
    for (std::size_t round = 0; round < options.n_trees; ++round) {
        RegressionTree tree = builder.build(residuals, options.max_depth);
        NeumaierSum mse;
        for (std::size_t i = 0; i < residuals.size(); ++i) {
            residuals[i] -= options.learning_rate * tree.predict_row(preds, i);
            mse.add(residuals[i] * residuals[i]);
        }
        model.trees.push_back(std::move(tree));
        model.train_mse.push_back(mse.value() / static_cast<double>(residuals.size()));
    }
    return model;
}

std::vector<double> BoostedModel::predict(const PredictionMatrix& preds) const {
    std::vector<double> out(preds.rows(), base_score);
    for (const auto& tree : trees) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += learning_rate * tree.predict_row(preds, i);
        }
    }
    return out;
}

nlohmann::json BoostedModel::to_json() const {
    nlohmann::json trees_json = nlohmann::json::array();
    for (const auto& tree : trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& nd : tree.nodes) {
            nodes.push_back({{"feature", nd.feature},
                             {"threshold", nd.threshold},
                             {"value", nd.value},
                             {"left", nd.left},
                             {"right", nd.right}});
        }
        trees_json.push_back(std::move(nodes));
    }
    return nlohmann::json{{"base_score", base_score},
                          {"learning_rate", learning_rate},
                          {"trees", std::move(trees_json)}};
}

BoostedModel BoostedModel::from_json(const nlohmann::json& j) {
    BoostedModel model;
    model.base_score = j.at("base_score").get<double>();
    model.learning_rate = j.at("learning_rate").get<double>();
    for (const auto& tree_json : j.at("trees")) {
        RegressionTree tree;
        for (const auto& nd_json : tree_json) {
            TreeNode nd;
            nd.feature = nd_json.at("feature").get<int>();
            nd.threshold = nd_json.at("threshold").get<double>();
            nd.value = nd_json.at("value").get<double>();
            nd.left = nd_json.at("left").get<int>();
            nd.right = nd_json.at("right").get<int>();
            tree.nodes.push_back(nd);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

} // namespace claimcomb::solvers
