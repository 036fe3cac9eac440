#include "finlit/rng.hpp"
#include "finlit/stat_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace finlit {

namespace {

struct TreeNode {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0; // go left when x[feature] <= threshold
    double value = 0.0;     // leaf mean
    int left = -1;
    int right = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(const Eigen::RowVectorXd& x) const {
        int idx = 0;
        while (nodes[static_cast<size_t>(idx)].feature >= 0) {
            const auto& nd = nodes[static_cast<size_t>(idx)];
            idx = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<size_t>(idx)].value;
    }
};

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // variance reduction, > 0 when usable
};

double subset_mean(const Eigen::VectorXd& Y, const std::vector<int>& idx) {
    double s = 0.0;
    for (int i : idx) s += Y[i];
    return s / static_cast<double>(idx.size());
}

// Best variance-reduction split over a random feature subset.
SplitChoice best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                       const std::vector<int>& idx, int min_leaf,
                       const std::vector<int>& features) {
    SplitChoice best;
    const auto m = static_cast<double>(idx.size());

    double total_sum = 0.0;
    for (int i : idx) total_sum += Y[i];

    std::vector<std::pair<double, double>> vals;  // (x, y) sorted by x
    vals.reserve(idx.size());

    for (int f : features) {
        vals.clear();
        for (int i : idx) vals.emplace_back(X(i, f), Y[i]);
        std::sort(vals.begin(), vals.end());

        double left_sum = 0.0;
        for (size_t k = 0; k + 1 < vals.size(); ++k) {
            left_sum += vals[k].second;
            if (vals[k].first == vals[k + 1].first) continue;
            const auto nl = static_cast<double>(k + 1);
            const double nr = m - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            // maximizing sum_l^2/n_l + sum_r^2/n_r maximizes variance reduction
            const double right_sum = total_sum - left_sum;
            const double score = left_sum * left_sum / nl + right_sum * right_sum / nr
                                 - total_sum * total_sum / m;
            if (score > best.score) {
                best.score = score;
                best.feature = f;
                best.threshold = 0.5 * (vals[k].first + vals[k + 1].first);
            }
        }
    }
    return best;
}

int grow(Tree& tree, const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
         std::vector<int>& idx, int depth, const ForestConfig& cfg,
         int n_features_per_split, std::mt19937_64& eng) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    if (depth >= cfg.max_depth || static_cast<int>(idx.size()) < 2 * cfg.min_leaf) {
        tree.nodes[static_cast<size_t>(node_id)].value = subset_mean(Y, idx);
        return node_id;
    }

    const int d = static_cast<int>(X.cols());
    std::vector<int> features(static_cast<size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), eng);
    features.resize(static_cast<size_t>(n_features_per_split));
    std::sort(features.begin(), features.end());

    SplitChoice split = best_split(X, Y, idx, cfg.min_leaf, features);
    if (split.feature < 0) {
        tree.nodes[static_cast<size_t>(node_id)].value = subset_mean(Y, idx);
        return node_id;
    }

    std::vector<int> left_idx, right_idx;
    for (int i : idx)
        (X(i, split.feature) <= split.threshold ? left_idx : right_idx).push_back(i);

    tree.nodes[static_cast<size_t>(node_id)].feature = split.feature;
    tree.nodes[static_cast<size_t>(node_id)].threshold = split.threshold;
    const int l = grow(tree, X, Y, left_idx, depth + 1, cfg, n_features_per_split, eng);
    const int r = grow(tree, X, Y, right_idx, depth + 1, cfg, n_features_per_split, eng);
    tree.nodes[static_cast<size_t>(node_id)].left = l;
    tree.nodes[static_cast<size_t>(node_id)].right = r;
    return node_id;
}

Tree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
              const ForestConfig& cfg, std::uint64_t tree_seed) {
    auto eng = std::mt19937_64(tree_seed);
    const int n = static_cast<int>(X.rows());
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> idx(static_cast<size_t>(n));
    for (int& i : idx) i = pick(eng);  // bootstrap sample

    const int d = static_cast<int>(X.cols());
    const int mtry = std::max(1, d / 3);

    Tree tree;
    grow(tree, X, Y, idx, 0, cfg, mtry, eng);
    return tree;
}

class ForestModel final : public RegressionModel {
public:
    ForestModel(std::vector<Tree> trees, ForestConfig cfg)
        : trees_(std::move(trees)), cfg_(cfg) {}

    double predict_one(const Eigen::RowVectorXd& x) const override {
        double s = 0.0;
        for (const auto& t : trees_) s += t.predict(x);
        return s / static_cast<double>(trees_.size());
    }

    ModelKind kind() const override { return ModelKind::forest; }

    std::string serialize() const override {
        std::ostringstream os;
        os.precision(17);
        os << "forest trees=" << trees_.size() << " max_depth=" << cfg_.max_depth
           << " min_leaf=" << cfg_.min_leaf << " seed=" << cfg_.seed << '\n';
        for (const auto& t : trees_) {
            for (const auto& nd : t.nodes) {
                if (nd.feature < 0)
                    os << "L " << nd.value << ';';
                else
                    os << 'S' << nd.feature << ' ' << nd.threshold << ' ' << nd.left
                       << ' ' << nd.right << ';';
            }
            os << '\n';
        }
        return os.str();
    }

private:
    std::vector<Tree> trees_;
    ForestConfig cfg_;
};

}  // namespace

std::unique_ptr<RegressionModel> fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                            const ForestConfig& cfg) {
    if (X.rows() < 2 * cfg.min_leaf)
        throw std::invalid_argument("fit_forest: need n >= 2*min_leaf");
    if (Y.size() != X.rows()) throw std::invalid_argument("fit_forest: Y length != n");

    std::vector<Tree> trees(static_cast<size_t>(cfg.n_trees));
    // per-tree seeds keep the result identical for any thread count
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(cfg.n_threads > 0 ? cfg.n_threads : omp_get_max_threads())
#endif
    for (int t = 0; t < cfg.n_trees; ++t)
        trees[static_cast<size_t>(t)] =
            fit_tree(X, Y, cfg, mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));

    return std::make_unique<ForestModel>(std::move(trees), cfg);
}

}  // namespace finlit
