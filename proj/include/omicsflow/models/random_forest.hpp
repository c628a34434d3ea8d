#ifndef OMICSFLOW_MODELS_RANDOM_FOREST_HPP
#define OMICSFLOW_MODELS_RANDOM_FOREST_HPP

#include "../core/random.hpp"
#include "spec.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace omicsflow {

/**
 * @brief A single CART classification tree (Gini impurity, axis-aligned thresholds).
 *
 * Nodes are stored in a flat array; a leaf has `feature == -1` and predicts `vote`.
 */
struct DecisionTree {
    struct Node {
        int feature = -1;
        double threshold = 0;
        int left = -1;
        int right = -1;
        int vote = 0;
    };
    std::vector<Node> nodes;

    int predict(std::span<const double> x) const {
        int i = 0;
        while (nodes[i].feature >= 0) {
            i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
        }
        return nodes[i].vote;
    }
};

namespace detail {

struct TreeBuilder {
    const Matrix& x;
    const std::vector<int>& y;
    std::size_t mtry;
    int max_depth;
    std::size_t min_split;
    Rng& rng;
    DecisionTree tree;

    static double gini(std::size_t n1, std::size_t n) {
        if (n == 0) {
            return 0;
        }
        double p = static_cast<double>(n1) / static_cast<double>(n);
        return 2 * p * (1 - p);
    }

    struct Split {
        int feature = -1;
        double threshold = 0;
        double impurity = std::numeric_limits<double>::infinity();
    };

    Split best_split_on(std::size_t feature, std::vector<std::size_t>& idx, std::size_t n1_total) const {
        Split best;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x(a, feature) < x(b, feature); });
        const std::size_t n = idx.size();
        std::size_t left_n1 = 0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            left_n1 += static_cast<std::size_t>(y[idx[k]]);
            const double v = x(idx[k], feature), next = x(idx[k + 1], feature);
            if (v == next) {
                continue;
            }
            const std::size_t nl = k + 1, nr = n - nl;
            const double imp = (static_cast<double>(nl) * gini(left_n1, nl) + static_cast<double>(nr) * gini(n1_total - left_n1, nr)) /
                               static_cast<double>(n);
            if (imp < best.impurity) {
                best.impurity = imp;
                best.feature = static_cast<int>(feature);
                best.threshold = v + (next - v) / 2;
                if (best.threshold >= next) {
                    best.threshold = v;
                }
            }
        }
        return best;
    }

    int build(std::vector<std::size_t> idx, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        std::size_t n1 = 0;
        for (auto i : idx) {
            n1 += static_cast<std::size_t>(y[i]);
        }
        tree.nodes[id].vote = 2 * n1 >= idx.size() ? 1 : 0;
        if (n1 == 0 || n1 == idx.size() || idx.size() < min_split || (max_depth >= 0 && depth >= max_depth)) {
            return id;
        }

        // Sample mtry candidate features; if none of them can split this node, keep drawing from the rest.
        std::vector<std::size_t> features(x.cols());
        std::iota(features.begin(), features.end(), std::size_t{0});
        Split best;
        std::vector<std::size_t> work = idx;
        for (std::size_t k = 0; k < features.size(); ++k) {
            std::size_t pick = k + uniform_index(rng, features.size() - k);
            std::swap(features[k], features[pick]);
            Split s = best_split_on(features[k], work, n1);
            if (s.feature >= 0 && s.impurity < best.impurity) {
                best = s;
            }
            if (k + 1 >= mtry && best.feature >= 0) {
                break;
            }
        }
        if (best.feature < 0) {
            return id;
        }

        std::vector<std::size_t> left, right;
        for (auto i : idx) {
            (x(i, best.feature) <= best.threshold ? left : right).push_back(i);
        }
        tree.nodes[id].feature = best.feature;
        tree.nodes[id].threshold = best.threshold;
        const int l = build(std::move(left), depth + 1);
        const int r = build(std::move(right), depth + 1);
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }
};

}

/**
 * @brief Random forest of CART trees with hard voting.
 *
 * Each tree sees a bootstrap resample (unless `bootstrap = 0`) and considers `mtry` random features per split
 * (default `floor(sqrt(M))`). Tree `t` draws from a stream derived from `(seed, t)`.
 * `max_depth = -1` grows trees until leaves are pure. The score is the fraction of trees voting class 1.
 */
class RandomForest {
public:
    std::vector<DecisionTree> trees;

    static RandomForest fit(const Matrix& x, const std::vector<int>& y, const ModelSpec& spec) {
        check_binary_labels(y, x.rows());
        const auto n_trees = static_cast<std::size_t>(spec.get("n_trees"));
        const int max_depth = static_cast<int>(spec.get("max_depth"));
        const bool bootstrap = spec.get("bootstrap") != 0;
        const auto min_split = static_cast<std::size_t>(spec.get("min_samples_split"));
        double mtry_param = spec.get("mtry");
        std::size_t mtry = std::isnan(mtry_param) ? static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols()))))
                                                  : static_cast<std::size_t>(mtry_param);
        mtry = std::clamp<std::size_t>(mtry, 1, x.cols());

        RandomForest forest;
        for (std::size_t t = 0; t < n_trees; ++t) {
            Rng rng(derive_seed(spec.seed, t));
            std::vector<std::size_t> idx(x.rows());
            if (bootstrap) {
                for (auto& i : idx) {
                    i = uniform_index(rng, x.rows());
                }
            } else {
                std::iota(idx.begin(), idx.end(), std::size_t{0});
            }
            detail::TreeBuilder builder{x, y, mtry, max_depth, min_split, rng, {}};
            builder.build(std::move(idx), 0);
            forest.trees.push_back(std::move(builder.tree));
        }
        return forest;
    }

    std::vector<double> scores(const Matrix& x) const {
        std::vector<double> out(x.rows(), 0.0);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            int votes = 0;
            for (const auto& t : trees) {
                votes += t.predict(x.row(r));
            }
            out[r] = static_cast<double>(votes) / static_cast<double>(trees.size());
        }
        return out;
    }
};

inline void to_json(nlohmann::json& j, const RandomForest& m) {
    j = nlohmann::json::array();
    for (const auto& t : m.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.vote});
        }
        j.push_back(std::move(nodes));
    }
}

inline void from_json(const nlohmann::json& j, RandomForest& m) {
    m.trees.clear();
    for (const auto& jt : j) {
        DecisionTree t;
        for (const auto& jn : jt) {
            t.nodes.push_back({jn.at(0).get<int>(), jn.at(1).get<double>(), jn.at(2).get<int>(), jn.at(3).get<int>(), jn.at(4).get<int>()});
        }
        m.trees.push_back(std::move(t));
    }
}

}

#endif
