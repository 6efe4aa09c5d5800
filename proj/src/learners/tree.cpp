#include "wps/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wps {

std::size_t TreeModel::leaf_of(std::span<const double> x) const
{
    std::size_t k = 0;
    while (nodes[k].feature >= 0) {
        const auto& node = nodes[k];
        k = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                               : node.right);
    }
    return k;
}

double TreeModel::predict_row(std::span<const double> x) const { return nodes[leaf_of(x)].value; }

std::size_t TreeModel::num_leaves() const
{
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

void TreeModel::predict(const Matrix& x, std::span<double> out) const
{
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_row(x.row(i));
}

namespace tree {

namespace {

// 2 W q (1 - q): weighted Gini impurity of a node with total weight W and
// exposed weight W1.
double gini(double w, double w1)
{
    if (w <= 0.0) return 0.0;
    const double q = w1 / w;
    return 2.0 * w * q * (1.0 - q);
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
};

class Grower {
public:
    Grower(const TrainingSet& d, const GrowOptions& opt, RngStream* rng) : d_(d), opt_(opt), rng_(rng)
    {
        features_.resize(d.num_covariates());
        std::iota(features_.begin(), features_.end(), std::size_t{0});
    }

    TreeModel run()
    {
        std::vector<std::size_t> rows(d_.size());
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        double w = 0.0, w1 = 0.0;
        for (std::size_t i : rows) {
            w += d_.w[i];
            w1 += d_.w[i] * d_.e[i];
        }
        root_impurity_ = gini(w, w1);
        build(rows, 0);
        return std::move(model_);
    }

private:
    int build(std::vector<std::size_t>& rows, std::size_t depth)
    {
        double w = 0.0, w1 = 0.0;
        for (std::size_t i : rows) {
            w += d_.w[i];
            w1 += d_.w[i] * d_.e[i];
        }
        const int id = static_cast<int>(model_.nodes.size());
        model_.nodes.push_back(TreeNode{-1, 0.0, -1, -1, w > 0 ? w1 / w : 0.0, w});

        const double impurity = gini(w, w1);
        if (depth >= opt_.max_depth || w < opt_.min_split_weight || impurity <= 0.0) return id;

        const Split best = find_split(rows, w, w1, impurity);
        const double required = opt_.cp * root_impurity_;
        if (best.feature < 0 || best.decrease <= 1e-12 * impurity || best.decrease < required) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t i : rows) {
            (d_.x(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();
        model_.nodes[static_cast<std::size_t>(id)].feature = best.feature;
        model_.nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
        const int l = build(left, depth + 1);
        const int r = build(right, depth + 1);
        model_.nodes[static_cast<std::size_t>(id)].left = l;
        model_.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    Split find_split(const std::vector<std::size_t>& rows, double w, double w1, double impurity)
    {
        std::vector<std::size_t> candidates = features_;
        if (opt_.mtry > 0 && opt_.mtry < candidates.size()) {
            // Partial Fisher-Yates: the first mtry entries become the sample.
            for (std::size_t k = 0; k < opt_.mtry; ++k) {
                const auto j = k + static_cast<std::size_t>(rng_->uniform_index(candidates.size() - k));
                std::swap(candidates[k], candidates[j]);
            }
            candidates.resize(opt_.mtry);
            std::sort(candidates.begin(), candidates.end());
        }

        Split best;
        std::vector<std::size_t> sorted = rows;
        for (std::size_t f : candidates) {
            std::stable_sort(sorted.begin(), sorted.end(),
                             [&](std::size_t a, std::size_t b) { return d_.x(a, f) < d_.x(b, f); });
            double lw = 0.0, lw1 = 0.0;
            for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
                const std::size_t i = sorted[k];
                lw += d_.w[i];
                lw1 += d_.w[i] * d_.e[i];
                const double here = d_.x(i, f);
                const double next = d_.x(sorted[k + 1], f);
                if (here == next) continue;
                const double rw = w - lw;
                if (lw < opt_.min_leaf_weight || rw < opt_.min_leaf_weight) continue;
                const double decrease = impurity - gini(lw, lw1) - gini(rw, w1 - lw1);
                if (decrease > best.decrease) {
                    best.feature = static_cast<int>(f);
                    best.threshold = here + 0.5 * (next - here);
                    best.decrease = decrease;
                }
            }
        }
        return best;
    }

    const TrainingSet& d_;
    GrowOptions opt_;
    RngStream* rng_;
    std::vector<std::size_t> features_;
    double root_impurity_ = 0.0;
    TreeModel model_;
};

} // namespace

TreeModel grow(const TrainingSet& data, const GrowOptions& opt, RngStream* rng)
{
    if (opt.mtry > 0 && opt.mtry < data.num_covariates() && rng == nullptr) {
        throw std::invalid_argument("tree: feature subsampling needs a random stream");
    }
    if (data.size() == 0) throw std::invalid_argument("tree: empty training set");
    const TrainingSet d = collapse_duplicates(data);
    return Grower(d, opt, rng).run();
}

} // namespace tree

PropensityModel fit_tree(const TrainingSet& data, const LearnerSpec& spec)
{
    validate_training_set(data);
    tree::GrowOptions opt;
    opt.cp = spec.get("cp");
    opt.min_split_weight = spec.get("min_split_weight");
    opt.min_leaf_weight = spec.get("min_leaf_weight");
    opt.max_depth = static_cast<std::size_t>(spec.get("max_depth"));
    // Relative slack: normalized fold weights can land a few ulps under the bound.
    if (data.total_weight() < 2.0 * opt.min_split_weight * (1.0 - 1e-9)) {
        throw std::invalid_argument("tree: total weight is below twice the minimum node weight");
    }
    auto model = std::make_shared<TreeModel>(tree::grow(data, opt));
    TrainingMetadata meta{data.size(), data.num_covariates(), data.total_weight(), {}, {}};
    return PropensityModel(spec, std::move(model), std::move(meta));
}

} // namespace wps
