#include "wps/learners.hpp"

#include <cmath>

namespace wps {

void ForestModel::predict(const Matrix& x, std::span<double> out) const
{
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& t : trees) {
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] += t.predict_row(x.row(i));
    }
    const double inv = 1.0 / static_cast<double>(trees.size());
    for (double& v : out) v *= inv;
}

PropensityModel fit_forest(const TrainingSet& data, const LearnerSpec& spec)
{
    validate_training_set(data);
    const std::size_t n = data.size();
    const std::size_t p = data.num_covariates();
    const auto n_trees = static_cast<std::size_t>(spec.get("n_trees"));

    tree::GrowOptions opt;
    opt.cp = 0.0;
    opt.min_leaf_weight = spec.get("min_leaf_size");
    opt.min_split_weight = 2.0 * opt.min_leaf_weight;
    opt.max_depth = static_cast<std::size_t>(spec.get("max_depth"));
    const auto mtry = static_cast<std::size_t>(spec.get("mtry"));
    opt.mtry = mtry > 0 ? std::min(mtry, p) : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(p))));

    // Observation weights enter only through the bootstrap: rows are drawn
    // with probability proportional to weight, then each tree sees plain
    // multiplicities.
    const AliasTable sampler(data.w);
    std::size_t n_groups = 0;
    const std::vector<std::size_t> group = group_duplicates(data, n_groups);
    const TrainingSet units = collapse_duplicates(data);
    auto model = std::make_shared<ForestModel>();
    model->trees.reserve(n_trees);
    model->bootstrap_counts.reserve(n_trees);

    for (std::size_t t = 0; t < n_trees; ++t) {
        const std::uint64_t tree_seed = mix_seed(spec.seed, t);
        RngStream boot_rng(tree_seed, 0);
        RngStream split_rng(tree_seed, 1);

        std::vector<std::uint32_t> counts(n, 0);
        for (std::size_t k = 0; k < n; ++k) ++counts[sampler.draw(boot_rng)];

        // Multiplicities per distinct (x, e) row; equivalent to growing on
        // the expanded bootstrap sample.
        std::vector<double> unit_counts(n_groups, 0.0);
        for (std::size_t i = 0; i < n; ++i) unit_counts[group[i]] += counts[i];
        TrainingSet sample;
        std::vector<std::size_t> rows;
        for (std::size_t g = 0; g < n_groups; ++g) {
            if (unit_counts[g] == 0.0) continue;
            rows.push_back(g);
            sample.e.push_back(units.e[g]);
            sample.w.push_back(unit_counts[g]);
        }
        sample.x = units.x.select_rows(rows);
        model->trees.push_back(tree::grow(sample, opt, &split_rng));
        model->bootstrap_counts.push_back(std::move(counts));
    }

    TrainingMetadata meta{n, p, data.total_weight(), {}, {}};
    return PropensityModel(spec, std::move(model), std::move(meta));
}

} // namespace wps
