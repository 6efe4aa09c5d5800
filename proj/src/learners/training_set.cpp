#include "wps/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace wps {

double TrainingSet::total_weight() const noexcept { return std::accumulate(w.begin(), w.end(), 0.0); }

TrainingSet make_training_set(const Cohort& cohort, const WeightVector& weights)
{
    if (weights.size() != cohort.size()) throw std::invalid_argument("weights length does not match cohort size");
    return TrainingSet{cohort.covariates(), std::vector<double>(cohort.exposure().begin(), cohort.exposure().end()),
                       std::vector<double>(weights.values().begin(), weights.values().end())};
}

TrainingSet make_training_set(const Matrix& x, std::span<const double> e, std::span<const double> w)
{
    if (x.rows() != e.size() || e.size() != w.size()) throw std::invalid_argument("training set: length mismatch");
    return TrainingSet{x, std::vector<double>(e.begin(), e.end()), std::vector<double>(w.begin(), w.end())};
}

void validate_training_set(const TrainingSet& data)
{
    const std::size_t n = data.size();
    if (n == 0) throw std::invalid_argument("training set is empty");
    if (data.x.rows() != n || data.w.size() != n) throw std::invalid_argument("training set: length mismatch");
    bool any0 = false, any1 = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (data.e[i] == 1.0) {
            any1 = true;
        } else if (data.e[i] == 0.0) {
            any0 = true;
        } else {
            throw std::invalid_argument("training set: exposure at row " + std::to_string(i) + " is not 0 or 1");
        }
        if (!(data.w[i] > 0.0) || !std::isfinite(data.w[i])) {
            throw std::invalid_argument("training set: weight at row " + std::to_string(i) + " is not positive");
        }
    }
    if (!(any0 && any1)) throw std::invalid_argument("training set: exposure is degenerate (single class)");
    for (double v : data.x.data()) {
        if (!std::isfinite(v)) throw std::invalid_argument("training set: non-finite covariate");
    }
}

std::vector<std::size_t> group_duplicates(const TrainingSet& data, std::size_t& n_groups)
{
    const std::size_t n = data.size();
    const std::size_t p = data.num_covariates();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key_less = [&](std::size_t a, std::size_t b) {
        const auto ra = data.x.row(a);
        const auto rb = data.x.row(b);
        for (std::size_t j = 0; j < p; ++j) {
            if (ra[j] != rb[j]) return ra[j] < rb[j];
        }
        return data.e[a] < data.e[b];
    };
    std::stable_sort(order.begin(), order.end(), key_less);

    std::vector<std::size_t> group(n);
    n_groups = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0 && key_less(order[k - 1], order[k])) ++n_groups;
        group[order[k]] = n_groups;
    }
    if (n > 0) ++n_groups;
    return group;
}

TrainingSet collapse_duplicates(const TrainingSet& data)
{
    std::size_t n_groups = 0;
    const std::vector<std::size_t> group = group_duplicates(data, n_groups);
    const std::size_t p = data.num_covariates();
    TrainingSet out{Matrix(n_groups, p), std::vector<double>(n_groups, 0.0), std::vector<double>(n_groups, 0.0)};
    std::vector<bool> seen(n_groups, false);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::size_t g = group[i];
        if (!seen[g]) {
            seen[g] = true;
            const auto row = data.x.row(i);
            std::copy(row.begin(), row.end(), out.x.row(g).begin());
            out.e[g] = data.e[i];
        }
    }
    // Sum in a fixed (row) order so results do not depend on sort internals.
    for (std::size_t i = 0; i < data.size(); ++i) out.w[group[i]] += data.w[i];
    return out;
}

} // namespace wps
