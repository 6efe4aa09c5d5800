#include "wps/folds.hpp"

#include "wps/rng.hpp"

#include <stdexcept>
#include <string>

namespace wps {

std::vector<std::size_t> FoldAssignment::rows_in(std::size_t fold) const
{
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] == fold) rows.push_back(i);
    }
    return rows;
}

std::vector<std::size_t> FoldAssignment::rows_outside(std::size_t fold) const
{
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] != fold) rows.push_back(i);
    }
    return rows;
}

FoldAssignment make_cv_folds(std::span<const double> exposure, std::size_t k, std::uint64_t seed, bool stratified)
{
    if (k < 2) throw std::invalid_argument("cv folds: k must be at least 2");
    const std::size_t n = exposure.size();
    if (n < k) throw std::invalid_argument("cv folds: fewer rows than folds");

    FoldAssignment folds{std::vector<std::size_t>(n, 0), k, seed, stratified};
    RngStream rng(seed, 0xF01D);

    if (!stratified) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t r = 0; r < n; ++r) folds.fold_of[order[r]] = r % k;
        return folds;
    }

    std::vector<std::size_t> exposed, controls;
    for (std::size_t i = 0; i < n; ++i) {
        if (exposure[i] == 1.0) {
            exposed.push_back(i);
        } else if (exposure[i] == 0.0) {
            controls.push_back(i);
        } else {
            throw std::invalid_argument("cv folds: exposure at row " + std::to_string(i) + " is not 0 or 1");
        }
    }
    if (exposed.size() < k || controls.size() < k) {
        throw std::invalid_argument("cv folds: stratification needs at least k=" + std::to_string(k) +
                                    " rows per exposure class (exposed " + std::to_string(exposed.size()) +
                                    ", controls " + std::to_string(controls.size()) + ")");
    }
    rng.shuffle(exposed);
    rng.shuffle(controls);
    for (std::size_t r = 0; r < exposed.size(); ++r) folds.fold_of[exposed[r]] = r % k;
    // Continue dealing where the exposed class stopped so total fold sizes
    // also stay within one of each other.
    const std::size_t offset = exposed.size() % k;
    for (std::size_t r = 0; r < controls.size(); ++r) folds.fold_of[controls[r]] = (offset + r) % k;
    return folds;
}

} // namespace wps
