#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace wps {

struct FoldAssignment {
    std::vector<std::size_t> fold_of; // 0-based fold index per row
    std::size_t k = 0;
    std::uint64_t seed = 0;
    bool stratified = false;

    std::vector<std::size_t> rows_in(std::size_t fold) const;
    std::vector<std::size_t> rows_outside(std::size_t fold) const;
};

// Seeded k-fold partition. Stratified assignment shuffles each exposure
// class separately and deals its rows to folds round-robin; otherwise all
// rows are shuffled and dealt together.
FoldAssignment make_cv_folds(std::span<const double> exposure, std::size_t k, std::uint64_t seed,
                             bool stratified = true);

} // namespace wps
