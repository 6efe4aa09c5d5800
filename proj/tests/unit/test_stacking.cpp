#include "../support/properties.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace wps;
using wps::testing::max_abs_diff;

namespace {

std::vector<double> ranks(const std::vector<double>& v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
        i = j + 1;
    }
    return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b)
{
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> column(const Matrix& z, std::size_t l)
{
    std::vector<double> c(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) c[i] = z(i, l);
    return c;
}

const LearnerSpec kLogistic = LearnerSpec::make(LearnerKind::Logistic, {}, 0, "logistic");

} // namespace

TEST_CASE("fold assignment")
{
    const std::vector<double> e{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    const auto f = make_cv_folds(e, 5, 3);
    for (std::size_t k = 0; k < 5; ++k) {
        const auto rows = f.rows_in(k);
        REQUIRE(rows.size() == 2);
        CHECK(e[rows[0]] + e[rows[1]] == 1.0);
    }
    const auto loo = make_cv_folds(e, 10, 3, false);
    for (std::size_t k = 0; k < 10; ++k) CHECK(loo.rows_in(k).size() == 1);
    CHECK(make_cv_folds(e, 5, 3).fold_of == f.fold_of);
    CHECK(make_cv_folds(e, 5, 4).fold_of != f.fold_of);
    // Stratified folds need both classes in every fold.
    CHECK_THROWS(make_cv_folds(e, 6, 3));
}

TEST_CASE("stratified fold sizes differ by at most one per class")
{
    const Cohort c = testing::conditional_dgp_cohort(37, 1.6, 4);
    const auto f = make_cv_folds(c.exposure(), 10, 9);
    for (double cls : {0.0, 1.0}) {
        std::vector<std::size_t> count(10, 0);
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c.exposure()[i] == cls) ++count[f.fold_of[i]];
        const auto [lo, hi] = std::minmax_element(count.begin(), count.end());
        CHECK(*hi - *lo <= 1);
        CHECK(*lo >= 1);
    }
}

TEST_CASE("out-of-fold logistic predictions track the true propensity")
{
    const Cohort c = testing::random_dgp_cohort(3000, 55);
    const auto folds = make_cv_folds(c.exposure(), 10, 1);
    const auto cv = cross_validated_predictions(c, uniform_weights(c), {kLogistic}, folds);
    CHECK(spearman(column(cv.z, 0), *c.true_propensity()) > 0.9);
    const auto v = testing::out_of_fold_purity(cv);
    INFO(v.detail);
    CHECK(v.ok);
}

TEST_CASE("cross-validated prediction structure")
{
    const Cohort c = testing::conditional_dgp_cohort(60, 1.0, 5);
    const auto w = compute_observation_weights(c, 0.37);
    const auto cv = cross_validated_predictions(c, w, {kLogistic}, make_cv_folds(c.exposure(), 2, 5));
    CHECK(cv.z.rows() == c.size());
    CHECK(cv.z.cols() == 1);
    CHECK(testing::out_of_fold_purity(cv).ok);

    const auto tree = LearnerSpec::make(LearnerKind::Tree, {}, 0, "tree");
    const auto dup = cross_validated_predictions(c, w, {kLogistic, tree, kLogistic}, make_cv_folds(c.exposure(), 5, 5), 2);
    CHECK(column(dup.z, 0) == column(dup.z, 2));
    CHECK(testing::out_of_fold_purity(dup).ok);
}

TEST_CASE("meta weights: one learner")
{
    Matrix z(4, 1);
    for (std::size_t i = 0; i < 4; ++i) z(i, 0) = 0.2 + 0.1 * i;
    const std::vector<double> e{0, 1, 0, 1}, w(4, 1.0);
    for (auto kind : {LossKind::NegLogLikelihood, LossKind::SquaredError}) {
        const auto m = solve_meta_weights(z, e, w, LossFunction{kind});
        REQUIRE(m.alpha.size() == 1);
        CHECK(m.alpha[0] == 1.0);
    }
}

TEST_CASE("meta weights: simplex, vertex dominance, identical columns")
{
    const Cohort c = testing::conditional_dgp_cohort(150, 1.0, 6);
    const auto w = compute_observation_weights(c, 0.37);
    auto lib = reduced_library();
    lib.push_back(parse_learner("nnet2"));
    const auto cv = cross_validated_predictions(c, w, seeded_library(lib, 6), make_cv_folds(c.exposure(), 5, 6));
    for (auto kind : {LossKind::NegLogLikelihood, LossKind::SquaredError}) {
        const LossFunction loss{kind};
        const auto m = solve_meta_weights(cv.z, c.exposure(), w.values(), loss);
        const auto s = testing::alpha_on_simplex(m.alpha);
        INFO(s.detail);
        CHECK(s.ok);
        for (std::size_t l = 0; l < lib.size(); ++l) {
            const double vertex = weighted_mean_loss(loss, column(cv.z, l), c.exposure(), w.values());
            CHECK(m.objective <= vertex + 1e-8);
        }
    }

    // Duplicating a column cannot change the combined prediction.
    Matrix z2(c.size(), 2);
    const auto col = column(cv.z, 0);
    for (std::size_t i = 0; i < c.size(); ++i) z2(i, 0) = z2(i, 1) = col[i];
    const auto m2 = solve_meta_weights(z2, c.exposure(), w.values(), LossFunction{});
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(std::abs(m2.alpha[0] * col[i] + m2.alpha[1] * col[i] - col[i]) <= 1e-8);
    }
}

TEST_CASE("single-learner super learner equals the full-data fit")
{
    const Cohort c = testing::conditional_dgp_cohort(200, 2.0, 7);
    const auto w = compute_observation_weights(c, 0.37);
    const auto fit = fit_super_learner(c, w, {kLogistic}, 10, LossFunction{}, 7);
    CHECK(fit.alpha == std::vector<double>{1.0});
    const auto direct = fit_logistic(make_training_set(c, w), kLogistic).predict(c.covariates());
    CHECK(max_abs_diff(predict_ensemble(fit, c.covariates()), direct) <= 1e-12);
}

TEST_CASE("uniform-weight reduction")
{
    const auto v = testing::uniform_weight_reduction(reduced_library(), 8, 1e-8);
    INFO(v.detail);
    CHECK(v.ok);
}

TEST_CASE("ensemble prediction is a convex combination")
{
    const Cohort c = testing::conditional_dgp_cohort(120, 1.0, 9);
    const auto w = compute_observation_weights(c, 0.37);
    auto fit = fit_super_learner(c, w, reduced_library(), 5, LossFunction{}, 9);
    const Matrix grid = sim::enumerate_patterns({}).patterns;
    std::vector<std::vector<double>> base;
    for (const auto& m : fit.base_models) base.push_back(m.predict(grid));
    const auto p = predict_ensemble(fit, grid);
    for (std::size_t i = 0; i < grid.rows(); ++i) {
        double lo = 1.0, hi = 0.0;
        for (const auto& b : base) {
            lo = std::min(lo, b[i]);
            hi = std::max(hi, b[i]);
        }
        CHECK(p[i] >= lo - 1e-12);
        CHECK(p[i] <= hi + 1e-12);
    }
    fit.alpha = {1.0, 0.0, 0.0};
    CHECK(max_abs_diff(predict_ensemble(fit, grid), base[0]) <= 1e-15);
}

TEST_CASE("alpha concentrates on the linear learners on simulated cohorts")
{
    std::vector<std::string> names{"logistic", "lasso", "tree", "nnet2"};
    std::vector<LearnerSpec> lib;
    for (const auto& n : names) lib.push_back(parse_learner(n));
    double linear = 0.0, nonlinear = 0.0;
    for (std::uint64_t rep = 0; rep < 4; ++rep) {
        const Cohort c = testing::conditional_dgp_cohort(200, 1.0, 300 + rep);
        const auto fit = fit_super_learner(c, compute_observation_weights(c, 0.37), lib, 10, LossFunction{}, rep);
        linear += fit.alpha[0] + fit.alpha[1];
        nonlinear += fit.alpha[2] + fit.alpha[3];
    }
    CHECK(linear > nonlinear);
}

TEST_CASE("external cross-validation")
{
    const Cohort c = testing::conditional_dgp_cohort(100, 1.0, 10);
    const auto w = compute_observation_weights(c, 0.37);

    SUBCASE("single learner reduces to plain cross-validation")
    {
        const auto ext = external_cv_super_learner(c, w, {kLogistic}, 5, 3, LossFunction{}, 10);
        const auto cv = cross_validated_predictions(c, w, {kLogistic}, ext.outer_folds);
        CHECK(max_abs_diff(ext.predictions, column(cv.z, 0)) <= 1e-12);
    }
    SUBCASE("each fold is predicted by a procedure that never saw it")
    {
        const auto lib = reduced_library();
        const auto ext = external_cv_super_learner(c, w, lib, 4, 3, LossFunction{}, 10);
        // Redo one fold by hand with the fold's rows removed from the data.
        const std::size_t f = 2;
        const auto train = ext.outer_folds.rows_outside(f);
        const auto test = ext.outer_folds.rows_in(f);
        std::vector<double> e;
        for (auto r : train) e.push_back(c.exposure()[r]);
        const auto fit = fit_super_learner(c.covariates().select_rows(train), e, w.subset(train), lib, 3, LossFunction{},
                                           mix_seed(10, f + 1));
        const auto p = predict_ensemble(fit, c.covariates().select_rows(test));
        for (std::size_t t = 0; t < test.size(); ++t) CHECK(ext.predictions[test[t]] == p[t]);
        CHECK(ext.fold_alpha.size() == 4);
    }
}

TEST_CASE("external ensemble loss is no worse than the worst library member")
{
    const auto lib = reduced_library();
    int wins = 0;
    const int reps = 20;
    double ens_sum = 0.0, worst_sum = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        const Cohort c = testing::random_dgp_cohort(3000, 500 + rep);
        const auto w = uniform_weights(c);
        const auto ext = external_cv_super_learner(c, w, lib, 5, 5, LossFunction{}, rep);
        const auto cv = cross_validated_predictions(c, w, seeded_library(lib, rep), ext.outer_folds);
        double worst = 0.0;
        for (std::size_t l = 0; l < lib.size(); ++l) {
            worst = std::max(worst, weighted_mean_loss(LossFunction{}, column(cv.z, l), c.exposure(), w.values()));
        }
        wins += ext.loss <= worst;
        ens_sum += ext.loss;
        worst_sum += worst;
    }
    CHECK(ens_sum / reps <= worst_sum / reps);
    CHECK(wins >= reps - 1);
}
