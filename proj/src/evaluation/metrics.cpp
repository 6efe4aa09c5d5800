#include "wps/evaluation.hpp"

#include <cmath>
#include <stdexcept>

namespace wps::eval {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("metrics: length mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] >= 0.0 && a[i] <= 1.0) || !(b[i] >= 0.0 && b[i] <= 1.0)) {
            throw std::invalid_argument("metrics: probabilities must lie in [0, 1] (index " + std::to_string(i) + ")");
        }
    }
}

} // namespace

std::vector<double> pointwise_bias(std::span<const double> true_p, std::span<const double> est_p)
{
    check_pair(true_p, est_p);
    std::vector<double> out(true_p.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(true_p[i] - est_p[i]);
    return out;
}

std::vector<double> pointwise_mse(std::span<const double> true_p, std::span<const double> est_p)
{
    check_pair(true_p, est_p);
    std::vector<double> out(true_p.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (true_p[i] - est_p[i]) * (true_p[i] - est_p[i]);
    return out;
}

double relative_efficiency(double mse_unweighted, double mse_weighted)
{
    if (!(mse_unweighted > 0.0) || !(mse_weighted > 0.0)) {
        throw std::invalid_argument("relative efficiency needs two positive MSE values");
    }
    return mse_unweighted / mse_weighted;
}

} // namespace wps::eval
