#ifndef DEPTHSIGN_TESTS_GRADIENT_CHECK_HPP
#define DEPTHSIGN_TESTS_GRADIENT_CHECK_HPP

// Central finite differences, the independent oracle for every analytic
// gradient in the library.

#include <cmath>
#include <functional>

#include "depthsign/matrix.hpp"

namespace depthsign::testing {

inline constexpr double kFdStep = 1e-5;

/// Central-difference gradient of `objective` with respect to `param`,
/// perturbing one entry at a time.
template <typename Objective>
Matrix fd_gradient(Matrix& param, Objective&& objective, double step = kFdStep) {
    Matrix g(param.rows(), param.cols());
    for (std::size_t r = 0; r < param.rows(); ++r) {
        for (std::size_t c = 0; c < param.cols(); ++c) {
            const double saved = param(r, c);
            param(r, c) = saved + step;
            const double plus = objective();
            param(r, c) = saved - step;
            const double minus = objective();
            param(r, c) = saved;
            g(r, c) = (plus - minus) / (2.0 * step);
        }
    }
    return g;
}

/// Worst elementwise relative error between analytic and numeric gradients.
/// The denominator is floored at 0.01 so near-zero entries are judged by
/// absolute error, which for a correct gradient sits far below any tolerance.
inline double max_relative_error(const Matrix& analytic, const Matrix& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double n = numeric.data()[i];
        const double denom = std::max({std::fabs(a), std::fabs(n), 1e-2});
        worst = std::max(worst, std::fabs(a - n) / denom);
    }
    return worst;
}

} // namespace depthsign::testing

#endif // DEPTHSIGN_TESTS_GRADIENT_CHECK_HPP
