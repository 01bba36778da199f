#ifndef DEPTHSIGN_CLASSIFIER_HPP
#define DEPTHSIGN_CLASSIFIER_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "depthsign/errors.hpp"
#include "depthsign/matrix.hpp"
#include "depthsign/optimizer.hpp"
#include "depthsign/rng.hpp"

namespace depthsign {

/// Softmax output layer: classes x features weights plus per-class bias.
struct SoftmaxParams {
    Matrix weight; // classes x features
    Matrix bias;   // classes x 1

    std::size_t class_count() const { return weight.rows(); }
    std::size_t feature_count() const { return weight.cols(); }
};

struct SoftmaxHyper {
    std::size_t epochs_max = 400;
    double learning_rate = 0.1;
    double momentum = 0.9;
    double l2_weight = 1e-4;
    std::size_t batch_size = 64;
};

inline SoftmaxParams init_softmax(std::size_t classes, std::size_t features,
                                  RngState& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(classes + features));
    SoftmaxParams p;
    p.weight = rand_uniform(rng, classes, features, -bound, bound);
    p.bias = Matrix(classes, 1);
    return p;
}

/// Column-wise softmax: g_m = exp(z_m) / sum_k exp(z_k).
///
/// The per-column maximum is subtracted before exponentiation (an identity,
/// since softmax is shift invariant) and the shifted exponent is floored at
/// -700 so no entry underflows to an exact zero. Every column sums to 1 and
/// every entry is strictly positive, for arbitrarily extreme logits.
inline Matrix softmax(const Matrix& z) {
    if (z.rows() == 0 || z.cols() == 0)
        throw ShapeError("softmax: need at least one class row and one sample column");
    Matrix p(z.rows(), z.cols());
    for (std::size_t c = 0; c < z.cols(); ++c) {
        double zmax = z(0, c);
        for (std::size_t r = 1; r < z.rows(); ++r) zmax = std::max(zmax, z(r, c));
        double total = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r) {
            const double e = std::exp(std::max(z(r, c) - zmax, -700.0));
            p(r, c) = e;
            total += e;
        }
        for (std::size_t r = 0; r < z.rows(); ++r) p(r, c) /= total;
    }
    return p;
}

inline Matrix softmax_logits(const SoftmaxParams& p, const Matrix& x) {
    if (x.rows() != p.feature_count())
        throw ShapeError("softmax layer: input has " + std::to_string(x.rows()) +
                         " rows, expected " + std::to_string(p.feature_count()));
    return add_col(matmul(p.weight, x), p.bias);
}

namespace detail {
/// Mean cross-entropy of targets t against softmax(z), evaluated through
/// log-sum-exp so no logarithm ever sees zero.
inline double cross_entropy(const Matrix& z, const Matrix& t) {
    require_same_shape(z, t, "cross_entropy");
    const double n = static_cast<double>(z.cols());
    double total = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) {
        double zmax = z(0, c);
        for (std::size_t r = 1; r < z.rows(); ++r) zmax = std::max(zmax, z(r, c));
        double se = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r) se += std::exp(z(r, c) - zmax);
        const double lse = zmax + std::log(se);
        for (std::size_t r = 0; r < z.rows(); ++r)
            if (t(r, c) != 0.0) total += t(r, c) * (lse - z(r, c));
    }
    return total / n;
}
} // namespace detail

/// Cross-entropy of the layer's predictions plus L2 decay on the weights.
inline double xent_objective(const SoftmaxParams& p, const Matrix& x, const Matrix& t,
                             double l2_weight) {
    const Matrix z = softmax_logits(p, x);
    if (t.rows() != p.class_count() || t.cols() != x.cols())
        throw ShapeError("xent_objective: targets " + t.shape_str() + " do not match " +
                         std::to_string(p.class_count()) + " classes x " +
                         std::to_string(x.cols()) + " samples");
    return detail::cross_entropy(z, t) + 0.5 * l2_weight * frobenius_sq(p.weight);
}

/// Analytic gradient; in logit space it is (softmax(z) - t) / n.
inline SoftmaxParams xent_gradient(const SoftmaxParams& p, const Matrix& x,
                                   const Matrix& t, double l2_weight) {
    const Matrix z = softmax_logits(p, x);
    if (t.rows() != p.class_count() || t.cols() != x.cols())
        throw ShapeError("xent_gradient: targets " + t.shape_str() + " do not match " +
                         std::to_string(p.class_count()) + " classes x " +
                         std::to_string(x.cols()) + " samples");
    const double n = static_cast<double>(x.cols());
    Matrix dz = subtract(softmax(z), t);
    for (double& v : dz.data()) v /= n;

    SoftmaxParams g;
    g.weight = add(matmul(dz, transpose(x)), scale(p.weight, l2_weight));
    g.bias = row_sums(dz);
    return g;
}

namespace detail {
inline std::vector<Matrix> sm_pack(const SoftmaxParams& p) { return {p.weight, p.bias}; }

inline SoftmaxParams sm_unpack(const std::vector<Matrix>& v) {
    SoftmaxParams p;
    p.weight = v[0];
    p.bias = v[1];
    return p;
}
} // namespace detail

/// Train the softmax layer with the same optimizer contract as the
/// autoencoders: mini-batch momentum SGD, best-validation selection.
inline std::pair<SoftmaxParams, TrainTrace> train_softmax(
    const Matrix& x_train, const Matrix& t_train, const Matrix& x_val,
    const Matrix& t_val, const SoftmaxHyper& hyp, RngState& rng) {
    if (hyp.epochs_max == 0)
        throw ParameterError("train_softmax: epochs_max must be at least 1");
    if (x_train.rows() != x_val.rows())
        throw ShapeError("train_softmax: train rows " + std::to_string(x_train.rows()) +
                         " differ from validation rows " + std::to_string(x_val.rows()));
    if (t_train.rows() != t_val.rows())
        throw ShapeError("train_softmax: target class counts differ between partitions");
    if (t_train.cols() != x_train.cols() || t_val.cols() != x_val.cols())
        throw ShapeError("train_softmax: target columns do not match sample columns");
    if (x_train.cols() == 0 || x_val.cols() == 0)
        throw ShapeError("train_softmax: empty training or validation batch");

    SoftmaxParams init = init_softmax(t_train.rows(), x_train.rows(), rng);

    SgdProblem problem;
    problem.sample_count = x_train.cols();
    problem.train_objective = [&](const std::vector<Matrix>& v) {
        return xent_objective(detail::sm_unpack(v), x_train, t_train, hyp.l2_weight);
    };
    problem.val_objective = [&](const std::vector<Matrix>& v) {
        return xent_objective(detail::sm_unpack(v), x_val, t_val, hyp.l2_weight);
    };
    problem.batch_gradient = [&](const std::vector<Matrix>& v,
                                 std::span<const std::size_t> batch) {
        const Matrix xb = slice_cols(x_train, batch);
        const Matrix tb = slice_cols(t_train, batch);
        return detail::sm_pack(xent_gradient(detail::sm_unpack(v), xb, tb, hyp.l2_weight));
    };

    SgdOptions opt{hyp.epochs_max, hyp.learning_rate, hyp.momentum, hyp.batch_size};
    auto [best, trace] = minibatch_sgd(detail::sm_pack(init), problem, opt, rng);
    return {detail::sm_unpack(best), std::move(trace)};
}

} // namespace depthsign

#endif // DEPTHSIGN_CLASSIFIER_HPP
