#ifndef DEPTHSIGN_AUTOENCODER_HPP
#define DEPTHSIGN_AUTOENCODER_HPP

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "depthsign/errors.hpp"
#include "depthsign/matrix.hpp"
#include "depthsign/optimizer.hpp"
#include "depthsign/rng.hpp"

namespace depthsign {

/// Logistic sigmoid, overflow-safe. Outputs are pinned to the open interval
/// (0, 1): beyond |z| of roughly 37 the exact value is closer to 0 or 1 than
/// the pin, but downstream logarithms and the strict-range invariant need
/// both endpoints excluded.
inline double sigmoid(double z) {
    double s;
    if (z >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        s = e / (1.0 + e);
    }
    constexpr double pin = 1e-12;
    return std::clamp(s, pin, 1.0 - pin);
}

inline Matrix sigmoid(const Matrix& z) {
    return elementwise(z, [](double v) { return sigmoid(v); });
}

/// Encoder/decoder weights of one autoencoder. The decoder is independent of
/// the encoder (no weight tying).
struct AutoencoderParams {
    Matrix enc_weight; // hidden x input
    Matrix enc_bias;   // hidden x 1
    Matrix dec_weight; // input x hidden
    Matrix dec_bias;   // input x 1

    std::size_t input_size() const { return enc_weight.cols(); }
    std::size_t hidden_size() const { return enc_weight.rows(); }
};

struct AeHyper {
    std::size_t hidden = 100;
    std::size_t epochs_max = 400;
    double learning_rate = 0.1;
    double momentum = 0.9;
    double l2_weight = 1e-4;      // lambda
    double sparsity_target = 0.05; // rho
    double sparsity_weight = 1.0;  // beta
    std::size_t batch_size = 64;
};

namespace detail {
inline void validate_ae_hyper(const AeHyper& hyp) {
    if (hyp.hidden == 0) throw ParameterError("autoencoder: hidden size must be positive");
    if (hyp.epochs_max == 0) throw ParameterError("autoencoder: epochs_max must be at least 1");
    if (hyp.batch_size == 0) throw ParameterError("autoencoder: batch_size must be positive");
    if (!(hyp.learning_rate > 0.0))
        throw ParameterError("autoencoder: learning_rate must be positive");
    if (hyp.momentum < 0.0 || hyp.momentum >= 1.0)
        throw ParameterError("autoencoder: momentum must lie in [0, 1)");
    if (hyp.l2_weight < 0.0) throw ParameterError("autoencoder: l2_weight must be non-negative");
    if (!(hyp.sparsity_target > 0.0) || !(hyp.sparsity_target < 1.0))
        throw ParameterError("autoencoder: sparsity_target must lie in (0, 1)");
    if (hyp.sparsity_weight < 0.0)
        throw ParameterError("autoencoder: sparsity_weight must be non-negative");
}

inline void require_input_rows(const AutoencoderParams& p, const Matrix& x) {
    if (x.rows() != p.input_size())
        throw ShapeError("autoencoder: input has " + std::to_string(x.rows()) +
                         " rows, expected " + std::to_string(p.input_size()));
}

/// KL divergence between Bernoulli rates, rho_hat clamped away from {0, 1}.
inline double bernoulli_kl(double rho, double rho_hat) {
    const double q = std::clamp(rho_hat, 1e-9, 1.0 - 1e-9);
    return rho * std::log(rho / q) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - q));
}
} // namespace detail

/// Uniform Xavier initialization in +-sqrt(6 / (fan_in + fan_out)), zero biases.
inline AutoencoderParams init_autoencoder(std::size_t input, std::size_t hidden,
                                          RngState& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(input + hidden));
    AutoencoderParams p;
    p.enc_weight = rand_uniform(rng, hidden, input, -bound, bound);
    p.enc_bias = Matrix(hidden, 1);
    p.dec_weight = rand_uniform(rng, input, hidden, -bound, bound);
    p.dec_bias = Matrix(input, 1);
    return p;
}

/// h = sigmoid(W_enc x + b_enc), columns preserved.
inline Matrix encode(const AutoencoderParams& p, const Matrix& x) {
    detail::require_input_rows(p, x);
    return sigmoid(add_col(matmul(p.enc_weight, x), p.enc_bias));
}

/// r = sigmoid(W_dec h + b_dec); entries stay in the normalized pixel range.
inline Matrix decode(const AutoencoderParams& p, const Matrix& h) {
    if (h.rows() != p.hidden_size())
        throw ShapeError("autoencoder: code has " + std::to_string(h.rows()) +
                         " rows, expected " + std::to_string(p.hidden_size()));
    return sigmoid(add_col(matmul(p.dec_weight, h), p.dec_bias));
}

/// Mean squared reconstruction error plus L2 weight decay plus the KL
/// sparsity penalty on mean hidden activations.
inline double ae_objective(const AutoencoderParams& p, const Matrix& x,
                           const AeHyper& hyp) {
    detail::require_input_rows(p, x);
    if (x.cols() == 0) throw ShapeError("ae_objective: batch has no columns");
    const double n = static_cast<double>(x.cols());

    const Matrix h = encode(p, x);
    const Matrix r = decode(p, h);
    const double recon = frobenius_sq(subtract(r, x)) / (2.0 * n);
    const double decay = 0.5 * hyp.l2_weight *
                         (frobenius_sq(p.enc_weight) + frobenius_sq(p.dec_weight));
    double sparsity = 0.0;
    if (hyp.sparsity_weight > 0.0) {
        const Matrix rho_hat = row_means(h);
        for (std::size_t j = 0; j < rho_hat.rows(); ++j)
            sparsity += detail::bernoulli_kl(hyp.sparsity_target, rho_hat(j, 0));
        sparsity *= hyp.sparsity_weight;
    }
    return recon + decay + sparsity;
}

/// Analytic partials of ae_objective with respect to every parameter,
/// returned in AutoencoderParams shape.
inline AutoencoderParams ae_gradient(const AutoencoderParams& p, const Matrix& x,
                                     const AeHyper& hyp) {
    detail::require_input_rows(p, x);
    if (x.cols() == 0) throw ShapeError("ae_gradient: batch has no columns");
    const double n = static_cast<double>(x.cols());

    const Matrix h = encode(p, x);
    const Matrix r = decode(p, h);

    // Decoder: d(recon)/d(dec pre-activation) = (r - x)/n * r(1-r)
    Matrix delta_dec = subtract(r, x);
    {
        auto d = delta_dec.data();
        auto rv = r.data();
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = d[i] / n * rv[i] * (1.0 - rv[i]);
    }

    AutoencoderParams g;
    g.dec_weight = add(matmul(delta_dec, transpose(h)), scale(p.dec_weight, hyp.l2_weight));
    g.dec_bias = row_sums(delta_dec);

    // Back through the code: reconstruction term plus the sparsity penalty,
    // whose rho_hat_j is the row mean of h (hence the 1/n factor).
    Matrix dh = matmul(transpose(p.dec_weight), delta_dec);
    if (hyp.sparsity_weight > 0.0) {
        const Matrix rho_hat = row_means(h);
        const double rho = hyp.sparsity_target;
        for (std::size_t j = 0; j < dh.rows(); ++j) {
            const double q = std::clamp(rho_hat(j, 0), 1e-9, 1.0 - 1e-9);
            const double dkl = hyp.sparsity_weight * (-rho / q + (1.0 - rho) / (1.0 - q)) / n;
            for (std::size_t c = 0; c < dh.cols(); ++c) dh(j, c) += dkl;
        }
    }
    Matrix delta_enc = dh;
    {
        auto d = delta_enc.data();
        auto hv = h.data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = d[i] * hv[i] * (1.0 - hv[i]);
    }

    g.enc_weight = add(matmul(delta_enc, transpose(x)), scale(p.enc_weight, hyp.l2_weight));
    g.enc_bias = row_sums(delta_enc);
    return g;
}

namespace detail {
inline std::vector<Matrix> ae_pack(const AutoencoderParams& p) {
    return {p.enc_weight, p.enc_bias, p.dec_weight, p.dec_bias};
}

inline AutoencoderParams ae_unpack(const std::vector<Matrix>& v) {
    AutoencoderParams p;
    p.enc_weight = v[0];
    p.enc_bias = v[1];
    p.dec_weight = v[2];
    p.dec_bias = v[3];
    return p;
}
} // namespace detail

/// Train one sparse autoencoder with mini-batch momentum SGD; the returned
/// parameters are those of the best validation objective.
inline std::pair<AutoencoderParams, TrainTrace> train_ae(const Matrix& x_train,
                                                         const Matrix& x_val,
                                                         const AeHyper& hyp,
                                                         RngState& rng) {
    detail::validate_ae_hyper(hyp);
    if (x_train.rows() != x_val.rows())
        throw ShapeError("train_ae: train rows " + std::to_string(x_train.rows()) +
                         " differ from validation rows " + std::to_string(x_val.rows()));
    if (x_train.cols() == 0 || x_val.cols() == 0)
        throw ShapeError("train_ae: empty training or validation batch");

    AutoencoderParams init = init_autoencoder(x_train.rows(), hyp.hidden, rng);

    SgdProblem problem;
    problem.sample_count = x_train.cols();
    problem.train_objective = [&](const std::vector<Matrix>& v) {
        return ae_objective(detail::ae_unpack(v), x_train, hyp);
    };
    problem.val_objective = [&](const std::vector<Matrix>& v) {
        return ae_objective(detail::ae_unpack(v), x_val, hyp);
    };
    problem.batch_gradient = [&](const std::vector<Matrix>& v,
                                 std::span<const std::size_t> batch) {
        const Matrix xb = slice_cols(x_train, batch);
        return detail::ae_pack(ae_gradient(detail::ae_unpack(v), xb, hyp));
    };

    SgdOptions opt{hyp.epochs_max, hyp.learning_rate, hyp.momentum, hyp.batch_size};
    auto [best, trace] = minibatch_sgd(detail::ae_pack(init), problem, opt, rng);
    return {detail::ae_unpack(best), std::move(trace)};
}

} // namespace depthsign

#endif // DEPTHSIGN_AUTOENCODER_HPP
