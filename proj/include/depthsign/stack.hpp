#ifndef DEPTHSIGN_STACK_HPP
#define DEPTHSIGN_STACK_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "depthsign/autoencoder.hpp"
#include "depthsign/classifier.hpp"
#include "depthsign/data.hpp"
#include "depthsign/errors.hpp"
#include "depthsign/matrix.hpp"
#include "depthsign/optimizer.hpp"
#include "depthsign/rng.hpp"

namespace depthsign {

/// Encoder half kept from a pretrained autoencoder; the decoder is dropped
/// once pretraining is done (it survives only in the on-disk artifacts).
struct EncoderLayer {
    Matrix weight; // out x in
    Matrix bias;   // out x 1
};

/// The assembled deep network: sigmoid encoder layers feeding a softmax head.
struct StackedNetwork {
    std::vector<EncoderLayer> encoders;
    SoftmaxParams head;
    std::vector<std::size_t> layer_dims; // input, hidden..., classes
};

inline void validate_network(const StackedNetwork& net) {
    if (net.layer_dims.size() != net.encoders.size() + 2)
        throw ShapeError("network: layer_dims must list input, each code size and classes");
    for (std::size_t i = 0; i < net.encoders.size(); ++i) {
        const auto& enc = net.encoders[i];
        if (enc.weight.rows() != net.layer_dims[i + 1] ||
            enc.weight.cols() != net.layer_dims[i] || enc.bias.rows() != enc.weight.rows() ||
            enc.bias.cols() != 1)
            throw ShapeError("network: encoder " + std::to_string(i + 1) + " is " +
                             enc.weight.shape_str() + ", expected " +
                             std::to_string(net.layer_dims[i + 1]) + "x" +
                             std::to_string(net.layer_dims[i]));
    }
    const std::size_t features = net.layer_dims[net.layer_dims.size() - 2];
    const std::size_t classes = net.layer_dims.back();
    if (net.head.weight.rows() != classes || net.head.weight.cols() != features ||
        net.head.bias.rows() != classes || net.head.bias.cols() != 1)
        throw ShapeError("network: head is " + net.head.weight.shape_str() + ", expected " +
                         std::to_string(classes) + "x" + std::to_string(features));
}

/// Run the input through every encoder layer.
inline Matrix stack_features(const StackedNetwork& net, const Matrix& x) {
    if (x.rows() != net.layer_dims.front())
        throw ShapeError("stage encoder 1: input has " + std::to_string(x.rows()) +
                         " rows, expected " + std::to_string(net.layer_dims.front()));
    Matrix h = x;
    for (std::size_t i = 0; i < net.encoders.size(); ++i) {
        if (h.rows() != net.encoders[i].weight.cols())
            throw ShapeError("stage encoder " + std::to_string(i + 1) + ": input has " +
                             std::to_string(h.rows()) + " rows, expected " +
                             std::to_string(net.encoders[i].weight.cols()));
        h = sigmoid(add_col(matmul(net.encoders[i].weight, h), net.encoders[i].bias));
    }
    return h;
}

struct Prediction {
    Matrix posteriors; // classes x n
    std::vector<std::size_t> labels;
};

/// Forward pass: posteriors = softmax(head(enc..(x))), labels = per-column
/// argmax with ties broken toward the lowest class index.
inline Prediction predict(const StackedNetwork& net, const Matrix& x) {
    const Matrix features = stack_features(net, x);
    if (features.rows() != net.head.feature_count())
        throw ShapeError("stage head: features have " + std::to_string(features.rows()) +
                         " rows, expected " + std::to_string(net.head.feature_count()));
    Prediction out;
    out.posteriors = softmax(softmax_logits(net.head, features));
    out.labels = col_argmax(out.posteriors);
    return out;
}

// -- Whole-stack objective and gradient ---------------------------------------

/// Cross-entropy through all layers plus L2 decay on every weight matrix.
inline double stack_objective(const StackedNetwork& net, const Matrix& x, const Matrix& t,
                              double l2_weight) {
    const Matrix features = stack_features(net, x);
    double decay = frobenius_sq(net.head.weight);
    for (const auto& enc : net.encoders) decay += frobenius_sq(enc.weight);
    return detail::cross_entropy(softmax_logits(net.head, features), t) +
           0.5 * l2_weight * decay;
}

/// Gradients of stack_objective in network shape.
struct StackGradient {
    std::vector<EncoderLayer> encoders;
    SoftmaxParams head;
};

inline StackGradient stack_gradient(const StackedNetwork& net, const Matrix& x,
                                    const Matrix& t, double l2_weight) {
    const double n = static_cast<double>(x.cols());

    // Forward, keeping every activation.
    std::vector<Matrix> acts; // acts[0] = x, acts[i] = output of encoder i
    acts.reserve(net.encoders.size() + 1);
    acts.push_back(x);
    for (const auto& enc : net.encoders)
        acts.push_back(sigmoid(add_col(matmul(enc.weight, acts.back()), enc.bias)));

    Matrix dz = subtract(softmax(softmax_logits(net.head, acts.back())), t);
    for (double& v : dz.data()) v /= n;

    StackGradient g;
    g.head.weight = add(matmul(dz, transpose(acts.back())), scale(net.head.weight, l2_weight));
    g.head.bias = row_sums(dz);

    Matrix upstream = matmul(transpose(net.head.weight), dz);
    g.encoders.resize(net.encoders.size());
    for (std::size_t i = net.encoders.size(); i-- > 0;) {
        const Matrix& h = acts[i + 1];
        Matrix delta = upstream;
        {
            auto d = delta.data();
            auto hv = h.data();
            for (std::size_t k = 0; k < d.size(); ++k) d[k] = d[k] * hv[k] * (1.0 - hv[k]);
        }
        g.encoders[i].weight =
            add(matmul(delta, transpose(acts[i])), scale(net.encoders[i].weight, l2_weight));
        g.encoders[i].bias = row_sums(delta);
        if (i > 0) upstream = matmul(transpose(net.encoders[i].weight), delta);
    }
    return g;
}

// -- Greedy layer-wise training ------------------------------------------------

struct FineTuneHyper {
    bool enabled = false;
    std::size_t epochs_max = 100;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double l2_weight = 1e-4;
    std::size_t batch_size = 64;
};

struct PipelineHyper {
    AeHyper ae1;
    AeHyper ae2;
    SoftmaxHyper head;
    FineTuneHyper fine_tune;
};

struct GreedyTraces {
    TrainTrace ae1;
    TrainTrace ae2;
    TrainTrace head;
};

struct GreedyResult {
    StackedNetwork net;
    GreedyTraces traces;
    // Full pretraining artifacts, decoders included; kept for serialization.
    AutoencoderParams ae1;
    AutoencoderParams ae2;
};

namespace detail {
template <typename F>
auto run_stage(const char* stage, F&& f) {
    try {
        return f();
    } catch (const DivergenceError& e) {
        throw DivergenceError(stage, e.epoch, e.learning_rate);
    }
}
} // namespace detail

/// Greedy layer-wise pretraining: the first autoencoder learns the raw
/// pixels, the second learns the first's codes, the softmax head learns the
/// second's codes against the labels. The assembled network keeps only the
/// encoder halves.
inline GreedyResult greedy_train(const Dataset& ds, const Split& split,
                                 const PipelineHyper& cfg, RngState& rng) {
    if (split.train.empty() || split.validation.empty())
        throw ParameterError("greedy_train: split needs training and validation samples");

    const Matrix x_train = to_columns(ds, split.train);
    const Matrix x_val = to_columns(ds, split.validation);
    const Matrix t_train = one_hot(labels_at(ds, split.train), ds.class_count);
    const Matrix t_val = one_hot(labels_at(ds, split.validation), ds.class_count);

    GreedyResult out;
    auto [ae1, trace1] = detail::run_stage(
        "autoencoder 1", [&] { return train_ae(x_train, x_val, cfg.ae1, rng); });
    const Matrix h1_train = encode(ae1, x_train);
    const Matrix h1_val = encode(ae1, x_val);

    auto [ae2, trace2] = detail::run_stage(
        "autoencoder 2", [&] { return train_ae(h1_train, h1_val, cfg.ae2, rng); });
    const Matrix h2_train = encode(ae2, h1_train);
    const Matrix h2_val = encode(ae2, h1_val);

    auto [head, trace3] = detail::run_stage("softmax head", [&] {
        return train_softmax(h2_train, t_train, h2_val, t_val, cfg.head, rng);
    });

    out.net.encoders = {{ae1.enc_weight, ae1.enc_bias}, {ae2.enc_weight, ae2.enc_bias}};
    out.net.head = head;
    out.net.layer_dims = {x_train.rows(), ae1.hidden_size(), ae2.hidden_size(),
                          ds.class_count};
    validate_network(out.net);

    out.traces = {std::move(trace1), std::move(trace2), std::move(trace3)};
    out.ae1 = std::move(ae1);
    out.ae2 = std::move(ae2);
    return out;
}

namespace detail {
inline std::vector<Matrix> stack_pack(const StackedNetwork& net) {
    std::vector<Matrix> v;
    for (const auto& enc : net.encoders) {
        v.push_back(enc.weight);
        v.push_back(enc.bias);
    }
    v.push_back(net.head.weight);
    v.push_back(net.head.bias);
    return v;
}

inline StackedNetwork stack_unpack(const std::vector<Matrix>& v,
                                   const StackedNetwork& like) {
    StackedNetwork net;
    net.layer_dims = like.layer_dims;
    net.encoders.resize(like.encoders.size());
    for (std::size_t i = 0; i < net.encoders.size(); ++i) {
        net.encoders[i].weight = v[2 * i];
        net.encoders[i].bias = v[2 * i + 1];
    }
    net.head.weight = v[v.size() - 2];
    net.head.bias = v[v.size() - 1];
    return net;
}

inline std::vector<Matrix> stack_grad_pack(const StackGradient& g) {
    std::vector<Matrix> v;
    for (const auto& enc : g.encoders) {
        v.push_back(enc.weight);
        v.push_back(enc.bias);
    }
    v.push_back(g.head.weight);
    v.push_back(g.head.bias);
    return v;
}
} // namespace detail

/// Joint backpropagation of the classification loss through every layer.
/// Off by default in the pipeline; zero epochs returns the network unchanged.
inline std::pair<StackedNetwork, TrainTrace> fine_tune(const StackedNetwork& net,
                                                       const Dataset& ds,
                                                       const Split& split,
                                                       const FineTuneHyper& hyp,
                                                       RngState& rng) {
    validate_network(net);
    if (hyp.epochs_max == 0) return {net, TrainTrace{}};
    if (split.train.empty() || split.validation.empty())
        throw ParameterError("fine_tune: split needs training and validation samples");

    const Matrix x_train = to_columns(ds, split.train);
    const Matrix x_val = to_columns(ds, split.validation);
    const Matrix t_train = one_hot(labels_at(ds, split.train), ds.class_count);
    const Matrix t_val = one_hot(labels_at(ds, split.validation), ds.class_count);

    SgdProblem problem;
    problem.sample_count = x_train.cols();
    problem.train_objective = [&](const std::vector<Matrix>& v) {
        return stack_objective(detail::stack_unpack(v, net), x_train, t_train, hyp.l2_weight);
    };
    problem.val_objective = [&](const std::vector<Matrix>& v) {
        return stack_objective(detail::stack_unpack(v, net), x_val, t_val, hyp.l2_weight);
    };
    problem.batch_gradient = [&](const std::vector<Matrix>& v,
                                 std::span<const std::size_t> batch) {
        const Matrix xb = slice_cols(x_train, batch);
        const Matrix tb = slice_cols(t_train, batch);
        return detail::stack_grad_pack(
            stack_gradient(detail::stack_unpack(v, net), xb, tb, hyp.l2_weight));
    };

    SgdOptions opt{hyp.epochs_max, hyp.learning_rate, hyp.momentum, hyp.batch_size};
    auto [best, trace] = detail::run_stage("fine-tune", [&] {
        return minibatch_sgd(detail::stack_pack(net), problem, opt, rng);
    });
    return {detail::stack_unpack(best, net), std::move(trace)};
}

} // namespace depthsign

#endif // DEPTHSIGN_STACK_HPP
