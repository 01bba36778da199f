#ifndef DEPTHSIGN_OPTIMIZER_HPP
#define DEPTHSIGN_OPTIMIZER_HPP

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "depthsign/errors.hpp"
#include "depthsign/matrix.hpp"
#include "depthsign/rng.hpp"

namespace depthsign {

struct SgdOptions {
    std::size_t epochs_max = 1;
    double learning_rate = 0.1;
    double momentum = 0.9;
    std::size_t batch_size = 64;
};

/// Objective curve of one training run, one entry per completed epoch.
struct TrainTrace {
    struct Entry {
        std::size_t epoch;
        double train_objective;
        double val_objective;
    };
    std::vector<Entry> entries;

    /// Index into entries of the best validation objective, or npos when the
    /// initial parameters were never improved upon.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t best_entry = npos;
};

/// One training problem as seen by the optimizer: parameters are a flat list
/// of matrices; callbacks evaluate the full-set objectives and a mini-batch
/// gradient over the given sample (column) indices.
struct SgdProblem {
    std::size_t sample_count = 0;
    std::function<double(const std::vector<Matrix>&)> train_objective;
    std::function<double(const std::vector<Matrix>&)> val_objective;
    std::function<std::vector<Matrix>(const std::vector<Matrix>&,
                                      std::span<const std::size_t>)>
        batch_gradient;
};

/// Mini-batch gradient descent with momentum. Samples are reshuffled every
/// epoch; the returned parameters are those with the best validation
/// objective seen (the initial point included, so zero epochs is the
/// identity). Throws DivergenceError when an epoch objective is non-finite.
inline std::pair<std::vector<Matrix>, TrainTrace> minibatch_sgd(
    std::vector<Matrix> params, const SgdProblem& problem, const SgdOptions& opt,
    RngState& rng) {
    if (opt.batch_size == 0)
        throw ParameterError("minibatch_sgd: batch_size must be positive");
    if (!(opt.learning_rate > 0.0))
        throw ParameterError("minibatch_sgd: learning_rate must be positive");
    if (opt.momentum < 0.0 || opt.momentum >= 1.0)
        throw ParameterError("minibatch_sgd: momentum must lie in [0, 1)");
    if (problem.sample_count == 0)
        throw ParameterError("minibatch_sgd: no training samples");

    std::vector<Matrix> velocity;
    velocity.reserve(params.size());
    for (const auto& p : params) velocity.emplace_back(p.rows(), p.cols());

    std::vector<Matrix> best = params;
    double best_val = problem.val_objective(params);
    TrainTrace trace;
    trace.entries.reserve(opt.epochs_max);

    std::vector<std::size_t> order(problem.sample_count);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < opt.epochs_max; ++epoch) {
        shuffle(order, rng);
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t len = std::min(opt.batch_size, order.size() - start);
            std::span<const std::size_t> batch(order.data() + start, len);
            const std::vector<Matrix> grads = problem.batch_gradient(params, batch);
            for (std::size_t i = 0; i < params.size(); ++i) {
                auto v = velocity[i].data();
                auto g = grads[i].data();
                auto p = params[i].data();
                for (std::size_t k = 0; k < v.size(); ++k) {
                    v[k] = opt.momentum * v[k] - opt.learning_rate * g[k];
                    p[k] += v[k];
                }
            }
        }

        const double train_obj = problem.train_objective(params);
        const double val_obj = problem.val_objective(params);
        if (!std::isfinite(train_obj) || !std::isfinite(val_obj))
            throw DivergenceError(epoch, opt.learning_rate);
        trace.entries.push_back({epoch, train_obj, val_obj});
        if (val_obj < best_val) {
            best_val = val_obj;
            best = params;
            trace.best_entry = trace.entries.size() - 1;
        }
    }
    return {std::move(best), std::move(trace)};
}

/// Write a trace as CSV (`epoch,train_objective,val_objective`).
inline std::string trace_to_csv(const TrainTrace& trace) {
    std::string out = "epoch,train_objective,val_objective\n";
    char buf[80];
    for (const auto& e : trace.entries) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e.epoch, e.train_objective,
                      e.val_objective);
        out += buf;
    }
    return out;
}

} // namespace depthsign

#endif // DEPTHSIGN_OPTIMIZER_HPP
