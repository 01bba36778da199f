#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "depthsign/stack.hpp"
#include "gradient_check.hpp"

using namespace depthsign;
using depthsign::testing::fd_gradient;
using depthsign::testing::max_relative_error;

namespace {

StackedNetwork random_network(const std::vector<std::size_t>& dims, RngState& rng) {
    StackedNetwork net;
    net.layer_dims = dims;
    for (std::size_t i = 0; i + 2 < dims.size(); ++i) {
        EncoderLayer enc;
        enc.weight = rand_uniform(rng, dims[i + 1], dims[i], -0.9, 0.9);
        enc.bias = rand_uniform(rng, dims[i + 1], 1, -0.3, 0.3);
        net.encoders.push_back(std::move(enc));
    }
    net.head.weight =
        rand_uniform(rng, dims.back(), dims[dims.size() - 2], -0.9, 0.9);
    net.head.bias = rand_uniform(rng, dims.back(), 1, -0.3, 0.3);
    validate_network(net);
    return net;
}

struct DeskRun {
    Dataset ds;
    Split split;
    PipelineHyper cfg;
};

DeskRun small_desk_problem(std::uint64_t seed, std::size_t per_class = 24,
                           std::size_t side = 8) {
    DeskRun run;
    RngState data_rng(seed);
    run.ds = synth_gestures(5, per_class, side, 0.05, data_rng);
    RngState split_rng(seed + 1);
    run.split = split_dataset(run.ds, {0.5, 0.25, 0.25}, split_rng);
    run.cfg.ae1 = AeHyper{12, 15, 0.3, 0.9, 1e-4, 0.05, 0.5, 16};
    run.cfg.ae2 = AeHyper{6, 10, 0.3, 0.9, 1e-4, 0.05, 0.5, 16};
    run.cfg.head = SoftmaxHyper{40, 0.5, 0.9, 1e-4, 16};
    return run;
}

} // namespace

TEST_CASE("greedy training assembles the declared dimension chain", "[stack]") {
    DeskRun run = small_desk_problem(100);
    RngState rng(7);
    const GreedyResult result = greedy_train(run.ds, run.split, run.cfg, rng);

    const std::vector<std::size_t> expected = {64, 12, 6, 5};
    CHECK(result.net.layer_dims == expected);
    CHECK(result.net.encoders.size() == 2);
    CHECK(result.net.encoders[0].weight.rows() == 12);
    CHECK(result.net.encoders[0].weight.cols() == 64);
    CHECK(result.net.head.weight.rows() == 5);
    CHECK_NOTHROW(validate_network(result.net));

    // pretraining artifacts keep their decoders
    CHECK(result.ae1.dec_weight.rows() == 64);
    CHECK(result.ae2.dec_weight.rows() == 12);

    CHECK(result.traces.ae1.entries.size() == 15);
    CHECK(result.traces.ae2.entries.size() == 10);
    CHECK(result.traces.head.entries.size() == 40);
}

TEST_CASE("greedy training is deterministic per seed", "[stack]") {
    DeskRun run = small_desk_problem(200, 12);
    RngState r1(5), r2(5);
    const GreedyResult a = greedy_train(run.ds, run.split, run.cfg, r1);
    const GreedyResult b = greedy_train(run.ds, run.split, run.cfg, r2);
    CHECK(a.net.head.weight == b.net.head.weight);
    CHECK(a.net.encoders[0].weight == b.net.encoders[0].weight);
    CHECK(a.net.encoders[1].weight == b.net.encoders[1].weight);
}

TEST_CASE("predict composes the encoders and the head", "[stack]") {
    RngState rng(21);
    const StackedNetwork net = random_network({6, 4, 3, 2}, rng);
    const Matrix x = rand_uniform(rng, 6, 5, 0.0, 1.0);
    const Prediction pred = predict(net, x);
    REQUIRE(pred.posteriors.cols() == 5);
    REQUIRE(pred.labels.size() == 5);

    // manual chain: encode through each layer, then the softmax head
    AutoencoderParams ae1, ae2;
    ae1.enc_weight = net.encoders[0].weight;
    ae1.enc_bias = net.encoders[0].bias;
    ae2.enc_weight = net.encoders[1].weight;
    ae2.enc_bias = net.encoders[1].bias;
    const Matrix manual =
        softmax(softmax_logits(net.head, encode(ae2, encode(ae1, x))));
    for (std::size_t i = 0; i < manual.size(); ++i)
        REQUIRE(pred.posteriors.data()[i] ==
                Catch::Approx(manual.data()[i]).margin(1e-12));

    for (std::size_t c = 0; c < pred.posteriors.cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < pred.posteriors.rows(); ++r)
            s += pred.posteriors(r, c);
        REQUIRE(std::fabs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("predict is pure and handles single columns", "[stack]") {
    RngState rng(22);
    const StackedNetwork net = random_network({5, 4, 3}, rng);
    const Matrix x = rand_uniform(rng, 5, 1, 0.0, 1.0);
    const Prediction a = predict(net, x);
    const Prediction b = predict(net, x);
    REQUIRE(a.labels.size() == 1);
    CHECK(a.posteriors == b.posteriors);
    CHECK(a.labels == b.labels);
}

TEST_CASE("predict names the failing stage on a shape mismatch", "[stack]") {
    RngState rng(23);
    const StackedNetwork net = random_network({6, 4, 3, 2}, rng);
    CHECK_THROWS_MATCHES(predict(net, Matrix(5, 2)), ShapeError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("encoder 1")));
}

TEST_CASE("whole-stack gradient matches finite differences", "[stack]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RngState rng(seed);
        StackedNetwork net = random_network({6, 4, 3, 2}, rng);
        const Matrix x = rand_uniform(rng, 6, 3, 0.0, 1.0);
        std::vector<std::size_t> labels;
        for (int i = 0; i < 3; ++i) labels.push_back(rng.next_below(2));
        const Matrix t = one_hot(labels, 2);
        const double l2 = rng.next_double(0.0, 0.2);

        const StackGradient analytic = stack_gradient(net, x, t, l2);
        const auto objective = [&] { return stack_objective(net, x, t, l2); };
        for (std::size_t i = 0; i < net.encoders.size(); ++i) {
            REQUIRE(max_relative_error(analytic.encoders[i].weight,
                                       fd_gradient(net.encoders[i].weight, objective)) <
                    1e-6);
            REQUIRE(max_relative_error(analytic.encoders[i].bias,
                                       fd_gradient(net.encoders[i].bias, objective)) <
                    1e-6);
        }
        REQUIRE(max_relative_error(analytic.head.weight,
                                   fd_gradient(net.head.weight, objective)) < 1e-6);
        REQUIRE(max_relative_error(analytic.head.bias,
                                   fd_gradient(net.head.bias, objective)) < 1e-6);
    }
}

TEST_CASE("fine-tuning with zero epochs is the identity", "[stack]") {
    DeskRun run = small_desk_problem(300, 8);
    RngState rng(31);
    const StackedNetwork net = random_network({64, 10, 6, 5}, rng);
    FineTuneHyper hyp;
    hyp.epochs_max = 0;
    RngState tune_rng(32);
    auto [tuned, trace] = fine_tune(net, run.ds, run.split, hyp, tune_rng);
    CHECK(trace.entries.empty());
    CHECK(tuned.head.weight == net.head.weight);
    CHECK(tuned.encoders[0].weight == net.encoders[0].weight);
    CHECK(tuned.encoders[1].weight == net.encoders[1].weight);
}

TEST_CASE("fine-tuning never worsens the selected validation objective", "[stack]") {
    DeskRun run = small_desk_problem(400, 10);
    RngState rng(41);
    const GreedyResult result = greedy_train(run.ds, run.split, run.cfg, rng);

    const Matrix x_val = to_columns(run.ds, run.split.validation);
    const Matrix t_val =
        one_hot(labels_at(run.ds, run.split.validation), run.ds.class_count);

    FineTuneHyper hyp;
    hyp.epochs_max = 15;
    hyp.learning_rate = 0.2;
    const double before = stack_objective(result.net, x_val, t_val, hyp.l2_weight);
    RngState tune_rng(42);
    auto [tuned, trace] = fine_tune(result.net, run.ds, run.split, hyp, tune_rng);
    const double after = stack_objective(tuned, x_val, t_val, hyp.l2_weight);
    CHECK(after <= before + 1e-12);
}

TEST_CASE("network validation catches broken dimension chains", "[stack]") {
    RngState rng(51);
    StackedNetwork net = random_network({6, 4, 3}, rng);
    net.encoders[0].weight = Matrix(4, 5); // wrong input width
    CHECK_THROWS_AS(validate_network(net), ShapeError);

    StackedNetwork bad_head = random_network({6, 4, 3}, rng);
    bad_head.head.weight = Matrix(3, 5);
    CHECK_THROWS_AS(validate_network(bad_head), ShapeError);
}
