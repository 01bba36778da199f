#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "depthsign/matrix.hpp"
#include "depthsign/rng.hpp"

using namespace depthsign;

namespace {

// Independent elementwise triple-loop product, the oracle for matmul.
Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
            c(i, j) = s;
        }
    return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

} // namespace

TEST_CASE("matmul against identity and hand-computed cases", "[linalg]") {
    RngState rng(7);
    const Matrix m = rand_uniform(rng, 3, 5, -2.0, 2.0);
    CHECK(matmul(Matrix::identity(3), m) == m);

    const Matrix a{{1, 2}, {3, 4}};
    const Matrix v{{1}, {1}};
    const Matrix prod = matmul(a, v);
    CHECK(prod(0, 0) == 3.0);
    CHECK(prod(1, 0) == 7.0);
}

TEST_CASE("matmul matches the triple-loop oracle", "[linalg]") {
    RngState rng(123);
    const Matrix a = rand_uniform(rng, 5, 7, -1.0, 1.0);
    const Matrix b = rand_uniform(rng, 7, 3, -1.0, 1.0);
    CHECK(max_abs_diff(matmul(a, b), matmul_oracle(a, b)) < 1e-12);
}

TEST_CASE("matmul rejects non-conforming shapes naming both", "[linalg]") {
    const Matrix a(3, 4);
    const Matrix b(5, 2);
    CHECK_THROWS_MATCHES(matmul(a, b), ShapeError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("3x4") &&
                             Catch::Matchers::ContainsSubstring("5x2")));
}

TEST_CASE("matmul associativity within tolerance", "[linalg]") {
    RngState rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = rand_uniform(rng, 4, 6, -1.0, 1.0);
        const Matrix b = rand_uniform(rng, 6, 5, -1.0, 1.0);
        const Matrix c = rand_uniform(rng, 5, 3, -1.0, 1.0);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        const double scale = std::max(max_abs(left), 1.0);
        CHECK(max_abs_diff(left, right) / scale < 1e-9);
    }
}

TEST_CASE("elementwise maps every entry", "[linalg]") {
    RngState rng(5);
    const Matrix m = rand_uniform(rng, 4, 4, -3.0, 3.0);
    CHECK(elementwise(m, [](double v) { return v; }) == m);

    const Matrix zero{{0.0}};
    const auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    CHECK(elementwise(zero, sig)(0, 0) == 0.5);

    const Matrix pm{{-1.0, 1.0}};
    const Matrix s = elementwise(pm, sig);
    CHECK(s(0, 0) + s(0, 1) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("transpose is an involution", "[linalg]") {
    RngState rng(11);
    const Matrix m = rand_uniform(rng, 6, 4, -10.0, 10.0);
    CHECK(transpose(transpose(m)) == m);
}

TEST_CASE("rand_uniform is deterministic per seed", "[linalg]") {
    RngState a(42), b(42);
    CHECK(rand_uniform(a, 8, 8, -1.0, 1.0) == rand_uniform(b, 8, 8, -1.0, 1.0));
}

TEST_CASE("rand_uniform sample mean obeys the law of large numbers", "[linalg]") {
    RngState rng(2024);
    const Matrix m = rand_uniform(rng, 100, 100, 0.0, 1.0);
    CHECK(sum(m) / static_cast<double>(m.size()) == Catch::Approx(0.5).margin(0.02));
    for (double v : m.data()) {
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("rand_uniform degenerate and invalid ranges", "[linalg]") {
    RngState rng(1);
    const Matrix empty = rand_uniform(rng, 0, 5, 0.0, 1.0);
    CHECK(empty.rows() == 0);
    CHECK(empty.size() == 0);
    CHECK_THROWS_AS(rand_uniform(rng, 2, 2, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(rand_uniform(rng, 2, 2, 2.0, 1.0), ParameterError);
}

TEST_CASE("operations keep finite inputs finite", "[linalg]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RngState rng(seed);
        const std::size_t r = 1 + rng.next_below(6);
        const std::size_t k = 1 + rng.next_below(6);
        const std::size_t c = 1 + rng.next_below(6);
        const Matrix a = rand_uniform(rng, r, k, -100.0, 100.0);
        const Matrix b = rand_uniform(rng, k, c, -100.0, 100.0);
        CHECK(matmul(a, b).all_finite());
        CHECK(transpose(a).all_finite());
        CHECK(scale(a, -3.5).all_finite());
        CHECK(hadamard(a, a).all_finite());
        CHECK(add(a, a).all_finite());
        CHECK(subtract(a, a).all_finite());
    }
}

TEST_CASE("splitmix stream is stable across construction", "[linalg]") {
    RngState a(7);
    RngState b(7);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    RngState c = a.split();
    RngState d = b.split();
    CHECK(c.next_u64() == d.next_u64());
    CHECK(derive_stream(7, 3).next_u64() == derive_stream(7, 3).next_u64());
    CHECK(derive_stream(7, 3).next_u64() != derive_stream(7, 4).next_u64());
}

TEST_CASE("column helpers", "[linalg]") {
    const Matrix m{{1, 2, 3}, {4, 5, 6}};
    const std::vector<std::size_t> pick = {2, 0};
    const Matrix s = slice_cols(m, pick);
    CHECK(s(0, 0) == 3.0);
    CHECK(s(1, 1) == 4.0);

    const Matrix col{{10}, {20}};
    const Matrix shifted = add_col(m, col);
    CHECK(shifted(0, 2) == 13.0);
    CHECK(shifted(1, 0) == 24.0);

    CHECK(row_sums(m)(0, 0) == 6.0);
    CHECK(row_means(m)(1, 0) == 5.0);

    const auto arg = col_argmax(Matrix{{1, 5}, {3, 5}});
    CHECK(arg[0] == 1);
    CHECK(arg[1] == 0); // tie breaks to the lowest row index
}
