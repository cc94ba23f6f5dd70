#include <catch2/catch_amalgamated.hpp>

#include "fairrank/matrix.hpp"
#include "fairrank/rng.hpp"

using namespace fairrank;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (auto& x : m.data) x = rng.uniform(-2.0, 2.0);
    return m;
}

}  // namespace

TEST_CASE("matmul agrees with a direct triple loop", "[matrix]") {
    Rng rng(3);
    const Matrix a = random_matrix(4, 6, rng);
    const Matrix b = random_matrix(6, 5, rng);
    const Matrix c = matmul(a, b);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double expected = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) expected += a(i, k) * b(k, j);
            REQUIRE(c(i, j) == Catch::Approx(expected).margin(1e-12));
        }
}

TEST_CASE("transposed products match explicit transposes", "[matrix]") {
    Rng rng(4);
    const Matrix a = random_matrix(5, 3, rng);
    const Matrix b = random_matrix(5, 4, rng);
    Matrix a_t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) a_t(j, i) = a(i, j);

    const Matrix via_tn = matmul_tn(a, b);
    const Matrix direct = matmul(a_t, b);
    REQUIRE(via_tn.rows == direct.rows);
    REQUIRE(via_tn.cols == direct.cols);
    for (std::size_t k = 0; k < direct.data.size(); ++k)
        REQUIRE(via_tn.data[k] == Catch::Approx(direct.data[k]).margin(1e-12));

    const Matrix c = random_matrix(4, 3, rng);
    Matrix c_t(c.cols, c.rows);
    for (std::size_t i = 0; i < c.rows; ++i)
        for (std::size_t j = 0; j < c.cols; ++j) c_t(j, i) = c(i, j);
    const Matrix via_nt = matmul_nt(a, c);
    const Matrix direct_nt = matmul(a, c_t);
    for (std::size_t k = 0; k < direct_nt.data.size(); ++k)
        REQUIRE(via_nt.data[k] == Catch::Approx(direct_nt.data[k]).margin(1e-12));
}

TEST_CASE("matmul rejects mismatched shapes", "[matrix]") {
    const Matrix a(2, 3), b(4, 2);
    REQUIRE_THROWS_AS(matmul(a, b), ShapeError);
}

TEST_CASE("column statistics", "[matrix]") {
    Matrix m(4, 2);
    m(0, 0) = 1.0;  m(0, 1) = 10.0;
    m(1, 0) = 2.0;  m(1, 1) = 10.0;
    m(2, 0) = 3.0;  m(2, 1) = 10.0;
    m(3, 0) = 4.0;  m(3, 1) = 10.0;
    const auto means = column_means(m);
    REQUIRE(means[0] == Catch::Approx(2.5));
    REQUIRE(means[1] == Catch::Approx(10.0));
    const auto vars = column_variances(m, means);
    REQUIRE(vars[0] == Catch::Approx(1.25));
    REQUIRE(vars[1] == 0.0);
}

TEST_CASE("gather_rows picks rows in order", "[matrix]") {
    Matrix m(3, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) m(i, j) = static_cast<double>(10 * i + j);
    const std::vector<std::size_t> idx = {2, 0};
    const Matrix g = gather_rows(m, idx);
    REQUIRE(g.rows == 2);
    REQUIRE(g(0, 0) == 20.0);
    REQUIRE(g(1, 1) == 1.0);
}

TEST_CASE("finite checks flag NaN", "[matrix]") {
    Matrix m(2, 2, 1.0);
    REQUIRE(all_finite(m));
    m(1, 1) = std::nan("");
    REQUIRE_FALSE(all_finite(m));
    REQUIRE_THROWS_AS(ensure_finite(m, "test"), NumericError);
}
