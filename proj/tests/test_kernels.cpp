#include "doctest.h"
#include "test_util.hpp"

#include "gcdassoc/distance.hpp"
#include "gcdassoc/kernels.hpp"

#include <cmath>

using namespace gcd;
using kernels::SparseRow;

namespace {

// Threads forced above the core count so the parallel split is exercised
// even on a single-core machine.
struct ThreadScope {
    explicit ThreadScope(int n) { kernels::set_num_threads(n); }
    ~ThreadScope() { kernels::set_num_threads(0); }
};

std::vector<SparseRow> random_sparse(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SparseRow> rows(n);
    for (auto& r : rows) {
        for (std::uint32_t j = 0; j < n; ++j) {
            if (u(rng) < 0.3) {
                r.index.push_back(j);
                r.value.push_back(u(rng) + 0.01);
            }
        }
        if (r.index.empty()) {
            r.index.push_back(0);
            r.value.push_back(1.0);
        }
    }
    return rows;
}

double dense_jaccard(const SparseRow& a, const SparseRow& b, std::size_t n) {
    std::vector<double> x(n, 0.0), y(n, 0.0);
    for (std::size_t t = 0; t < a.index.size(); ++t) {
        x[a.index[t]] = a.value[t];
    }
    for (std::size_t t = 0; t < b.index.size(); ++t) {
        y[b.index[t]] = b.value[t];
    }
    double lo = 0.0, hi = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        lo += std::min(x[j], y[j]);
        hi += std::max(x[j], y[j]);
    }
    return 1.0 - lo / hi;
}

} // namespace

TEST_CASE("serial and parallel kernels agree bit for bit") {
    ThreadScope threads(4);
    std::mt19937_64 rng(42);
    for (const std::size_t n : {1u, 7u, 33u, 130u}) {
        const auto f = test::random_unit_rows(n, 9, rng);

        std::vector<double> a(n * n), b(n * n);
        kernels::serial::cosine_distance(f, a);
        kernels::omp::cosine_distance(f, b);
        CHECK(a == b);

        const std::size_t k = std::min<std::size_t>(n, 6);
        CHECK(kernels::serial::knn_rank(a, n, k) == kernels::omp::knn_rank(a, n, k));

        const auto rows = random_sparse(n, rng);
        std::vector<double> ja(n * n), jb(n * n);
        kernels::serial::weighted_jaccard(rows, ja);
        kernels::omp::weighted_jaccard(rows, jb);
        CHECK(ja == jb);

        const auto centers = test::random_unit_rows(5, 9, rng);
        CHECK(kernels::serial::nearest_center(f.matrix(), centers.matrix()) ==
              kernels::omp::nearest_center(f.matrix(), centers.matrix()));

        Matrix w(9, 4);
        std::normal_distribution<double> g;
        for (double& v : w.data()) {
            v = g(rng);
        }
        Matrix ea, eb;
        kernels::serial::embed(f.matrix(), w, ea);
        kernels::omp::embed(f.matrix(), w, eb);
        CHECK(ea == eb);
    }
}

TEST_CASE("cosine distance matches the definition") {
    const auto f = test::from_rows({{1, 0}, {0, 1}, {-1, 0}, {1, 0}});
    std::vector<double> d(16);
    kernels::serial::cosine_distance(f, d);
    CHECK(d[0 * 4 + 1] == doctest::Approx(1.0));
    CHECK(d[0 * 4 + 2] == doctest::Approx(2.0));
    CHECK(d[0 * 4 + 3] == 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(d[i * 4 + i] == 0.0);
    }
}

TEST_CASE("knn rank puts self first even under ties") {
    // Rows 0 and 1 coincide, so each sees the other at distance zero.
    const std::vector<double> d{0, 0, 0.5, 0, 0, 0.5, 0.5, 0.5, 0};
    const auto r = kernels::serial::knn_rank(d, 3, 3);
    CHECK(r == std::vector<std::uint32_t>{0, 1, 2, 1, 0, 2, 2, 0, 1});
}

TEST_CASE("weighted jaccard equals the dense formula") {
    std::mt19937_64 rng(5);
    const std::size_t n = 25;
    const auto rows = random_sparse(n, rng);
    std::vector<double> out(n * n);
    kernels::serial::weighted_jaccard(rows, out);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(out[i * n + i] == 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                CHECK(std::abs(out[i * n + j] - dense_jaccard(rows[i], rows[j], n)) <= 1e-12);
                CHECK(out[i * n + j] == out[j * n + i]);
            }
        }
    }
}

TEST_CASE("disjoint sparse rows are at distance one") {
    const std::vector<SparseRow> rows{{{0, 1}, {0.5, 0.5}}, {{0, 1}, {0.2, 0.8}}, {{2}, {1.0}}};
    std::vector<double> out(9);
    kernels::serial::weighted_jaccard(rows, out);
    CHECK(out[0 * 3 + 2] == 1.0);
    CHECK(out[2 * 3 + 1] == 1.0);
    CHECK(out[0 * 3 + 1] == doctest::Approx(1.0 - 0.7 / 1.3));
}

TEST_CASE("nearest center breaks ties toward the lower index") {
    const Matrix points(1, 2, std::vector<double>{1.0, 0.0});
    const Matrix centers(2, 2, std::vector<double>{0.0, 1.0, 0.0, -1.0});
    CHECK(kernels::serial::nearest_center(points, centers) == std::vector<int>{0});
}

TEST_CASE("embed normalizes and rejects zero rows") {
    const Matrix x(1, 2, std::vector<double>{1.0, 1.0});
    Matrix out;
    kernels::serial::embed(x, Matrix::identity(2), out);
    CHECK(out(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    const Matrix w(2, 1, std::vector<double>{1.0, -1.0});
    CHECK_THROWS_AS(kernels::serial::embed(x, w, out), InputError);
    ThreadScope threads(3);
    CHECK_THROWS_AS(kernels::omp::embed(x, w, out), InputError);
}

TEST_CASE("thread count is bitwise irrelevant for the jaccard pipeline") {
    std::mt19937_64 rng(9);
    const auto f = test::random_unit_rows(60, 6, rng);
    const RerankParams p{8, 3};
    const auto ref = k_reciprocal_jaccard(f, p, Exec::serial);
    for (int t : {1, 2, 5}) {
        ThreadScope threads(t);
        CHECK(k_reciprocal_jaccard(f, p, Exec::parallel) == ref);
    }
}
