#include "doctest.h"
#include "oracles/rerank_oracle.hpp"
#include "test_util.hpp"

#include "gcdassoc/distance.hpp"

#include <cmath>

using namespace gcd;

namespace {

std::vector<std::vector<double>> as_rows(const FeatureMatrix& f) {
    std::vector<std::vector<double>> x(f.rows());
    for (std::size_t r = 0; r < f.rows(); ++r) {
        x[r].assign(f.row(r).begin(), f.row(r).end());
    }
    return x;
}

double max_oracle_gap(const FeatureMatrix& f, int k1, int k2) {
    const auto got = k_reciprocal_jaccard(f, {k1, k2}, Exec::serial);
    const auto want = oracle::rerank_jaccard(as_rows(f), static_cast<std::size_t>(k1),
                                             static_cast<std::size_t>(k2));
    double gap = 0.0;
    for (std::size_t i = 0; i < f.rows(); ++i) {
        for (std::size_t j = 0; j < f.rows(); ++j) {
            gap = std::max(gap, std::abs(got(i, j) - want[i][j]));
        }
    }
    return gap;
}

// Random orthogonal matrix by Gram-Schmidt on Gaussian columns.
Matrix random_rotation(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix q(d, d);
    for (std::size_t c = 0; c < d; ++c) {
        std::vector<double> v(d);
        for (double& x : v) {
            x = g(rng);
        }
        for (std::size_t p = 0; p < c; ++p) {
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                s += v[r] * q(r, p);
            }
            for (std::size_t r = 0; r < d; ++r) {
                v[r] -= s * q(r, p);
            }
        }
        normalize_in_place(v);
        for (std::size_t r = 0; r < d; ++r) {
            q(r, c) = v[r];
        }
    }
    return q;
}

void check_distance_invariants(const DistanceMatrix& d, double hi) {
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(d(i, i) == 0.0);
        for (std::size_t j = 0; j < d.size(); ++j) {
            CHECK(std::abs(d(i, j) - d(j, i)) <= 1e-6);
            CHECK(d(i, j) >= 0.0);
            CHECK(d(i, j) <= hi);
        }
    }
}

} // namespace

TEST_SUITE("cosine") {

TEST_CASE("worked cosine distances") {
    const auto f = test::from_rows({{1, 0}, {1, 0}, {0, 1}, {-1, 0}});
    const auto d = cosine_distance_matrix(f);
    CHECK(d(0, 1) == 0.0);
    CHECK(d(0, 2) == doctest::Approx(1.0));
    CHECK(d(0, 3) == doctest::Approx(2.0));
    CHECK(d.kind() == DistanceKind::cosine);
}

TEST_CASE("cosine invariants on random data") {
    std::mt19937_64 rng(3);
    check_distance_invariants(cosine_distance_matrix(test::random_unit_rows(40, 5, rng)), 2.0);
}

TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(cosine_distance_matrix(FeatureMatrix{}), InputError);
}

}

TEST_SUITE("jaccard") {

TEST_CASE("parameter domain") {
    std::mt19937_64 rng(1);
    const auto f = test::random_unit_rows(10, 3, rng);
    CHECK_THROWS_AS(k_reciprocal_jaccard(f, {10, 2}), InputError);
    CHECK_THROWS_AS(k_reciprocal_jaccard(f, {3, 4}), InputError);
    CHECK_THROWS_AS(k_reciprocal_jaccard(f, {3, 0}), InputError);
    CHECK_NOTHROW(k_reciprocal_jaccard(f, {9, 9}));
    const auto c = RerankParams{20, 6}.clipped(5);
    CHECK(c.k1 == 4);
    CHECK(c.k2 == 4);
}

TEST_CASE("coincident points are at distance zero") {
    // p and q coincide inside a tight trio; a second trio sits far away.
    const auto f = test::from_rows({{1, 0.05}, {1, 0.05}, {1, 0.12}, {0.1, 1}, {0.02, 1}, {-0.05, 1}});
    for (int k2 : {1, 2}) {
        const auto d = k_reciprocal_jaccard(f, {2, k2});
        CHECK(std::abs(d(0, 1)) <= 1e-12);
    }
}

TEST_CASE("unrelated neighborhoods are at distance one") {
    const auto f = test::from_rows({{1, 0.05}, {1, 0.1}, {1, 0.15}, {0.1, 1}, {0.05, 1}, {0, 1}});
    const auto d = k_reciprocal_jaccard(f, {2, 1});
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 3; j < 6; ++j) {
            CHECK(d(i, j) == 1.0);
        }
    }
}

TEST_CASE("six planar points match the nested-loop oracle") {
    const auto f = test::from_rows({{1, 0}, {0.95, 0.3}, {0.8, 0.6}, {0, 1}, {-0.6, 0.8}, {-1, 0.1}});
    CHECK(max_oracle_gap(f, 2, 1) <= 1e-9);
}

TEST_CASE("random instances match the nested-loop oracle") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(4, 30), dim(2, 6);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::size_t>(size(rng));
        const auto f = test::random_unit_rows(n, static_cast<std::size_t>(dim(rng)), rng);
        const int k1 = std::uniform_int_distribution<int>(1, static_cast<int>(n) - 1)(rng);
        const int k2 = std::uniform_int_distribution<int>(1, k1)(rng);
        CAPTURE(trial);
        CAPTURE(n);
        CAPTURE(k1);
        CAPTURE(k2);
        CHECK(max_oracle_gap(f, k1, k2) <= 1e-9);
    }
}

TEST_CASE("clustered instances match the nested-loop oracle") {
    // Tight clusters exercise the reciprocal expansion far more than
    // uniform noise does.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto data = generate_synthetic({4, 7, 5, 0.2, seed});
        CAPTURE(seed);
        CHECK(max_oracle_gap(data.features, 6, 3) <= 1e-9);
        CHECK(max_oracle_gap(data.features, 10, 4) <= 1e-9);
    }
}

TEST_CASE("jaccard invariants") {
    std::mt19937_64 rng(8);
    const auto f = test::random_unit_rows(70, 6, rng);
    const auto d = k_reciprocal_jaccard(f, {20, 6});
    CHECK(d.kind() == DistanceKind::jaccard);
    check_distance_invariants(d, 1.0);
}

TEST_CASE("jaccard is rotation invariant") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const auto f = test::random_unit_rows(50, 7, rng);
        const auto q = random_rotation(7, rng);
        Matrix rotated(50, 7);
        for (std::size_t r = 0; r < 50; ++r) {
            for (std::size_t c = 0; c < 7; ++c) {
                double s = 0.0;
                for (std::size_t t = 0; t < 7; ++t) {
                    s += f(r, t) * q(t, c);
                }
                rotated(r, c) = s;
            }
        }
        const auto a = k_reciprocal_jaccard(f, {12, 4});
        const auto b = k_reciprocal_jaccard(FeatureMatrix::normalized(std::move(rotated)), {12, 4});
        double gap = 0.0;
        for (std::size_t i = 0; i < a.data().size(); ++i) {
            gap = std::max(gap, std::abs(a.data()[i] - b.data()[i]));
        }
        CHECK(gap <= 1e-6);
    }
}

TEST_CASE("encoding rows sum to one") {
    std::mt19937_64 rng(4);
    const auto f = test::random_unit_rows(30, 4, rng);
    const auto rows = k_reciprocal_encoding(cosine_distance_matrix(f), {8, 3});
    for (const auto& r : rows) {
        double s = 0.0;
        for (double v : r.value) {
            s += v;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::is_sorted(r.index.begin(), r.index.end()));
    }
}

}
