#include "doctest.h"
#include "test_util.hpp"

#include "gcdassoc/feature_store.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <set>

using namespace gcd;

TEST_SUITE("core") {

TEST_CASE("feature matrix rejects non-unit and non-finite rows") {
    CHECK_THROWS_AS(FeatureMatrix(Matrix(1, 2, std::vector<double>{0.5, 0.0})), InputError);
    CHECK_THROWS_AS(FeatureMatrix(Matrix(1, 2, std::vector<double>{NAN, 1.0})), InputError);
    CHECK_NOTHROW(FeatureMatrix(Matrix(1, 2, std::vector<double>{1.0, 5e-5})));
    CHECK_THROWS_AS(FeatureMatrix::normalized(Matrix(1, 2, 0.0)), InputError);
}

TEST_CASE("matrix constructor checks data size") {
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0}), InputError);
}

TEST_CASE("select keeps the requested order") {
    const auto f = test::from_rows({{1, 0}, {0, 1}, {-1, 0}});
    const std::vector<std::size_t> idx{2, 0};
    const auto s = f.select(idx);
    REQUIRE(s.rows() == 2);
    CHECK(s(0, 0) == -1.0);
    CHECK(s(1, 0) == 1.0);
}

}

TEST_SUITE("synthetic") {

TEST_CASE("zero noise reproduces the class means") {
    const auto data = generate_synthetic({2, 3, 4, 0.0, 11});
    REQUIRE(data.features.rows() == 6);
    REQUIRE(data.truth == std::vector<int>{0, 0, 0, 1, 1, 1});
    for (std::size_t r = 0; r < 6; ++r) {
        const std::size_t first = r < 3 ? 0 : 3;
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(data.features(r, c) == data.features(first, c));
        }
    }
}

TEST_CASE("equal seeds give bit-identical data") {
    const SyntheticSpec spec{20, 50, 32, 0.3, 7};
    const auto a = generate_synthetic(spec);
    const auto b = generate_synthetic(spec);
    CHECK(a.features == b.features);
    CHECK(a.truth == b.truth);
    CHECK(!(generate_synthetic({20, 50, 32, 0.3, 8}).features == a.features));
}

TEST_CASE("within-class similarity beats cross-class similarity") {
    const auto data = generate_synthetic({3, 10, 8, 0.05, 3});
    double within = 0.0, cross = 0.0;
    std::size_t nw = 0, nc = 0;
    for (std::size_t i = 0; i < data.features.rows(); ++i) {
        for (std::size_t j = i + 1; j < data.features.rows(); ++j) {
            const double s = dot(data.features.row(i), data.features.row(j));
            if (data.truth[i] == data.truth[j]) {
                within += s, ++nw;
            } else {
                cross += s, ++nc;
            }
        }
    }
    CHECK(within / static_cast<double>(nw) > cross / static_cast<double>(nc));
}

TEST_CASE("rows are unit norm") {
    const auto data = generate_synthetic({5, 7, 3, 1.5, 1});
    for (std::size_t r = 0; r < data.features.rows(); ++r) {
        CHECK(norm(data.features.row(r)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(generate_synthetic({2, 3, 1, 0.1, 0}), InputError);
    CHECK_THROWS_AS(generate_synthetic({2, 1, 4, 0.1, 0}), InputError);
    CHECK_THROWS_AS(generate_synthetic({1, 3, 4, 0.1, 0}), InputError);
    CHECK_THROWS_AS(generate_synthetic({2, 3, 4, -0.1, 0}), InputError);
}

}

TEST_SUITE("split") {

std::vector<int> blocks(int classes, int per) {
    std::vector<int> t;
    for (int c = 0; c < classes; ++c) {
        t.insert(t.end(), static_cast<std::size_t>(per), c);
    }
    return t;
}

TEST_CASE("full supervision labels everything") {
    const auto truth = blocks(4, 5);
    const auto l = make_split(truth, {1.0, 1.0, 3});
    CHECK(l.num_known_classes == 4);
    CHECK(l.num_unlabeled() == 0);
}

TEST_CASE("half of twenty classes, half of their samples") {
    const auto truth = blocks(20, 50);
    const auto l = make_split(truth, {0.5, 0.5, 0});
    CHECK(l.num_known_classes == 10);
    CHECK(l.num_labeled() == 250);
}

TEST_CASE("quarter split rounds up per class") {
    const auto truth = blocks(20, 40);
    const auto l = make_split(truth, {0.25, 0.25, 5});
    CHECK(l.num_known_classes == 5);
    CHECK(l.num_labeled() == 50);
}

TEST_CASE("known classes are renumbered densely and consistently") {
    const auto truth = blocks(9, 7);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto l = make_split(truth, {0.4, 0.3, seed});
        std::map<int, std::set<int>> origin;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (l.is_labeled(i)) {
                origin[l.labels[i]].insert(truth[i]);
            }
        }
        REQUIRE(static_cast<int>(origin.size()) == l.num_known_classes);
        std::set<int> used;
        for (const auto& [label, src] : origin) {
            CHECK(src.size() == 1);
            used.insert(*src.begin());
        }
        CHECK(static_cast<int>(used.size()) == l.num_known_classes);
        const auto ids = known_class_ids(truth, l);
        CHECK(std::is_sorted(ids.begin(), ids.end()));
    }
}

TEST_CASE("split is a pure function of its seed") {
    const auto truth = blocks(10, 12);
    CHECK(make_split(truth, {0.5, 0.5, 4}).labels == make_split(truth, {0.5, 0.5, 4}).labels);
}

TEST_CASE("split ratios outside (0,1] are rejected") {
    const auto truth = blocks(3, 3);
    CHECK_THROWS_AS(make_split(truth, {0.0, 0.5, 0}), InputError);
    CHECK_THROWS_AS(make_split(truth, {0.5, 1.5, 0}), InputError);
    CHECK_THROWS_AS(make_split({}, {0.5, 0.5, 0}), InputError);
}

}

TEST_SUITE("labels") {

TEST_CASE("from_labels derives the class count") {
    const auto l = PartialLabels::from_labels({-1, 0, 1});
    CHECK(l.num_known_classes == 2);
    CHECK(l.num_unlabeled() == 1);
    CHECK(PartialLabels::from_labels({-1, -1}).num_known_classes == 0);
    CHECK_THROWS_AS(PartialLabels::from_labels({0, 2}), InputError);
    CHECK_THROWS_AS(PartialLabels::from_labels({0, -2}), InputError);
}

TEST_CASE("label csv round trip and errors") {
    test::TempDir dir;
    const auto path = dir / "l.csv";
    test::write_file(path, "index,label\n0,-1\n1,0\n2,1\n");
    const auto l = load_labels(path);
    CHECK(l.labels == std::vector<int>{-1, 0, 1});
    CHECK(l.num_known_classes == 2);

    save_labels(l, dir / "again.csv");
    CHECK(test::read_file(dir / "again.csv") == test::read_file(path));

    test::write_file(path, "index,label\n0,-1\n1,-1\n");
    CHECK(load_labels(path).num_known_classes == 0);

    test::write_file(path, "index,label\n0,0\n1,2\n");
    CHECK_THROWS_AS(load_labels(path), InputError);

    test::write_file(path, "index,label\n0,0\n0,0\n");
    CHECK_THROWS_AS(load_labels(path), FormatError);

    test::write_file(path, "index,label\n0,0\n1,-3\n");
    CHECK_THROWS_AS(load_labels(path), InputError);

    test::write_file(path, "index,label\n0,0\n1,0\n5,0\n");
    CHECK_THROWS_AS(load_labels(path, 3), FormatError);

    test::write_file(path, "idx,label\n0,0\n");
    CHECK_THROWS_AS(load_labels(path), FormatError);

    CHECK_THROWS_AS(load_labels(dir / "missing.csv"), InputError);
}

TEST_CASE("index csv accepts unordered rows") {
    test::TempDir dir;
    test::write_file(dir / "g.csv", "index,group\n2,7\n0,5\n1,6\n");
    CHECK(load_index_csv(dir / "g.csv", "group") == std::vector<int>{5, 6, 7});
    CHECK_THROWS_AS(load_index_csv(dir / "g.csv", "group", 4), FormatError);
}

}

TEST_SUITE("palf") {

TEST_CASE("save then load is bit exact") {
    std::mt19937_64 rng(1);
    const auto f = test::random_unit_rows(5, 3, rng);
    test::TempDir dir;
    save_features(f, dir / "a.palf");
    const auto g = load_features(dir / "a.palf");
    REQUIRE(g.rows() == 5);
    REQUIRE(g.dim() == 3);
    for (std::size_t r = 0; r < 5; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(g(r, c) == static_cast<double>(static_cast<float>(f(r, c))));
        }
    }
    save_features(g, dir / "b.palf");
    CHECK(test::read_file(dir / "a.palf") == test::read_file(dir / "b.palf"));
}

TEST_CASE("header layout") {
    test::TempDir dir;
    save_matrix(Matrix(2, 3, 1.0), dir / "m.palf");
    const auto bytes = test::read_file(dir / "m.palf");
    REQUIRE(bytes.size() == 4 + 2 + 4 + 4 + 6 * 4);
    CHECK(bytes.substr(0, 4) == "PALF");
    std::uint16_t version = 0;
    std::uint32_t rows = 0, cols = 0;
    std::memcpy(&version, bytes.data() + 4, 2);
    std::memcpy(&rows, bytes.data() + 6, 4);
    std::memcpy(&cols, bytes.data() + 10, 4);
    CHECK(version == 1);
    CHECK(rows == 2);
    CHECK(cols == 3);
}

TEST_CASE("corrupt files are format errors") {
    test::TempDir dir;
    save_matrix(Matrix(2, 2, 1.0), dir / "ok.palf");
    auto bytes = test::read_file(dir / "ok.palf");

    auto bad = bytes;
    bad.replace(0, 4, "XXXX");
    test::write_file(dir / "magic.palf", bad);
    CHECK_THROWS_AS(load_matrix(dir / "magic.palf"), FormatError);

    test::write_file(dir / "short.palf", bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_matrix(dir / "short.palf"), FormatError);

    test::write_file(dir / "long.palf", bytes + "x");
    CHECK_THROWS_AS(load_matrix(dir / "long.palf"), FormatError);

    auto nan = bytes;
    const float q = NAN;
    std::memcpy(nan.data() + 14, &q, 4);
    test::write_file(dir / "nan.palf", nan);
    CHECK_THROWS_AS(load_matrix(dir / "nan.palf"), FormatError);

    CHECK_THROWS_AS(load_matrix(dir / "absent.palf"), InputError);
}

TEST_CASE("normalize flag governs off-sphere rows") {
    test::TempDir dir;
    save_matrix(Matrix(1, 2, std::vector<double>{0.3, 0.4}), dir / "half.palf");
    CHECK_THROWS_AS(load_features(dir / "half.palf"), FormatError);
    const auto f = load_features(dir / "half.palf", true);
    CHECK(std::abs(norm(f.row(0)) - 1.0) <= 1e-12);

    save_matrix(Matrix(1, 2, 0.0), dir / "zero.palf");
    CHECK_THROWS_AS(load_features(dir / "zero.palf", true), FormatError);
}

}
