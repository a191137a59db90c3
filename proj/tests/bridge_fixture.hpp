#ifndef GCDASSOC_TEST_BRIDGE_FIXTURE_HPP
#define GCDASSOC_TEST_BRIDGE_FIXTURE_HPP

#include "gcdassoc/core.hpp"
#include "gcdassoc/feature_store.hpp"

#include <cmath>
#include <vector>

namespace gcd::test {

/**
 * Seven points on an arc, 0.1 rad apart. Points 0-1 are labeled class 0,
 * points 5-6 class 1, and the unlabeled points 2-4 bridge the two. With a
 * cosine radius that only reaches adjacent points, density clustering can
 * walk from one known class to the other.
 */
struct Bridge {
    FeatureMatrix features;
    PartialLabels labels;
    /// Covers adjacent points (1 - cos 0.1 ~ 0.005) and nothing further.
    double dbscan_eps = 0.006;
    int min_pts = 2;
    /// Reaches proxy-to-bridge pairs but not two hops.
    double association_threshold = 0.015;
};

inline Bridge make_bridge() {
    Matrix m(7, 2);
    for (std::size_t i = 0; i < 7; ++i) {
        const double a = 0.1 * static_cast<double>(i);
        m(i, 0) = std::cos(a);
        m(i, 1) = std::sin(a);
    }
    return {FeatureMatrix::normalized(std::move(m)), PartialLabels::from_labels({0, 0, -1, -1, -1, 1, 1})};
}

} // namespace gcd::test

#endif
