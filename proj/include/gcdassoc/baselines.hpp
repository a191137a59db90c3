#ifndef GCDASSOC_BASELINES_HPP
#define GCDASSOC_BASELINES_HPP

#include "gcdassoc/core.hpp"
#include "gcdassoc/distance.hpp"
#include "gcdassoc/feature_store.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gcd {

struct KmeansParams {
    int k = 0;
    int max_iters = 100;
    std::uint64_t seed = 0;
    double tol = 1e-6;
};

/**
 * Semi-supervised k-means. The first C1 centers start at the labeled class
 * means, the rest are seeded k-means++ style from unlabeled rows. Labeled
 * instances are pinned to their class cluster on every assignment step.
 */
std::vector<int> semi_kmeans(const FeatureMatrix& feats, const PartialLabels& labels,
                             const KmeansParams& params);

struct DbscanParams {
    double eps = 0.35;
    int min_pts = 4;
    bool constrained = false;
};

/**
 * DBSCAN on a precomputed distance matrix after masking distances between
 * labeled instances of different classes to eps + 1.
 *
 * With `constrained`, a point whose label conflicts with the known class
 * already present in the expanding cluster is skipped (left for a later
 * cluster), so no cluster holds two known classes.
 *
 * Returns a cluster id per instance, kUnassigned for noise.
 */
std::vector<int> semi_dbscan(const DistanceMatrix& dist, const PartialLabels& labels,
                             const DbscanParams& params);

/// Replaces kUnassigned entries with the nearest cluster center (cosine).
/// Returns the input unchanged when no cluster exists.
std::vector<int> assign_noise_to_nearest(const FeatureMatrix& feats, std::span<const int> cluster_of);

} // namespace gcd

#endif
