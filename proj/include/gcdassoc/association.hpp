#ifndef GCDASSOC_ASSOCIATION_HPP
#define GCDASSOC_ASSOCIATION_HPP

#include "gcdassoc/core.hpp"
#include "gcdassoc/distance.hpp"
#include "gcdassoc/feature_store.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gcd {

/**
 * Known-class proxies followed by unlabeled instances.
 *
 * Row c < num_known_classes is the renormalized mean of the labeled
 * features of class c. Row num_known_classes + m is the unlabeled instance
 * unlabeled_index[m] of the source dataset.
 */
struct HybridSet {
    FeatureMatrix features;
    int num_known_classes = 0;
    std::vector<std::size_t> unlabeled_index;

    std::size_t num_nodes() const { return features.rows(); }
};

struct CandidatePair {
    std::uint32_t i;
    std::uint32_t j;
    double distance;

    friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

/// Pairs (i < j) below the threshold, ascending by distance then (i, j).
struct CandidatePairs {
    std::vector<CandidatePair> pairs;
    double threshold = 0.0;
};

/**
 * Group label per node. Nodes 0..num_known_classes-1 are the proxies and
 * always carry their own class index; kUnassigned marks untouched nodes.
 */
struct Grouping {
    std::vector<int> group_of;
    int num_known_classes = 0;

    std::size_t num_groups() const;

    /// Throws InvariantError if two proxies share a group or a proxy lost its id.
    void check_prior_constraint() const;

    friend bool operator==(const Grouping&, const Grouping&) = default;
};

HybridSet build_hybrid(const FeatureMatrix& feats, const PartialLabels& labels);

/// Proxy-proxy pairs are never candidates.
CandidatePairs select_candidates(const DistanceMatrix& w, double threshold, int num_known_classes);

/**
 * Prior-constrained greedy association over pre-sorted candidate pairs.
 *
 * Two unassigned endpoints open a new group (ids count up from
 * num_known_classes); a single assigned endpoint absorbs the other; two
 * different groups merge into the smaller id unless both ids belong to
 * known classes. Runs in O(|P| alpha(n)) with a union-find whose roots carry
 * the group id.
 */
Grouping greedy_associate(const CandidatePairs& pairs, int num_known_classes,
                          std::size_t total_nodes);

/// Gives every unassigned node the group whose renormalized member mean is
/// most cosine-similar. Ties go to the smaller group id.
Grouping assign_unassociated(const Grouping& grouping, const HybridSet& hybrid,
                             Exec exec = Exec::parallel);

/// Number of distinct nonnegative group ids.
std::size_t estimate_class_count(std::span<const int> group_of);
inline std::size_t estimate_class_count(const Grouping& g) { return estimate_class_count(g.group_of); }

struct AssociationConfig {
    double threshold = 0.35;
    RerankParams rerank{};
    double subset_ratio = 1.0;
    std::uint64_t seed = 0;
    Exec exec = Exec::parallel;
};

struct AssociationResult {
    /// Per dataset instance. Known classes keep 0..C1-1, discovered groups
    /// are renumbered densely from C1 in order of their association id.
    std::vector<int> group_of;
    /// Row g is the center of group g.
    FeatureMatrix centers;
    /// True for instances grouped by association itself (labeled instances
    /// included) rather than by nearest-center assignment.
    std::vector<bool> directly_associated;
    std::size_t candidate_pair_count = 0;
    std::size_t num_unassigned_before_assign = 0;

    std::size_t num_groups() const { return centers.rows(); }
};

/// Full pipeline: hybrid set, optional subset sampling, Jaccard distance,
/// greedy association, then nearest-center assignment for the rest.
AssociationResult associate_dataset(const FeatureMatrix& feats, const PartialLabels& labels,
                                    const AssociationConfig& cfg);

/// Renormalized mean feature per group id in [0, num_groups).
Matrix group_centers(const FeatureMatrix& feats, std::span<const int> group_of,
                     std::size_t num_groups);

} // namespace gcd

#endif
