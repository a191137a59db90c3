#ifndef GCDASSOC_EVALUATION_HPP
#define GCDASSOC_EVALUATION_HPP

#include "gcdassoc/feature_store.hpp"

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace gcd {

struct MatchResult {
    /// Predicted id -> truth id for every predicted id matched to a real class.
    std::map<int, int> mapping;
    std::size_t matched = 0;
};

/// Maximum-weight one-to-one matching of predicted ids to truth ids over the
/// zero-padded square contingency table.
MatchResult hungarian_match(std::span<const int> pred, std::span<const int> truth);

/// Solves the square assignment problem maximizing total weight. Returns the
/// column assigned to each row.
std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<long long>>& weight);

struct AccReport {
    double all_acc = 0.0;
    double old_acc = 0.0;
    double new_acc = 0.0;
    std::size_t num_predicted_groups = 0;
    std::size_t num_true_classes = 0;
    double class_count_error_rate = 0.0;
    std::size_t num_old = 0;
    std::size_t num_new = 0;

    /// The six-field machine-readable form.
    std::string to_json() const;
};

double class_count_error_rate(std::size_t predicted, std::size_t truth);

/**
 * Clustering accuracy over the unlabeled instances. One matching is fitted
 * on all of them; Old and New accuracies reuse that matching on the
 * instances whose true class is / is not in `known_classes`. Group counts
 * are taken over the whole dataset.
 */
AccReport acc_report(std::span<const int> pred, std::span<const int> truth,
                     const PartialLabels& labels, const std::set<int>& known_classes);

/// Known classes inferred as the true classes of the labeled instances.
AccReport acc_report(std::span<const int> pred, std::span<const int> truth,
                     const PartialLabels& labels);

} // namespace gcd

#endif
