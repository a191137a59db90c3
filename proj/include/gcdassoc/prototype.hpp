#ifndef GCDASSOC_PROTOTYPE_HPP
#define GCDASSOC_PROTOTYPE_HPP

#include "gcdassoc/association.hpp"
#include "gcdassoc/core.hpp"
#include "gcdassoc/evaluation.hpp"
#include "gcdassoc/feature_store.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gcd {

inline constexpr double kDefaultTemperature = 0.05;
inline constexpr double kDefaultMomentum = 0.2;

/// One unit-norm prototype per group, with EMA rate and softmax temperature.
struct ProxyMemory {
    Matrix prototypes;
    double momentum = kDefaultMomentum;
    double temperature = kDefaultTemperature;

    std::size_t size() const { return prototypes.rows(); }
    void validate() const;
};

/// Row g = normalized mean of the features in group g.
ProxyMemory init_memory(const FeatureMatrix& feats, std::span<const int> group_of,
                        std::size_t num_groups, double momentum = kDefaultMomentum,
                        double temperature = kDefaultTemperature);

struct NpaResult {
    double loss = 0.0;
    /// d loss / d feature, one row per batch instance.
    Matrix grad;
    /// Softmax over prototypes, one row per batch instance.
    Matrix probs;
};

/**
 * Non-parametric prototypical contrastive loss
 *
 *   L = -(1/B) sum_i log softmax(K f_i / tau)[y_i]
 *
 * and its gradient (1/B)(sum_j p_ij K_j - K_{y_i}) / tau with respect to
 * each batch feature f_i.
 */
NpaResult npa_loss_and_grad(const ProxyMemory& memory, const Matrix& batch_features,
                            std::span<const int> batch_labels);

/// K[label] <- normalize(mu K[label] + (1 - mu) feature). Other rows untouched.
void ema_update(ProxyMemory& memory, std::span<const double> feature, int label);

struct Batch {
    std::vector<std::size_t> indices;
    std::vector<int> pseudo_labels;

    std::size_t size() const { return indices.size(); }
};

/**
 * PK batches for one epoch. Groups are visited in passes: each pass is a
 * fresh shuffle of the non-empty groups cut into ceil(G/P) batches of P
 * distinct groups, the last batch topped up with other random groups.
 * Each group contributes K members, drawn with replacement when it has
 * fewer than K. The epoch holds enough passes to draw about one sample per
 * member. Entries equal to kUnassigned in `group_of` are ignored.
 */
std::vector<Batch> pk_sample(std::span<const int> group_of, int P, int K, std::uint64_t seed);

/// Linear embedding x -> normalize(x W).
struct ToyModel {
    Matrix weights;

    static ToyModel identity(std::size_t dim) { return {Matrix::identity(dim)}; }
    void embed(const Matrix& x, Matrix& out, Exec exec = Exec::parallel) const;
};

struct ToyStep {
    double loss = 0.0;
    /// d loss / d W.
    Matrix grad_w;
    /// Embedded batch, one unit row per instance.
    Matrix features;
};

/// Contrastive loss of one batch embedded as normalize(x W), with the
/// gradient carried back through the normalization to W.
ToyStep toy_loss_and_grad(const ToyModel& model, const ProxyMemory& memory, const Matrix& x,
                          std::span<const int> labels);

struct TrainConfig {
    double threshold = 0.35;
    RerankParams rerank{};
    double temperature = kDefaultTemperature;
    double momentum = kDefaultMomentum;
    double subset_ratio = 1.0;
    std::uint64_t seed = 0;
    int epochs = 30;
    double lr = 0.001;
    int P = 8;
    int K = 16;
    /// When false, only instances grouped by association itself enter batches.
    bool include_assigned = true;
    Exec exec = Exec::parallel;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double all_acc = 0.0;
    double old_acc = 0.0;
    double new_acc = 0.0;
    std::size_t num_groups = 0;

    std::string to_json() const;
};

struct TrainResult {
    ToyModel model;
    std::vector<int> final_group_of;
    std::vector<EpochRecord> history;
    /// Evaluation of the association on the final embedding (needs truth).
    std::optional<AccReport> final_report;
    FeatureMatrix final_features;
};

/**
 * Alternates association and representation learning. Each epoch embeds
 * every instance, associates, rebuilds the proxy memory from the groups and
 * runs PK batches of loss minimization with EMA memory updates. History
 * accuracies are filled in only when `truth` is given.
 */
TrainResult train_stage1(const FeatureMatrix& raw_features, const PartialLabels& labels,
                         ToyModel model, const TrainConfig& cfg,
                         std::optional<std::span<const int>> truth = std::nullopt);

} // namespace gcd

#endif
