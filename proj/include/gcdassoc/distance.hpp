#ifndef GCDASSOC_DISTANCE_HPP
#define GCDASSOC_DISTANCE_HPP

#include "gcdassoc/core.hpp"
#include "gcdassoc/kernels.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gcd {

enum class DistanceKind { cosine, jaccard };

enum class Exec { serial, parallel };

/// Symmetric n x n distance matrix with zero diagonal.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    DistanceMatrix(std::size_t n, DistanceKind kind, std::vector<double> data);

    std::size_t size() const { return n_; }
    DistanceKind kind() const { return kind_; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    std::span<const double> data() const { return data_; }

    friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

private:
    std::size_t n_ = 0;
    DistanceKind kind_ = DistanceKind::cosine;
    std::vector<double> data_;
};

/// k1: k-reciprocal neighborhood size; k2: query-expansion size.
struct RerankParams {
    int k1 = 20;
    int k2 = 6;

    /// Throws InputError unless k1 >= k2 >= 1 and k1 < n.
    void validate(std::size_t n) const;

    /// Shrinks k1 to n-1 (and k2 to k1) for small inputs.
    RerankParams clipped(std::size_t n) const;
};

DistanceMatrix cosine_distance_matrix(const FeatureMatrix& feats, Exec exec = Exec::parallel);

/**
 * k-reciprocal encoded Jaccard distance.
 *
 * Neighbor lists hold the query itself at rank 0 followed by the other
 * points in ascending (cosine distance, index) order, so kNN(p, k) has k+1
 * entries.
 *
 * 1. R(p, k1): members q of kNN(p, k1) with p in kNN(q, k1).
 * 2. R*(p) = R(p) plus R(q, ceil(k1/2)) for each q in R(p) whose half-size
 *    reciprocal set overlaps R(p) in at least two thirds of its members.
 * 3. V_p[q] = exp(-d(p,q)) over q in R*(p), scaled to sum 1.
 * 4. V_p is replaced by the mean of V over the first k2 entries of p's
 *    neighbor list (k2 = 1 leaves V unchanged).
 * 5. D(p,q) = 1 - sum_j min(V_p[j], V_q[j]) / sum_j max(V_p[j], V_q[j]).
 */
DistanceMatrix k_reciprocal_jaccard(const FeatureMatrix& feats, const RerankParams& params,
                                    Exec exec = Exec::parallel);

/// Steps 1-4 above; exposed for inspection and testing.
std::vector<kernels::SparseRow> k_reciprocal_encoding(const DistanceMatrix& cosine,
                                                      const RerankParams& params,
                                                      Exec exec = Exec::parallel);

} // namespace gcd

#endif
