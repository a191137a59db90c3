#ifndef GCDASSOC_KERNELS_HPP
#define GCDASSOC_KERNELS_HPP

#include "gcdassoc/core.hpp"

#include <cstdint>
#include <span>
#include <vector>

/**
 * @file kernels.hpp
 *
 * Row-parallel numeric kernels. Every kernel exists twice with the same
 * signature: `serial::` is the reference, `omp::` splits rows across OpenMP
 * threads. Each output row is produced by one thread with a fixed reduction
 * order, so the two variants agree bit for bit at any thread count.
 */

namespace gcd::kernels {

/// Sparse nonnegative vector with strictly increasing column indices.
struct SparseRow {
    std::vector<std::uint32_t> index;
    std::vector<double> value;
};

/// Sets the OpenMP thread count used by `omp::` kernels. n <= 0 restores the default.
void set_num_threads(int n);
int max_threads();

namespace serial {

/// out[i*n+j] = clamp(1 - <row_i,row_j>, 0, 2), zero diagonal.
void cosine_distance(const FeatureMatrix& feats, std::span<double> out);

/// Row i's own index, then the other indices by ascending (distance, index);
/// first k entries per row, row-major n x k.
std::vector<std::uint32_t> knn_rank(std::span<const double> dist, std::size_t n, std::size_t k);

/// out[i*n+j] = 1 - sum(min)/sum(max) over the sparse rows; symmetric, zero diagonal.
void weighted_jaccard(std::span<const SparseRow> rows, std::span<double> out);

/// Index of the center with maximal dot product per row; ties go to the lower index.
std::vector<int> nearest_center(const Matrix& points, const Matrix& centers);

/// out = normalize(x W) per row; x is n x d_in, W is d_in x d_out.
void embed(const Matrix& x, const Matrix& weights, Matrix& out);

} // namespace serial

namespace omp {

void cosine_distance(const FeatureMatrix& feats, std::span<double> out);
std::vector<std::uint32_t> knn_rank(std::span<const double> dist, std::size_t n, std::size_t k);
void weighted_jaccard(std::span<const SparseRow> rows, std::span<double> out);
std::vector<int> nearest_center(const Matrix& points, const Matrix& centers);
void embed(const Matrix& x, const Matrix& weights, Matrix& out);

} // namespace omp

} // namespace gcd::kernels

#endif
