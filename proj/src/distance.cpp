#include "gcdassoc/distance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gcd {

namespace {

using kernels::SparseRow;

// Row-major n x stride neighbor lists, self at rank 0.
struct RankTable {
    std::vector<std::uint32_t> idx;
    std::size_t stride = 0;

    std::span<const std::uint32_t> prefix(std::size_t p, std::size_t k) const {
        return {idx.data() + p * stride, k + 1};
    }
};

bool in_knn(const RankTable& rank, std::size_t q, std::size_t k, std::uint32_t p) {
    const auto list = rank.prefix(q, k);
    return std::find(list.begin(), list.end(), p) != list.end();
}

// Sorted k-reciprocal set of p.
std::vector<std::uint32_t> reciprocal_set(const RankTable& rank, std::size_t p, std::size_t k) {
    std::vector<std::uint32_t> out;
    for (auto q : rank.prefix(p, k)) {
        if (in_knn(rank, q, k, static_cast<std::uint32_t>(p))) {
            out.push_back(q);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t overlap(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    std::size_t i = 0, j = 0, n = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++n, ++i, ++j;
        }
    }
    return n;
}

SparseRow encode_row(const DistanceMatrix& cosine, const std::vector<std::vector<std::uint32_t>>& full,
                     const std::vector<std::vector<std::uint32_t>>& half, std::size_t p) {
    const auto& base = full[p];
    std::vector<std::uint32_t> expanded = base;
    for (auto q : base) {
        const auto& cand = half[q];
        if (3 * overlap(cand, base) >= 2 * cand.size()) {
            expanded.insert(expanded.end(), cand.begin(), cand.end());
        }
    }
    std::sort(expanded.begin(), expanded.end());
    expanded.erase(std::unique(expanded.begin(), expanded.end()), expanded.end());

    SparseRow row;
    row.index = std::move(expanded);
    row.value.resize(row.index.size());
    double total = 0.0;
    for (std::size_t t = 0; t < row.index.size(); ++t) {
        row.value[t] = std::exp(-cosine(p, row.index[t]));
        total += row.value[t];
    }
    for (double& v : row.value) {
        v /= total;
    }
    return row;
}

SparseRow expand_row(std::span<const SparseRow> v, const RankTable& rank, std::size_t k2,
                     std::size_t p, std::vector<double>& dense, std::vector<std::uint32_t>& touched) {
    touched.clear();
    for (auto q : rank.prefix(p, k2 - 1)) {
        const auto& rq = v[q];
        for (std::size_t t = 0; t < rq.index.size(); ++t) {
            const auto j = rq.index[t];
            if (dense[j] == 0.0) {
                touched.push_back(j);
            }
            dense[j] += rq.value[t];
        }
    }
    std::sort(touched.begin(), touched.end());
    SparseRow out;
    out.index = touched;
    out.value.resize(touched.size());
    for (std::size_t t = 0; t < touched.size(); ++t) {
        out.value[t] = dense[touched[t]] / static_cast<double>(k2);
        dense[touched[t]] = 0.0;
    }
    return out;
}

} // namespace

DistanceMatrix::DistanceMatrix(std::size_t n, DistanceKind kind, std::vector<double> data)
    : n_(n), kind_(kind), data_(std::move(data)) {
    if (data_.size() != n * n) {
        throw InputError("distance matrix data is not n x n");
    }
}

void RerankParams::validate(std::size_t n) const {
    if (k2 < 1 || k1 < k2) {
        throw InputError("re-ranking needs k1 >= k2 >= 1 (k1=" + std::to_string(k1) +
                         ", k2=" + std::to_string(k2) + ")");
    }
    if (static_cast<std::size_t>(k1) >= n) {
        throw InputError("re-ranking needs k1 < n (k1=" + std::to_string(k1) +
                         ", n=" + std::to_string(n) + ")");
    }
}

RerankParams RerankParams::clipped(std::size_t n) const {
    RerankParams p = *this;
    if (n >= 2 && static_cast<std::size_t>(p.k1) > n - 1) {
        p.k1 = static_cast<int>(n - 1);
    }
    p.k2 = std::min(p.k2, p.k1);
    return p;
}

DistanceMatrix cosine_distance_matrix(const FeatureMatrix& feats, Exec exec) {
    if (feats.empty()) {
        throw InputError("cosine distance of an empty matrix");
    }
    const std::size_t n = feats.rows();
    std::vector<double> out(n * n);
    if (exec == Exec::serial) {
        kernels::serial::cosine_distance(feats, out);
    } else {
        kernels::omp::cosine_distance(feats, out);
    }
    return DistanceMatrix(n, DistanceKind::cosine, std::move(out));
}

std::vector<SparseRow> k_reciprocal_encoding(const DistanceMatrix& cosine,
                                             const RerankParams& params, Exec exec) {
    const std::size_t n = cosine.size();
    params.validate(n);
    const auto k1 = static_cast<std::size_t>(params.k1);
    const auto k2 = static_cast<std::size_t>(params.k2);
    const std::size_t half = (k1 + 1) / 2;

    RankTable rank;
    rank.stride = k1 + 1;
    rank.idx = exec == Exec::serial ? kernels::serial::knn_rank(cosine.data(), n, k1 + 1)
                                    : kernels::omp::knn_rank(cosine.data(), n, k1 + 1);

    std::vector<std::vector<std::uint32_t>> full(n), halfsets(n);
    std::vector<SparseRow> v(n);
    const auto np = static_cast<std::ptrdiff_t>(n);
    const bool par = exec == Exec::parallel;

#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t p = 0; p < np; ++p) {
        full[static_cast<std::size_t>(p)] = reciprocal_set(rank, static_cast<std::size_t>(p), k1);
        halfsets[static_cast<std::size_t>(p)] =
            reciprocal_set(rank, static_cast<std::size_t>(p), half);
    }

#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t p = 0; p < np; ++p) {
        v[static_cast<std::size_t>(p)] = encode_row(cosine, full, halfsets, static_cast<std::size_t>(p));
    }

    if (k2 == 1) {
        return v;
    }
    std::vector<SparseRow> expanded(n);
#pragma omp parallel if (par)
    {
        std::vector<double> dense(n, 0.0);
        std::vector<std::uint32_t> touched;
#pragma omp for schedule(static)
        for (std::ptrdiff_t p = 0; p < np; ++p) {
            expanded[static_cast<std::size_t>(p)] =
                expand_row(v, rank, k2, static_cast<std::size_t>(p), dense, touched);
        }
    }
    return expanded;
}

DistanceMatrix k_reciprocal_jaccard(const FeatureMatrix& feats, const RerankParams& params,
                                    Exec exec) {
    if (feats.empty()) {
        throw InputError("jaccard distance of an empty matrix");
    }
    params.validate(feats.rows());
    const auto cosine = cosine_distance_matrix(feats, exec);
    const auto rows = k_reciprocal_encoding(cosine, params, exec);
    const std::size_t n = feats.rows();
    std::vector<double> out(n * n);
    if (exec == Exec::serial) {
        kernels::serial::weighted_jaccard(rows, out);
    } else {
        kernels::omp::weighted_jaccard(rows, out);
    }
    return DistanceMatrix(n, DistanceKind::jaccard, std::move(out));
}

} // namespace gcd
