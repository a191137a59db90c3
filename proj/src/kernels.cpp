#include "gcdassoc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <omp.h>

namespace gcd::kernels {

namespace {

void cosine_row(const FeatureMatrix& feats, std::size_t i, std::span<double> out) {
    const std::size_t n = feats.rows();
    const auto a = feats.row(i);
    for (std::size_t j = 0; j < n; ++j) {
        double d = 1.0 - dot(a, feats.row(j));
        out[i * n + j] = i == j ? 0.0 : std::clamp(d, 0.0, 2.0);
    }
}

void rank_row(std::span<const double> dist, std::size_t n, std::size_t k, std::size_t i,
              std::vector<std::uint32_t>& scratch, std::span<std::uint32_t> out) {
    scratch.resize(n);
    std::iota(scratch.begin(), scratch.end(), 0u);
    const double* row = dist.data() + i * n;
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                      scratch.end(), [row, self = static_cast<std::uint32_t>(i)](std::uint32_t a, std::uint32_t b) {
                          if (a == self || b == self) {
                              return a == self && b != self;
                          }
                          return row[a] < row[b] || (row[a] == row[b] && a < b);
                      });
    std::copy_n(scratch.begin(), k, out.begin() + static_cast<std::ptrdiff_t>(i * k));
}

// Column -> (row, value) lists, rows ascending.
struct Postings {
    std::vector<std::size_t> offset;
    std::vector<std::uint32_t> row;
    std::vector<double> value;
};

Postings build_postings(std::span<const SparseRow> rows) {
    const std::size_t n = rows.size();
    Postings p;
    p.offset.assign(n + 1, 0);
    for (const auto& r : rows) {
        for (auto j : r.index) {
            ++p.offset[j + 1];
        }
    }
    std::partial_sum(p.offset.begin(), p.offset.end(), p.offset.begin());
    p.row.resize(p.offset.back());
    p.value.resize(p.offset.back());
    std::vector<std::size_t> fill(p.offset.begin(), p.offset.end() - 1);
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t t = 0; t < rows[q].index.size(); ++t) {
            const auto j = rows[q].index[t];
            p.row[fill[j]] = static_cast<std::uint32_t>(q);
            p.value[fill[j]] = rows[q].value[t];
            ++fill[j];
        }
    }
    return p;
}

std::vector<double> row_sums(std::span<const SparseRow> rows) {
    std::vector<double> s(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s[i] = std::accumulate(rows[i].value.begin(), rows[i].value.end(), 0.0);
    }
    return s;
}

void jaccard_row(std::span<const SparseRow> rows, const Postings& post,
                 std::span<const double> sums, std::size_t p, std::vector<double>& acc,
                 std::vector<std::uint32_t>& touched, std::span<double> out) {
    const std::size_t n = rows.size();
    acc.assign(n, std::numeric_limits<double>::quiet_NaN());
    touched.clear();
    const auto& rp = rows[p];
    for (std::size_t t = 0; t < rp.index.size(); ++t) {
        const auto j = rp.index[t];
        const double v = rp.value[t];
        for (std::size_t e = post.offset[j]; e < post.offset[j + 1]; ++e) {
            const auto q = post.row[e];
            if (std::isnan(acc[q])) {
                acc[q] = 0.0;
                touched.push_back(q);
            }
            acc[q] += std::min(v, post.value[e]);
        }
    }
    double* row = out.data() + p * n;
    std::fill(row, row + n, 1.0);
    for (auto q : touched) {
        const double inter = acc[q];
        const double uni = sums[p] + sums[q] - inter;
        row[q] = uni > 0.0 ? std::clamp(1.0 - inter / uni, 0.0, 1.0) : 1.0;
    }
    row[p] = 0.0;
}

// Copies the upper triangle onto the lower one.
void mirror_upper(std::size_t n, std::span<double> out, std::size_t q) {
    for (std::size_t p = 0; p < q; ++p) {
        out[q * n + p] = out[p * n + q];
    }
}

int nearest_row(std::span<const double> x, const Matrix& centers) {
    int best = 0;
    double best_sim = dot(x, centers.row(0));
    for (std::size_t c = 1; c < centers.rows(); ++c) {
        const double s = dot(x, centers.row(c));
        if (s > best_sim) {
            best_sim = s;
            best = static_cast<int>(c);
        }
    }
    return best;
}

bool embed_row(const Matrix& x, const Matrix& w, Matrix& out, std::size_t r) {
    auto dst = out.row(r);
    std::fill(dst.begin(), dst.end(), 0.0);
    const auto src = x.row(r);
    for (std::size_t k = 0; k < w.rows(); ++k) {
        const double xk = src[k];
        const auto wk = w.row(k);
        for (std::size_t c = 0; c < w.cols(); ++c) {
            dst[c] += xk * wk[c];
        }
    }
    const double nrm = norm(dst);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        return false;
    }
    for (double& v : dst) {
        v /= nrm;
    }
    return true;
}

void check_embed_shapes(const Matrix& x, const Matrix& w, Matrix& out) {
    if (x.cols() != w.rows()) {
        throw InputError("embedding input dim does not match weight rows");
    }
    if (out.rows() != x.rows() || out.cols() != w.cols()) {
        out = Matrix(x.rows(), w.cols());
    }
}

void check_square(std::size_t size, std::size_t n) {
    if (size != n * n) {
        throw InputError("distance buffer is not n x n");
    }
}

} // namespace

void set_num_threads(int n) {
    static const int default_threads = omp_get_max_threads();
    omp_set_num_threads(n > 0 ? n : default_threads);
}

int max_threads() { return omp_get_max_threads(); }

namespace serial {

void cosine_distance(const FeatureMatrix& feats, std::span<double> out) {
    check_square(out.size(), feats.rows());
    for (std::size_t i = 0; i < feats.rows(); ++i) {
        cosine_row(feats, i, out);
    }
}

std::vector<std::uint32_t> knn_rank(std::span<const double> dist, std::size_t n, std::size_t k) {
    check_square(dist.size(), n);
    k = std::min(k, n);
    std::vector<std::uint32_t> out(n * k);
    std::vector<std::uint32_t> scratch;
    for (std::size_t i = 0; i < n; ++i) {
        rank_row(dist, n, k, i, scratch, out);
    }
    return out;
}

void weighted_jaccard(std::span<const SparseRow> rows, std::span<double> out) {
    const std::size_t n = rows.size();
    check_square(out.size(), n);
    const auto post = build_postings(rows);
    const auto sums = row_sums(rows);
    std::vector<double> acc;
    std::vector<std::uint32_t> touched;
    for (std::size_t p = 0; p < n; ++p) {
        jaccard_row(rows, post, sums, p, acc, touched, out);
    }
    for (std::size_t q = 0; q < n; ++q) {
        mirror_upper(n, out, q);
    }
}

std::vector<int> nearest_center(const Matrix& points, const Matrix& centers) {
    if (centers.rows() == 0) {
        throw InputError("nearest_center needs at least one center");
    }
    std::vector<int> out(points.rows());
    for (std::size_t r = 0; r < points.rows(); ++r) {
        out[r] = nearest_row(points.row(r), centers);
    }
    return out;
}

void embed(const Matrix& x, const Matrix& weights, Matrix& out) {
    check_embed_shapes(x, weights, out);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        if (!embed_row(x, weights, out, r)) {
            throw InputError("embedding produced a zero or non-finite row");
        }
    }
}

} // namespace serial

namespace omp {

void cosine_distance(const FeatureMatrix& feats, std::span<double> out) {
    check_square(out.size(), feats.rows());
    const auto n = static_cast<std::ptrdiff_t>(feats.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        cosine_row(feats, static_cast<std::size_t>(i), out);
    }
}

std::vector<std::uint32_t> knn_rank(std::span<const double> dist, std::size_t n, std::size_t k) {
    check_square(dist.size(), n);
    k = std::min(k, n);
    std::vector<std::uint32_t> out(n * k);
#pragma omp parallel
    {
        std::vector<std::uint32_t> scratch;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            rank_row(dist, n, k, static_cast<std::size_t>(i), scratch, out);
        }
    }
    return out;
}

void weighted_jaccard(std::span<const SparseRow> rows, std::span<double> out) {
    const std::size_t n = rows.size();
    check_square(out.size(), n);
    const auto post = build_postings(rows);
    const auto sums = row_sums(rows);
#pragma omp parallel
    {
        std::vector<double> acc;
        std::vector<std::uint32_t> touched;
#pragma omp for schedule(dynamic, 16)
        for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(n); ++p) {
            jaccard_row(rows, post, sums, static_cast<std::size_t>(p), acc, touched, out);
        }
#pragma omp for schedule(static)
        for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(n); ++q) {
            mirror_upper(n, out, static_cast<std::size_t>(q));
        }
    }
}

std::vector<int> nearest_center(const Matrix& points, const Matrix& centers) {
    if (centers.rows() == 0) {
        throw InputError("nearest_center needs at least one center");
    }
    std::vector<int> out(points.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(points.rows()); ++r) {
        out[static_cast<std::size_t>(r)] = nearest_row(points.row(static_cast<std::size_t>(r)), centers);
    }
    return out;
}

void embed(const Matrix& x, const Matrix& weights, Matrix& out) {
    check_embed_shapes(x, weights, out);
    int failed = 0;
#pragma omp parallel for schedule(static) reduction(| : failed)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(x.rows()); ++r) {
        if (!embed_row(x, weights, out, static_cast<std::size_t>(r))) {
            failed |= 1;
        }
    }
    if (failed) {
        throw InputError("embedding produced a zero or non-finite row");
    }
}

} // namespace omp

} // namespace gcd::kernels
