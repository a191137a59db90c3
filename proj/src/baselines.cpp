#include "gcdassoc/baselines.hpp"

#include "gcdassoc/association.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <string>

namespace gcd {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

std::size_t nearest_euclid(std::span<const double> x, const Matrix& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        const double d = sq_dist(x, centers.row(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// k-means++ seeding of centers [first, k) from the given candidate rows.
void seed_plus_plus(const FeatureMatrix& feats, std::span<const std::size_t> candidates,
                    Matrix& centers, std::size_t first, std::mt19937_64& rng) {
    const std::size_t k = centers.rows();
    if (first >= k) {
        return;
    }
    std::vector<double> d2(candidates.size(), std::numeric_limits<double>::infinity());
    auto refresh = [&](std::size_t upto) {
        for (std::size_t t = 0; t < candidates.size(); ++t) {
            for (std::size_t c = 0; c < upto; ++c) {
                d2[t] = std::min(d2[t], sq_dist(feats.row(candidates[t]), centers.row(c)));
            }
        }
    };
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    refresh(first);
    for (std::size_t c = first; c < k; ++c) {
        std::size_t pick = 0;
        double total = 0.0;
        for (double v : d2) {
            total += std::isinf(v) ? 0.0 : v;
        }
        if (first == 0 && c == 0) {
            pick = static_cast<std::size_t>(unif(rng) * static_cast<double>(candidates.size()));
            pick = std::min(pick, candidates.size() - 1);
        } else if (total > 0.0) {
            double target = unif(rng) * total;
            pick = candidates.size() - 1;
            for (std::size_t t = 0; t < candidates.size(); ++t) {
                target -= d2[t];
                if (target < 0.0 && d2[t] > 0.0) {
                    pick = t;
                    break;
                }
            }
        } else {
            // Every candidate already sits on a center; fall back to uniform.
            pick = static_cast<std::size_t>(unif(rng) * static_cast<double>(candidates.size()));
            pick = std::min(pick, candidates.size() - 1);
        }
        const auto src = feats.row(candidates[pick]);
        std::copy(src.begin(), src.end(), centers.row(c).begin());
        for (std::size_t t = 0; t < candidates.size(); ++t) {
            d2[t] = std::min(d2[t], sq_dist(feats.row(candidates[t]), centers.row(c)));
        }
    }
}

} // namespace

std::vector<int> semi_kmeans(const FeatureMatrix& feats, const PartialLabels& labels,
                             const KmeansParams& params) {
    if (feats.empty()) {
        throw InputError("semi-kmeans on empty input");
    }
    if (labels.size() != feats.rows()) {
        throw InputError("labels and features differ in length");
    }
    labels.validate();
    if (params.k < labels.num_known_classes || params.k < 1) {
        throw InputError("semi-kmeans needs k >= number of known classes (k=" +
                         std::to_string(params.k) + ", C1=" +
                         std::to_string(labels.num_known_classes) + ")");
    }
    if (params.max_iters < 1) {
        throw InputError("semi-kmeans needs max_iters >= 1");
    }
    const auto k = static_cast<std::size_t>(params.k);
    const auto c1 = static_cast<std::size_t>(labels.num_known_classes);
    const std::size_t n = feats.rows();
    const std::size_t d = feats.dim();

    Matrix centers(k, d);
    std::vector<std::size_t> counts(k, 0);
    std::vector<std::size_t> unlabeled;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels.is_labeled(i)) {
            const auto c = static_cast<std::size_t>(labels.labels[i]);
            auto dst = centers.row(c);
            const auto src = feats.row(i);
            for (std::size_t t = 0; t < d; ++t) {
                dst[t] += src[t];
            }
            ++counts[c];
        } else {
            unlabeled.push_back(i);
        }
    }
    for (std::size_t c = 0; c < c1; ++c) {
        for (double& v : centers.row(c)) {
            v /= static_cast<double>(counts[c]);
        }
    }
    std::mt19937_64 rng(params.seed);
    if (k > c1) {
        if (unlabeled.empty()) {
            throw InputError("semi-kmeans has no unlabeled rows to seed extra centers from");
        }
        seed_plus_plus(feats, unlabeled, centers, c1, rng);
    }

    std::vector<int> assign(n, 0);
    for (int it = 0; it < params.max_iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            assign[i] = labels.is_labeled(i) ? labels.labels[i]
                                              : static_cast<int>(nearest_euclid(feats.row(i), centers));
        }
        Matrix next(k, d);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = next.row(static_cast<std::size_t>(assign[i]));
            const auto src = feats.row(i);
            for (std::size_t t = 0; t < d; ++t) {
                dst[t] += src[t];
            }
            ++counts[static_cast<std::size_t>(assign[i])];
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                const auto keep = centers.row(c);
                std::copy(keep.begin(), keep.end(), next.row(c).begin());
                continue;
            }
            for (double& v : next.row(c)) {
                v /= static_cast<double>(counts[c]);
            }
            shift = std::max(shift, std::sqrt(sq_dist(next.row(c), centers.row(c))));
        }
        centers = std::move(next);
        if (shift < params.tol) {
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        assign[i] = labels.is_labeled(i) ? labels.labels[i]
                                          : static_cast<int>(nearest_euclid(feats.row(i), centers));
    }
    return assign;
}

std::vector<int> semi_dbscan(const DistanceMatrix& dist, const PartialLabels& labels,
                             const DbscanParams& params) {
    const std::size_t n = dist.size();
    if (labels.size() != n) {
        throw InputError("distance matrix is " + std::to_string(n) + "x" + std::to_string(n) +
                         " but labels cover " + std::to_string(labels.size()) + " instances");
    }
    if (!(params.eps > 0.0)) {
        throw InputError("dbscan eps must be positive");
    }
    if (params.min_pts < 1) {
        throw InputError("dbscan min_pts must be at least 1");
    }

    // Pre-clustering refinement: different known classes are disconnected.
    auto within = [&](std::size_t a, std::size_t b) {
        const int la = labels.labels[a];
        const int lb = labels.labels[b];
        const double d = (la != kUnassigned && lb != kUnassigned && la != lb) ? params.eps + 1.0
                                                                               : dist(a, b);
        return d <= params.eps;
    };
    auto neighbors = [&](std::size_t p) {
        std::vector<std::size_t> out;
        for (std::size_t q = 0; q < n; ++q) {
            if (within(p, q)) {
                out.push_back(q);
            }
        }
        return out;
    };
    const auto min_pts = static_cast<std::size_t>(params.min_pts);

    enum : char { unvisited, noise, member };
    std::vector<char> state(n, unvisited);
    std::vector<int> cluster(n, kUnassigned);
    int next_cluster = 0;

    for (std::size_t p = 0; p < n; ++p) {
        if (state[p] != unvisited) {
            continue;
        }
        const auto seeds = neighbors(p);
        if (seeds.size() < min_pts) {
            state[p] = noise;
            continue;
        }
        const int c = next_cluster++;
        int cluster_class = labels.labels[p];
        state[p] = member;
        cluster[p] = c;

        std::deque<std::size_t> queue(seeds.begin(), seeds.end());
        while (!queue.empty()) {
            const std::size_t q = queue.front();
            queue.pop_front();
            if (state[q] == member) {
                continue;
            }
            const int lq = labels.labels[q];
            if (params.constrained && lq != kUnassigned && cluster_class != kUnassigned &&
                lq != cluster_class) {
                continue;
            }
            const bool was_noise = state[q] == noise;
            state[q] = member;
            cluster[q] = c;
            if (lq != kUnassigned) {
                cluster_class = lq;
            }
            if (was_noise) {
                continue;
            }
            const auto nq = neighbors(q);
            if (nq.size() >= min_pts) {
                queue.insert(queue.end(), nq.begin(), nq.end());
            }
        }
    }
    return cluster;
}

std::vector<int> assign_noise_to_nearest(const FeatureMatrix& feats, std::span<const int> cluster_of) {
    if (cluster_of.size() != feats.rows()) {
        throw InputError("cluster labels and features differ in length");
    }
    int max_id = kUnassigned;
    for (int c : cluster_of) {
        max_id = std::max(max_id, c);
    }
    std::vector<int> out(cluster_of.begin(), cluster_of.end());
    if (max_id < 0) {
        return out;
    }
    const Matrix centers = group_centers(feats, cluster_of, static_cast<std::size_t>(max_id + 1));
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == kUnassigned) {
            pending.push_back(i);
        }
    }
    if (pending.empty()) {
        return out;
    }
    const auto nearest = kernels::omp::nearest_center(feats.select(pending).matrix(), centers);
    for (std::size_t k = 0; k < pending.size(); ++k) {
        out[pending[k]] = nearest[k];
    }
    return out;
}

} // namespace gcd
