#include "gcdassoc/association.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>

namespace gcd {

namespace {

// Disjoint sets over nodes; each root carries the group id of its set.
class LabeledUnionFind {
public:
    explicit LabeledUnionFind(std::size_t n) : parent_(n), size_(n, 1), label_(n, kUnassigned) {
        std::iota(parent_.begin(), parent_.end(), 0u);
    }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    int label(std::uint32_t root) const { return label_[root]; }
    void set_label(std::uint32_t root, int id) { label_[root] = id; }

    // Attaches singleton `child` below `root`.
    void attach(std::uint32_t child, std::uint32_t root) {
        parent_[child] = root;
        size_[root] += size_[child];
    }

    void merge(std::uint32_t a, std::uint32_t b, int id) {
        if (size_[a] < size_[b]) {
            std::swap(a, b);
        }
        parent_[b] = a;
        size_[a] += size_[b];
        label_[a] = id;
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
    std::vector<int> label_;
};

} // namespace

std::size_t Grouping::num_groups() const { return estimate_class_count(group_of); }

void Grouping::check_prior_constraint() const {
    for (int c = 0; c < num_known_classes; ++c) {
        if (group_of.at(static_cast<std::size_t>(c)) != c) {
            throw InvariantError("proxy " + std::to_string(c) + " carries group " +
                                 std::to_string(group_of[static_cast<std::size_t>(c)]));
        }
    }
}

std::size_t estimate_class_count(std::span<const int> group_of) {
    std::set<int> ids;
    for (int g : group_of) {
        if (g >= 0) {
            ids.insert(g);
        }
    }
    return ids.size();
}

HybridSet build_hybrid(const FeatureMatrix& feats, const PartialLabels& labels) {
    if (labels.size() != feats.rows()) {
        throw InputError("labels cover " + std::to_string(labels.size()) + " instances, features " +
                         std::to_string(feats.rows()));
    }
    labels.validate();
    const auto c1 = static_cast<std::size_t>(labels.num_known_classes);
    const std::size_t d = feats.dim();

    HybridSet h;
    h.num_known_classes = labels.num_known_classes;
    Matrix proxies(c1, d);
    for (std::size_t i = 0; i < feats.rows(); ++i) {
        if (labels.is_labeled(i)) {
            auto dst = proxies.row(static_cast<std::size_t>(labels.labels[i]));
            const auto src = feats.row(i);
            for (std::size_t k = 0; k < d; ++k) {
                dst[k] += src[k];
            }
        } else {
            h.unlabeled_index.push_back(i);
        }
    }

    Matrix all(c1 + h.unlabeled_index.size(), d);
    for (std::size_t c = 0; c < c1; ++c) {
        auto dst = all.row(c);
        const auto src = proxies.row(c);
        std::copy(src.begin(), src.end(), dst.begin());
        if (norm(dst) == 0.0) {
            throw InputError("labeled features of class " + std::to_string(c) +
                             " average to the zero vector");
        }
        normalize_in_place(dst);
    }
    for (std::size_t m = 0; m < h.unlabeled_index.size(); ++m) {
        const auto src = feats.row(h.unlabeled_index[m]);
        std::copy(src.begin(), src.end(), all.row(c1 + m).begin());
    }
    h.features = FeatureMatrix(std::move(all));
    return h;
}

CandidatePairs select_candidates(const DistanceMatrix& w, double threshold, int num_known_classes) {
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw InputError("association threshold must be positive, got " + std::to_string(threshold));
    }
    if (num_known_classes < 0 || static_cast<std::size_t>(num_known_classes) > w.size()) {
        throw InputError("known-class count exceeds the distance matrix size");
    }
    const std::size_t n = w.size();
    const auto c1 = static_cast<std::size_t>(num_known_classes);

    CandidatePairs out;
    out.threshold = threshold;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = std::max(i + 1, c1); j < n; ++j) {
            const double d = w(i, j);
            if (d < threshold) {
                out.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), d});
            }
        }
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const CandidatePair& a, const CandidatePair& b) {
        if (a.distance != b.distance) {
            return a.distance < b.distance;
        }
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    return out;
}

Grouping greedy_associate(const CandidatePairs& pairs, int num_known_classes,
                          std::size_t total_nodes) {
    if (num_known_classes < 0 || static_cast<std::size_t>(num_known_classes) > total_nodes) {
        throw InputError("known-class count exceeds the node count");
    }
    const int c1 = num_known_classes;
    LabeledUnionFind uf(total_nodes);
    for (int c = 0; c < c1; ++c) {
        uf.set_label(static_cast<std::uint32_t>(c), c);
    }
    int next_id = c1;

    for (const auto& p : pairs.pairs) {
        if (p.i >= total_nodes || p.j >= total_nodes) {
            throw InputError("candidate pair (" + std::to_string(p.i) + "," + std::to_string(p.j) +
                             ") out of range for " + std::to_string(total_nodes) + " nodes");
        }
        const auto ri = uf.find(p.i);
        const auto rj = uf.find(p.j);
        const int li = uf.label(ri);
        const int lj = uf.label(rj);
        if (li == kUnassigned && lj == kUnassigned) {
            if (ri == rj) {
                continue;
            }
            uf.attach(rj, ri);
            uf.set_label(ri, next_id++);
        } else if (lj == kUnassigned) {
            uf.attach(rj, ri);
        } else if (li == kUnassigned) {
            uf.attach(ri, rj);
        } else if (li != lj && (li >= c1 || lj >= c1)) {
            uf.merge(ri, rj, std::min(li, lj));
        }
    }

    Grouping g;
    g.num_known_classes = c1;
    g.group_of.resize(total_nodes);
    for (std::size_t v = 0; v < total_nodes; ++v) {
        g.group_of[v] = uf.label(uf.find(static_cast<std::uint32_t>(v)));
    }
    return g;
}

Matrix group_centers(const FeatureMatrix& feats, std::span<const int> group_of,
                     std::size_t num_groups) {
    if (group_of.size() != feats.rows()) {
        throw InputError("group labels do not cover every feature row");
    }
    Matrix centers(num_groups, feats.dim());
    std::vector<std::size_t> count(num_groups, 0);
    for (std::size_t i = 0; i < feats.rows(); ++i) {
        const int g = group_of[i];
        if (g < 0) {
            continue;
        }
        if (static_cast<std::size_t>(g) >= num_groups) {
            throw InputError("group id " + std::to_string(g) + " out of range");
        }
        auto dst = centers.row(static_cast<std::size_t>(g));
        const auto src = feats.row(i);
        for (std::size_t k = 0; k < dst.size(); ++k) {
            dst[k] += src[k];
        }
        ++count[static_cast<std::size_t>(g)];
    }
    for (std::size_t g = 0; g < num_groups; ++g) {
        if (count[g] == 0) {
            throw InputError("group " + std::to_string(g) + " has no members");
        }
        if (norm(centers.row(g)) == 0.0) {
            throw InputError("group " + std::to_string(g) + " averages to the zero vector");
        }
        normalize_in_place(centers.row(g));
    }
    return centers;
}

Grouping assign_unassociated(const Grouping& grouping, const HybridSet& hybrid, Exec exec) {
    if (grouping.group_of.size() != hybrid.num_nodes()) {
        throw InputError("grouping and hybrid set differ in node count");
    }
    std::vector<int> ids;
    for (int g : grouping.group_of) {
        if (g >= 0) {
            ids.push_back(g);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::vector<std::size_t> pending;
    for (std::size_t v = 0; v < grouping.group_of.size(); ++v) {
        if (grouping.group_of[v] == kUnassigned) {
            pending.push_back(v);
        }
    }
    if (pending.empty()) {
        return grouping;
    }
    if (ids.empty()) {
        throw InputError("no group exists to assign " + std::to_string(pending.size()) +
                         " unassociated nodes to");
    }

    std::map<int, int> dense;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        dense[ids[k]] = static_cast<int>(k);
    }
    std::vector<int> dense_of(grouping.group_of.size());
    for (std::size_t v = 0; v < dense_of.size(); ++v) {
        const int g = grouping.group_of[v];
        dense_of[v] = g < 0 ? kUnassigned : dense[g];
    }
    const Matrix centers = group_centers(hybrid.features, dense_of, ids.size());
    const Matrix points = hybrid.features.select(pending).matrix();
    const auto nearest = exec == Exec::serial ? kernels::serial::nearest_center(points, centers)
                                              : kernels::omp::nearest_center(points, centers);

    Grouping out = grouping;
    for (std::size_t k = 0; k < pending.size(); ++k) {
        out.group_of[pending[k]] = ids[static_cast<std::size_t>(nearest[k])];
    }
    return out;
}

AssociationResult associate_dataset(const FeatureMatrix& feats, const PartialLabels& labels,
                                    const AssociationConfig& cfg) {
    if (!(cfg.subset_ratio > 0.0 && cfg.subset_ratio <= 1.0)) {
        throw InputError("subset ratio must lie in (0,1], got " + std::to_string(cfg.subset_ratio));
    }
    if (!(cfg.threshold > 0.0) || !std::isfinite(cfg.threshold)) {
        throw InputError("association threshold must be positive, got " +
                         std::to_string(cfg.threshold));
    }
    const HybridSet hybrid = build_hybrid(feats, labels);
    const auto c1 = static_cast<std::size_t>(hybrid.num_known_classes);
    const std::size_t m = hybrid.unlabeled_index.size();

    // Sampled unlabeled rows, as positions within the hybrid's unlabeled block.
    std::vector<std::size_t> sampled(m);
    std::iota(sampled.begin(), sampled.end(), 0);
    if (cfg.subset_ratio < 1.0 && m > 0) {
        auto take = static_cast<std::size_t>(std::ceil(cfg.subset_ratio * static_cast<double>(m) - 1e-9));
        take = std::clamp<std::size_t>(take, 1, m);
        std::mt19937_64 rng(cfg.seed);
        std::shuffle(sampled.begin(), sampled.end(), rng);
        sampled.resize(take);
        std::sort(sampled.begin(), sampled.end());
    }

    std::vector<std::size_t> nodes(c1);
    std::iota(nodes.begin(), nodes.end(), 0);
    for (auto s : sampled) {
        nodes.push_back(c1 + s);
    }
    const FeatureMatrix sub = hybrid.features.select(nodes);
    const std::size_t n = sub.rows();

    AssociationResult res;
    Grouping grouping;
    if (n >= 2) {
        const auto rerank = cfg.rerank.clipped(n);
        const auto w = k_reciprocal_jaccard(sub, rerank, cfg.exec);
        const auto cand = select_candidates(w, cfg.threshold, hybrid.num_known_classes);
        res.candidate_pair_count = cand.pairs.size();
        grouping = greedy_associate(cand, hybrid.num_known_classes, n);
    } else {
        grouping.num_known_classes = hybrid.num_known_classes;
        grouping.group_of.assign(n, kUnassigned);
        for (std::size_t c = 0; c < c1; ++c) {
            grouping.group_of[c] = static_cast<int>(c);
        }
    }
    grouping.check_prior_constraint();

    // Known ids stay put; discovered ids are packed after them in id order.
    std::set<int> discovered;
    for (int g : grouping.group_of) {
        if (g >= static_cast<int>(c1)) {
            discovered.insert(g);
        }
    }
    std::map<int, int> remap;
    int next = static_cast<int>(c1);
    for (int g : discovered) {
        remap[g] = next++;
    }
    std::vector<int> node_group(n);
    for (std::size_t v = 0; v < n; ++v) {
        const int g = grouping.group_of[v];
        node_group[v] = g >= static_cast<int>(c1) ? remap[g] : g;
    }
    const auto num_groups = static_cast<std::size_t>(next);

    res.group_of.assign(feats.rows(), kUnassigned);
    res.directly_associated.assign(feats.rows(), false);
    for (std::size_t i = 0; i < feats.rows(); ++i) {
        if (labels.is_labeled(i)) {
            res.group_of[i] = labels.labels[i];
            res.directly_associated[i] = true;
        }
    }
    for (std::size_t k = 0; k < sampled.size(); ++k) {
        const int g = node_group[c1 + k];
        if (g != kUnassigned) {
            const auto inst = hybrid.unlabeled_index[sampled[k]];
            res.group_of[inst] = g;
            res.directly_associated[inst] = true;
        }
    }

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < feats.rows(); ++i) {
        if (res.group_of[i] == kUnassigned) {
            pending.push_back(i);
        }
    }
    res.num_unassigned_before_assign = pending.size();
    if (num_groups == 0) {
        if (!pending.empty()) {
            throw InputError("association produced no group; raise the threshold or provide labeled classes");
        }
        return res;
    }

    Matrix centers = group_centers(sub, node_group, num_groups);
    if (!pending.empty()) {
        const Matrix points = feats.select(pending).matrix();
        const auto nearest = cfg.exec == Exec::serial
                                 ? kernels::serial::nearest_center(points, centers)
                                 : kernels::omp::nearest_center(points, centers);
        for (std::size_t k = 0; k < pending.size(); ++k) {
            res.group_of[pending[k]] = nearest[k];
        }
    }
    res.centers = FeatureMatrix(std::move(centers));
    return res;
}

} // namespace gcd
