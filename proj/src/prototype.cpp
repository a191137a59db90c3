#include "gcdassoc/prototype.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace gcd {

void ProxyMemory::validate() const {
    if (!(momentum >= 0.0 && momentum <= 1.0)) {
        throw InputError("memory momentum must lie in [0,1], got " + std::to_string(momentum));
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw InputError("temperature must be positive, got " + std::to_string(temperature));
    }
}

ProxyMemory init_memory(const FeatureMatrix& feats, std::span<const int> group_of,
                        std::size_t num_groups, double momentum, double temperature) {
    if (num_groups == 0) {
        throw InputError("proxy memory needs at least one group");
    }
    ProxyMemory mem;
    mem.momentum = momentum;
    mem.temperature = temperature;
    mem.validate();
    mem.prototypes = group_centers(feats, group_of, num_groups);
    return mem;
}

NpaResult npa_loss_and_grad(const ProxyMemory& memory, const Matrix& batch_features,
                            std::span<const int> batch_labels) {
    memory.validate();
    const std::size_t b = batch_features.rows();
    const std::size_t c = memory.size();
    const std::size_t d = batch_features.cols();
    if (batch_labels.size() != b) {
        throw InputError("batch labels and features differ in length");
    }
    if (b == 0) {
        throw InputError("empty batch");
    }
    if (memory.prototypes.cols() != d) {
        throw InputError("batch feature dim does not match the memory");
    }
    for (int y : batch_labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw InputError("pseudo-label " + std::to_string(y) + " outside memory of size " +
                             std::to_string(c));
        }
    }

    const double inv_tau = 1.0 / memory.temperature;
    const double inv_b = 1.0 / static_cast<double>(b);
    NpaResult res;
    res.grad = Matrix(b, d);
    res.probs = Matrix(b, c);
    std::vector<double> logits(c);

    for (std::size_t i = 0; i < b; ++i) {
        const auto f = batch_features.row(i);
        std::size_t top = 0;
        for (std::size_t j = 0; j < c; ++j) {
            logits[j] = dot(memory.prototypes.row(j), f) * inv_tau;
            if (logits[j] > logits[top]) {
                top = j;
            }
        }
        const double m = logits[top];
        double rest = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (j != top) {
                rest += std::exp(logits[j] - m);
            }
        }
        // log-sum-exp minus the max, kept accurate when one logit dominates
        const double lse_shift = std::log1p(rest);
        const auto y = static_cast<std::size_t>(batch_labels[i]);
        res.loss += (m - logits[y]) + lse_shift;

        auto p = res.probs.row(i);
        auto g = res.grad.row(i);
        const double denom = 1.0 + rest;
        for (std::size_t j = 0; j < c; ++j) {
            p[j] = (j == top ? 1.0 : std::exp(logits[j] - m)) / denom;
        }
        for (std::size_t j = 0; j < c; ++j) {
            const double w = (j == y ? p[j] - 1.0 : p[j]) * inv_tau * inv_b;
            const auto k = memory.prototypes.row(j);
            for (std::size_t t = 0; t < d; ++t) {
                g[t] += w * k[t];
            }
        }
    }
    res.loss *= inv_b;
    return res;
}

void ema_update(ProxyMemory& memory, std::span<const double> feature, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= memory.size()) {
        throw InputError("pseudo-label " + std::to_string(label) + " outside memory of size " +
                         std::to_string(memory.size()));
    }
    if (feature.size() != memory.prototypes.cols()) {
        throw InputError("feature dim does not match the memory");
    }
    const double mu = memory.momentum;
    auto row = memory.prototypes.row(static_cast<std::size_t>(label));
    for (std::size_t t = 0; t < row.size(); ++t) {
        row[t] = mu * row[t] + (1.0 - mu) * feature[t];
    }
    normalize_in_place(row);
}

std::vector<Batch> pk_sample(std::span<const int> group_of, int P, int K, std::uint64_t seed) {
    if (P < 1 || K < 1) {
        throw InputError("PK sampler needs P >= 1 and K >= 1");
    }
    std::map<int, std::vector<std::size_t>> members;
    std::size_t total = 0;
    for (std::size_t i = 0; i < group_of.size(); ++i) {
        if (group_of[i] >= 0) {
            members[group_of[i]].push_back(i);
            ++total;
        }
    }
    const std::size_t g = members.size();
    const auto p = static_cast<std::size_t>(P);
    const auto k = static_cast<std::size_t>(K);
    if (g < p) {
        throw InputError("PK sampler needs at least P=" + std::to_string(P) + " groups, found " +
                         std::to_string(g));
    }
    std::vector<int> ids;
    for (const auto& [id, _] : members) {
        ids.push_back(id);
    }

    const std::size_t per_pass = (g + p - 1) / p;
    const std::size_t passes = std::max<std::size_t>(1, (total + p * k * per_pass - 1) / (p * k * per_pass));

    std::mt19937_64 rng(seed);
    std::vector<Batch> out;
    out.reserve(passes * per_pass);
    for (std::size_t pass = 0; pass < passes; ++pass) {
        std::vector<int> order = ids;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < g; start += p) {
            std::vector<int> chosen(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(std::min(g, start + p)));
            if (chosen.size() < p) {
                std::vector<int> others(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(start));
                std::shuffle(others.begin(), others.end(), rng);
                chosen.insert(chosen.end(), others.begin(),
                              others.begin() + static_cast<std::ptrdiff_t>(p - chosen.size()));
            }
            Batch batch;
            batch.indices.reserve(p * k);
            for (int id : chosen) {
                auto pool = members[id];
                if (pool.size() >= k) {
                    std::shuffle(pool.begin(), pool.end(), rng);
                    batch.indices.insert(batch.indices.end(), pool.begin(),
                                         pool.begin() + static_cast<std::ptrdiff_t>(k));
                } else {
                    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
                    for (std::size_t t = 0; t < k; ++t) {
                        batch.indices.push_back(pool[pick(rng)]);
                    }
                }
                batch.pseudo_labels.insert(batch.pseudo_labels.end(), k, id);
            }
            out.push_back(std::move(batch));
        }
    }
    return out;
}

void ToyModel::embed(const Matrix& x, Matrix& out, Exec exec) const {
    if (exec == Exec::serial) {
        kernels::serial::embed(x, weights, out);
    } else {
        kernels::omp::embed(x, weights, out);
    }
}

std::string EpochRecord::to_json() const {
    nlohmann::ordered_json j;
    j["epoch"] = epoch;
    j["loss"] = loss;
    j["all_acc"] = all_acc;
    j["old_acc"] = old_acc;
    j["new_acc"] = new_acc;
    j["num_groups"] = num_groups;
    return j.dump();
}

namespace {

void fill_accuracy(EpochRecord& rec, const AssociationResult& assoc,
                   std::optional<std::span<const int>> truth, const PartialLabels& labels) {
    rec.num_groups = assoc.num_groups();
    if (!truth || labels.num_unlabeled() == 0) {
        return;
    }
    const auto r = acc_report(assoc.group_of, *truth, labels);
    rec.all_acc = r.all_acc;
    rec.old_acc = r.old_acc;
    rec.new_acc = r.new_acc;
}

AssociationConfig association_config(const TrainConfig& cfg, int epoch) {
    AssociationConfig a;
    a.threshold = cfg.threshold;
    a.rerank = cfg.rerank;
    a.subset_ratio = cfg.subset_ratio;
    a.seed = cfg.seed + static_cast<std::uint64_t>(epoch);
    a.exec = cfg.exec;
    return a;
}

} // namespace

ToyStep toy_loss_and_grad(const ToyModel& model, const ProxyMemory& memory, const Matrix& x,
                          std::span<const int> labels) {
    const std::size_t b = x.rows();
    const std::size_t d_in = model.weights.rows();
    const std::size_t d_out = model.weights.cols();
    if (x.cols() != d_in) {
        throw InputError("batch input dim does not match the toy model");
    }

    // Forward through z = x W, f = z / |z|.
    ToyStep step;
    step.features = Matrix(b, d_out);
    std::vector<double> znorm(b);
    for (std::size_t r = 0; r < b; ++r) {
        auto z = step.features.row(r);
        for (std::size_t k = 0; k < d_in; ++k) {
            const double xk = x(r, k);
            const auto wk = model.weights.row(k);
            for (std::size_t c = 0; c < d_out; ++c) {
                z[c] += xk * wk[c];
            }
        }
        znorm[r] = norm(z);
        if (!(znorm[r] > 0.0)) {
            throw InputError("toy model collapsed an instance to the zero vector");
        }
        for (double& v : z) {
            v /= znorm[r];
        }
    }
    const auto npa = npa_loss_and_grad(memory, step.features, labels);
    step.loss = npa.loss;

    // Back through the normalization: dz = (g - f <f,g>) / |z|.
    step.grad_w = Matrix(d_in, d_out);
    std::vector<double> dz(d_out);
    for (std::size_t r = 0; r < b; ++r) {
        const auto f = step.features.row(r);
        const auto g = npa.grad.row(r);
        const double fg = dot(f, g);
        for (std::size_t c = 0; c < d_out; ++c) {
            dz[c] = (g[c] - f[c] * fg) / znorm[r];
        }
        for (std::size_t k = 0; k < d_in; ++k) {
            const double xk = x(r, k);
            auto gw = step.grad_w.row(k);
            for (std::size_t c = 0; c < d_out; ++c) {
                gw[c] += xk * dz[c];
            }
        }
    }
    return step;
}

TrainResult train_stage1(const FeatureMatrix& raw_features, const PartialLabels& labels,
                         ToyModel model, const TrainConfig& cfg,
                         std::optional<std::span<const int>> truth) {
    if (cfg.epochs < 0) {
        throw InputError("epochs must be nonnegative");
    }
    if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) {
        throw InputError("learning rate must be finite and nonnegative");
    }
    if (model.weights.rows() != raw_features.dim()) {
        throw InputError("toy model input dim " + std::to_string(model.weights.rows()) +
                         " does not match feature dim " + std::to_string(raw_features.dim()));
    }
    if (truth && truth->size() != raw_features.rows()) {
        throw InputError("ground truth does not cover every instance");
    }
    const Matrix& x = raw_features.matrix();
    const std::size_t d_in = model.weights.rows();

    TrainResult res;
    Matrix embedded;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        model.embed(x, embedded, cfg.exec);
        const FeatureMatrix feats(embedded);
        const auto assoc = associate_dataset(feats, labels, association_config(cfg, epoch));

        EpochRecord rec;
        rec.epoch = epoch;
        fill_accuracy(rec, assoc, truth, labels);

        ProxyMemory memory = init_memory(feats, assoc.group_of, assoc.num_groups(), cfg.momentum,
                                         cfg.temperature);

        std::vector<int> sample_groups = assoc.group_of;
        if (!cfg.include_assigned) {
            for (std::size_t i = 0; i < sample_groups.size(); ++i) {
                if (!assoc.directly_associated[i]) {
                    sample_groups[i] = kUnassigned;
                }
            }
        }
        const int groups_available = static_cast<int>(estimate_class_count(sample_groups));
        const int p = std::min(cfg.P, groups_available);
        // Same sampler seed every epoch: batches only change when the grouping does.
        const auto batches = pk_sample(sample_groups, p, cfg.K, cfg.seed);

        double loss_sum = 0.0;
        Matrix bx;
        for (const auto& batch : batches) {
            const std::size_t b = batch.size();
            bx = Matrix(b, d_in);
            for (std::size_t r = 0; r < b; ++r) {
                const auto src = x.row(batch.indices[r]);
                std::copy(src.begin(), src.end(), bx.row(r).begin());
            }
            const auto step = toy_loss_and_grad(model, memory, bx, batch.pseudo_labels);
            loss_sum += step.loss;
            if (cfg.lr > 0.0) {
                auto w = model.weights.data();
                const auto gw = step.grad_w.data();
                for (std::size_t t = 0; t < w.size(); ++t) {
                    w[t] -= cfg.lr * gw[t];
                }
            }
            for (std::size_t r = 0; r < b; ++r) {
                ema_update(memory, step.features.row(r), batch.pseudo_labels[r]);
            }
        }
        rec.loss = batches.empty() ? 0.0 : loss_sum / static_cast<double>(batches.size());
        res.history.push_back(rec);
    }

    model.embed(x, embedded, cfg.exec);
    res.final_features = FeatureMatrix(embedded);
    const auto final_assoc = associate_dataset(res.final_features, labels,
                                               association_config(cfg, cfg.epochs));
    res.final_group_of = final_assoc.group_of;
    if (truth && labels.num_unlabeled() > 0) {
        res.final_report = acc_report(final_assoc.group_of, *truth, labels);
    }
    res.model = std::move(model);
    return res;
}

} // namespace gcd
