#include "gcdassoc/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gcd {

std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<long long>>& weight) {
    const std::size_t n = weight.size();
    for (const auto& r : weight) {
        if (r.size() != n) {
            throw InputError("assignment matrix must be square");
        }
    }
    // Shortest augmenting path with potentials on cost = -weight, 1-based.
    constexpr long long inf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<long long> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            long long delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const long long cur = -weight[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> col_of(n);
    for (std::size_t j = 1; j <= n; ++j) {
        col_of[match[j] - 1] = j - 1;
    }
    return col_of;
}

MatchResult hungarian_match(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw InputError("prediction and truth differ in length (" + std::to_string(pred.size()) +
                         " vs " + std::to_string(truth.size()) + ")");
    }
    if (pred.empty()) {
        throw InputError("cannot match empty labelings");
    }
    // Predicted ids get table rows in order of first appearance, so relabeling
    // the prediction leaves the table, and the choice among tied optima, as is.
    std::map<int, std::size_t> pred_ids, truth_ids;
    std::vector<int> pred_of, truth_of;
    for (int p : pred) {
        if (pred_ids.emplace(p, pred_of.size()).second) {
            pred_of.push_back(p);
        }
    }
    for (int t : truth) {
        truth_ids.emplace(t, 0);
    }
    for (auto& [id, slot] : truth_ids) {
        slot = truth_of.size();
        truth_of.push_back(id);
    }

    const std::size_t n = std::max(pred_of.size(), truth_of.size());
    std::vector<std::vector<long long>> table(n, std::vector<long long>(n, 0));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++table[pred_ids[pred[i]]][truth_ids[truth[i]]];
    }
    const auto col_of = max_weight_assignment(table);

    MatchResult res;
    for (std::size_t r = 0; r < pred_of.size(); ++r) {
        const std::size_t c = col_of[r];
        res.matched += static_cast<std::size_t>(table[r][c]);
        if (c < truth_of.size()) {
            res.mapping[pred_of[r]] = truth_of[c];
        }
    }
    return res;
}

double class_count_error_rate(std::size_t predicted, std::size_t truth) {
    if (truth == 0) {
        throw InputError("true class count must be positive");
    }
    const double diff = predicted > truth ? static_cast<double>(predicted - truth)
                                          : static_cast<double>(truth - predicted);
    return diff / static_cast<double>(truth);
}

AccReport acc_report(std::span<const int> pred, std::span<const int> truth,
                     const PartialLabels& labels, const std::set<int>& known_classes) {
    if (pred.size() != truth.size() || pred.size() != labels.size()) {
        throw InputError("prediction, truth and labels must cover the same instances");
    }
    std::vector<int> p_u, t_u;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!labels.is_labeled(i)) {
            p_u.push_back(pred[i]);
            t_u.push_back(truth[i]);
        }
    }
    if (p_u.empty()) {
        throw InputError("no unlabeled instances to evaluate");
    }
    const auto match = hungarian_match(p_u, t_u);

    AccReport r;
    std::size_t hit_all = 0, hit_old = 0, hit_new = 0;
    for (std::size_t k = 0; k < p_u.size(); ++k) {
        const auto it = match.mapping.find(p_u[k]);
        const bool hit = it != match.mapping.end() && it->second == t_u[k];
        const bool old = known_classes.count(t_u[k]) > 0;
        hit_all += hit;
        if (old) {
            ++r.num_old;
            hit_old += hit;
        } else {
            ++r.num_new;
            hit_new += hit;
        }
    }
    if (hit_all != match.matched) {
        throw InvariantError("matched count disagrees with per-instance hits");
    }
    const auto m = static_cast<double>(p_u.size());
    r.all_acc = static_cast<double>(hit_all) / m;
    r.old_acc = r.num_old ? static_cast<double>(hit_old) / static_cast<double>(r.num_old) : 0.0;
    r.new_acc = r.num_new ? static_cast<double>(hit_new) / static_cast<double>(r.num_new) : 0.0;

    std::set<int> pg(pred.begin(), pred.end()), tc(truth.begin(), truth.end());
    pg.erase(kUnassigned);
    r.num_predicted_groups = pg.size();
    r.num_true_classes = tc.size();
    r.class_count_error_rate = class_count_error_rate(r.num_predicted_groups, r.num_true_classes);
    return r;
}

AccReport acc_report(std::span<const int> pred, std::span<const int> truth,
                     const PartialLabels& labels) {
    if (truth.size() != labels.size()) {
        throw InputError("truth and labels differ in length");
    }
    std::set<int> known;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (labels.is_labeled(i)) {
            known.insert(truth[i]);
        }
    }
    return acc_report(pred, truth, labels, known);
}

std::string AccReport::to_json() const {
    nlohmann::ordered_json j;
    j["all_acc"] = all_acc;
    j["old_acc"] = old_acc;
    j["new_acc"] = new_acc;
    j["num_predicted_groups"] = num_predicted_groups;
    j["num_true_classes"] = num_true_classes;
    j["class_count_error_rate"] = class_count_error_rate;
    return j.dump();
}

} // namespace gcd
