#ifndef GCDASSOC_ORACLES_ALG1_ORACLE_HPP
#define GCDASSOC_ORACLES_ALG1_ORACLE_HPP

// Line-by-line transcription of the greedy association pseudocode on a dense
// distance matrix: mask proxy-proxy distances, collect the pairs below the
// threshold, sort, then walk them with a flat grpLabel array and an O(n)
// relabel per merge.

#include <algorithm>
#include <tuple>
#include <vector>

namespace gcd::oracle {

inline std::vector<int> alg1_group_labels(std::vector<std::vector<double>> w, double thresh, int c1) {
    const int n = static_cast<int>(w.size());

    // mask dists of old proxies
    for (int a = 0; a < c1; ++a) {
        for (int b = 0; b < c1; ++b) {
            w[a][b] = thresh + 1.0;
        }
    }

    std::vector<std::tuple<double, int, int>> cand;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (w[a][b] < thresh) {
                cand.emplace_back(w[a][b], a, b);
            }
        }
    }
    std::sort(cand.begin(), cand.end());

    // initialize group label
    std::vector<int> grp_label(n, -1);
    for (int c = 0; c < c1; ++c) {
        grp_label[c] = c;
    }
    int count = c1;

    for (const auto& [dist, i, j] : cand) {
        (void)dist;
        const int li = grp_label[i];
        const int lj = grp_label[j];
        if (li == -1 && lj == -1) {
            grp_label[i] = count;
            grp_label[j] = count;
            count += 1;
        } else if (li == -1) {
            grp_label[i] = lj;
        } else if (lj == -1) {
            grp_label[j] = li;
        } else if (li != lj) {
            // merge of two valid groups
            if (li >= c1 || lj >= c1) {
                const int keep = std::min(li, lj);
                const int drop = std::max(li, lj);
                for (int t = 0; t < n; ++t) {
                    if (grp_label[t] == drop) {
                        grp_label[t] = keep;
                    }
                }
            }
        }
    }
    return grp_label;
}

} // namespace gcd::oracle

#endif
