#include "gcdassoc/cli.hpp"

#include "gcdassoc/association.hpp"
#include "gcdassoc/baselines.hpp"
#include "gcdassoc/distance.hpp"
#include "gcdassoc/evaluation.hpp"
#include "gcdassoc/feature_store.hpp"
#include "gcdassoc/kernels.hpp"
#include "gcdassoc/prototype.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gcd {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw InputError("cannot open for writing: " + path);
    }
    os << text;
    if (!os) {
        throw InputError("write failed: " + path);
    }
}

void check_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InputError(std::string(name) + " must be positive, got " + std::to_string(v));
    }
}

void check_fraction(double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) {
        throw InputError(std::string(name) + " must lie in (0,1], got " + std::to_string(v));
    }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// ---------------------------------------------------------------- associate

struct AssociateArgs {
    std::string features, labels, out, summary;
    double threshold = 0.35;
    int k1 = 20, k2 = 6;
    double subset_ratio = 1.0;
    std::uint64_t seed = 0;
    bool normalize = false;
    int threads = 0;
};

int cmd_associate(const AssociateArgs& a, std::ostream& out) {
    check_positive(a.threshold, "--threshold");
    check_fraction(a.subset_ratio, "--subset-ratio");
    kernels::set_num_threads(a.threads);

    const auto start = Clock::now();
    const auto feats = load_features(a.features, a.normalize);
    const auto labels = load_labels(a.labels, feats.rows());

    AssociationConfig cfg;
    cfg.threshold = a.threshold;
    cfg.rerank = {a.k1, a.k2};
    cfg.subset_ratio = a.subset_ratio;
    cfg.seed = a.seed;
    const auto res = associate_dataset(feats, labels, cfg);
    save_index_csv(res.group_of, "group", a.out);

    json j;
    j["num_groups"] = res.num_groups();
    j["num_unassigned_before_assign"] = res.num_unassigned_before_assign;
    j["candidate_pair_count"] = res.candidate_pair_count;
    j["wall_time_ms"] = elapsed_ms(start);
    const auto text = j.dump();
    out << text << '\n';
    if (!a.summary.empty()) {
        write_text(a.summary, text + "\n");
    }
    return kExitOk;
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
    std::string pred, truth, labels, out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const auto truth = load_index_csv(a.truth, "label");
    const auto pred = load_index_csv(a.pred, "group", truth.size());
    const auto labels = load_labels(a.labels, truth.size());
    const auto report = acc_report(pred, truth, labels);
    const auto text = report.to_json();
    out << text << '\n';
    if (!a.out.empty()) {
        write_text(a.out, text + "\n");
    }
    return kExitOk;
}

// ----------------------------------------------------------------- baseline

struct BaselineArgs {
    std::string algo, features, labels, out, metric = "jaccard";
    int k = 0, max_iters = 100;
    double tol = 1e-6;
    double eps = 0.35;
    int min_pts = 4;
    int k1 = 20, k2 = 6;
    std::uint64_t seed = 0;
    bool assign_noise = false;
    bool normalize = false;
};

int cmd_baseline(const BaselineArgs& a, std::ostream& out) {
    const auto feats = load_features(a.features, a.normalize);
    const auto labels = load_labels(a.labels, feats.rows());

    std::vector<int> result;
    if (a.algo == "semi-kmeans") {
        result = semi_kmeans(feats, labels, {a.k, a.max_iters, a.seed, a.tol});
    } else {
        check_positive(a.eps, "--eps");
        DbscanParams p{a.eps, a.min_pts, a.algo == "semi-dbscan-constrained"};
        const auto dist = a.metric == "cosine"
                              ? cosine_distance_matrix(feats)
                              : k_reciprocal_jaccard(feats, RerankParams{a.k1, a.k2}.clipped(feats.rows()));
        result = semi_dbscan(dist, labels, p);
        if (a.assign_noise) {
            result = assign_noise_to_nearest(feats, result);
        }
    }
    save_index_csv(result, "group", a.out);

    json j;
    j["algo"] = a.algo;
    j["num_clusters"] = estimate_class_count(result);
    j["num_noise"] = std::count(result.begin(), result.end(), kUnassigned);
    out << j.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- train-toy

struct TrainArgs {
    int classes = 20, points_per_class = 50, dim = 32;
    double sigma = 0.3, known_ratio = 0.5, labeled_ratio = 0.5;
    std::string features, labels, truth;
    int epochs = 30;
    double lr = 0.001, tau = kDefaultTemperature, mu = kDefaultMomentum, threshold = 0.35;
    int k1 = 20, k2 = 6;
    double subset_ratio = 1.0;
    int P = 8, K = 16;
    bool exclude_assigned = false;
    std::uint64_t seed = 0;
    std::string history, weights, report, groups;
    int threads = 0;
};

int cmd_train_toy(const TrainArgs& a, std::ostream& out) {
    check_positive(a.tau, "--tau");
    if (!(a.mu >= 0.0 && a.mu <= 1.0)) {
        throw InputError("--mu must lie in [0,1]");
    }
    check_positive(a.threshold, "--threshold");
    check_fraction(a.subset_ratio, "--subset-ratio");
    if (a.epochs < 0) {
        throw InputError("--epochs must be nonnegative");
    }
    if (!(a.lr >= 0.0)) {
        throw InputError("--lr must be nonnegative");
    }
    kernels::set_num_threads(a.threads);

    FeatureMatrix feats;
    PartialLabels labels;
    std::optional<std::vector<int>> truth;
    if (!a.features.empty()) {
        if (a.labels.empty()) {
            throw InputError("--features requires --labels");
        }
        feats = load_features(a.features, true);
        labels = load_labels(a.labels, feats.rows());
        if (!a.truth.empty()) {
            truth = load_index_csv(a.truth, "label", feats.rows());
        }
    } else {
        SyntheticSpec spec{a.classes, a.points_per_class, a.dim, a.sigma, a.seed};
        auto data = generate_synthetic(spec);
        labels = make_split(data.truth, {a.known_ratio, a.labeled_ratio, a.seed});
        feats = std::move(data.features);
        truth = std::move(data.truth);
    }

    TrainConfig cfg;
    cfg.threshold = a.threshold;
    cfg.rerank = {a.k1, a.k2};
    cfg.temperature = a.tau;
    cfg.momentum = a.mu;
    cfg.subset_ratio = a.subset_ratio;
    cfg.seed = a.seed;
    cfg.epochs = a.epochs;
    cfg.lr = a.lr;
    cfg.P = a.P;
    cfg.K = a.K;
    cfg.include_assigned = !a.exclude_assigned;

    std::optional<std::span<const int>> truth_view;
    if (truth) {
        truth_view = std::span<const int>(*truth);
    }
    const auto res = train_stage1(feats, labels, ToyModel::identity(feats.dim()), cfg, truth_view);

    if (!a.history.empty()) {
        std::ostringstream hs;
        for (const auto& rec : res.history) {
            hs << rec.to_json() << '\n';
        }
        write_text(a.history, hs.str());
    }
    if (!a.weights.empty()) {
        save_matrix(res.model.weights, a.weights);
    }
    if (!a.groups.empty()) {
        save_index_csv(res.final_group_of, "group", a.groups);
    }
    const std::string text = res.final_report
                                  ? res.final_report->to_json()
                                  : json{{"num_predicted_groups", estimate_class_count(res.final_group_of)}}.dump();
    out << text << '\n';
    if (!a.report.empty()) {
        write_text(a.report, text + "\n");
    }
    return kExitOk;
}

// -------------------------------------------------------------------- bench

int cmd_bench(const ScalingConfig& cfg, const std::string& out_path, std::ostream& out) {
    const auto res = run_scaling(cfg);
    const auto text = res.to_json();
    out << text << '\n';
    if (!out_path.empty()) {
        write_text(out_path, text + "\n");
    }
    return kExitOk;
}

} // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InputError("slope fit needs at least two points");
    }
    double mx = 0.0, my = 0.0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw InputError("slope fit needs positive values");
        }
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) {
        throw InputError("slope fit needs distinct x values");
    }
    return sxy / sxx;
}

ScalingResult run_scaling(const ScalingConfig& cfg) {
    if (cfg.sizes.empty()) {
        throw InputError("bench needs at least one size");
    }
    for (int n : cfg.sizes) {
        if (n < 64) {
            throw InputError("bench sizes must be at least 64, got " + std::to_string(n));
        }
    }
    if (cfg.reps < 3) {
        throw InputError("bench needs at least 3 repetitions");
    }
    kernels::set_num_threads(cfg.threads);

    ScalingResult res;
    res.threads = kernels::max_threads();

    struct Case {
        FeatureMatrix feats;
        RerankParams rerank;
        CandidatePairs cand;
        std::vector<double> dist_ms, greedy_ms;
    };
    std::vector<Case> cases;
    for (int n : cfg.sizes) {
        SyntheticSpec spec;
        spec.points_per_class = cfg.points_per_class;
        spec.num_classes = std::max(2, n / cfg.points_per_class);
        spec.ambient_dim = cfg.dim;
        spec.noise_sigma = cfg.sigma;
        spec.seed = cfg.seed + static_cast<std::uint64_t>(n);
        auto data = generate_synthetic(spec);
        std::vector<std::size_t> rows(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i] = i % data.features.rows();
        }
        Case c;
        c.feats = data.features.select(rows);
        c.rerank = RerankParams{cfg.k1, cfg.k2}.clipped(c.feats.rows());
        c.cand = select_candidates(k_reciprocal_jaccard(c.feats, c.rerank), cfg.threshold, 0);
        cases.push_back(std::move(c));
    }

    // Sizes are interleaved within each repetition so that slow phases of a
    // shared machine hit every size alike instead of bending the slope.
    for (int r = 0; r < cfg.reps; ++r) {
        for (auto& c : cases) {
            auto t0 = Clock::now();
            const auto w = k_reciprocal_jaccard(c.feats, c.rerank);
            c.dist_ms.push_back(elapsed_ms(t0));

            // Repeat the cheap greedy pass until the measurement is well above timer noise.
            std::size_t iters = 0;
            t0 = Clock::now();
            double spent = 0.0;
            do {
                const auto g = greedy_associate(c.cand, 0, c.feats.rows());
                if (g.group_of.size() != c.feats.rows()) {
                    throw InvariantError("greedy association lost nodes");
                }
                ++iters;
                spent = elapsed_ms(t0);
            } while (spent < 20.0);
            c.greedy_ms.push_back(spent / static_cast<double>(iters));
        }
    }
    for (std::size_t s = 0; s < cases.size(); ++s) {
        ScalingPoint pt;
        pt.n = cfg.sizes[s];
        pt.distance_ms = median(cases[s].dist_ms);
        pt.greedy_ms = median(cases[s].greedy_ms);
        pt.candidate_pair_count = cases[s].cand.pairs.size();
        res.points.push_back(pt);
    }

    if (res.points.size() > 1) {
        std::vector<double> n, td, pc, tg;
        for (const auto& p : res.points) {
            n.push_back(p.n);
            td.push_back(p.distance_ms);
            pc.push_back(static_cast<double>(std::max<std::size_t>(1, p.candidate_pair_count)));
            tg.push_back(p.greedy_ms);
        }
        res.distance_slope = loglog_slope(n, td);
        res.greedy_slope = loglog_slope(pc, tg);
    }
    return res;
}

std::string ScalingResult::to_json() const {
    json j;
    j["threads"] = threads;
    json pts = json::array();
    for (const auto& p : points) {
        pts.push_back({{"n", p.n},
                       {"distance_ms", p.distance_ms},
                       {"greedy_ms", p.greedy_ms},
                       {"candidate_pair_count", p.candidate_pair_count}});
    }
    j["sizes"] = pts;
    if (distance_slope) {
        j["distance_slope"] = *distance_slope;
    }
    if (greedy_slope) {
        j["greedy_slope"] = *greedy_slope;
    }
    return j.dump();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Prior-constrained association toolkit for generalized category discovery", "gcdassoc"};
    app.require_subcommand(1);

    AssociateArgs aa;
    auto* assoc = app.add_subcommand("associate", "Group partially labeled features");
    assoc->add_option("--features", aa.features, "PALF feature file")->required();
    assoc->add_option("--labels", aa.labels, "index,label CSV (-1 = unlabeled)")->required();
    assoc->add_option("--threshold", aa.threshold, "Jaccard threshold (0.6 suits generic data)");
    assoc->add_option("--k1", aa.k1, "k-reciprocal neighborhood size");
    assoc->add_option("--k2", aa.k2, "query expansion size");
    assoc->add_option("--subset-ratio", aa.subset_ratio, "fraction of unlabeled rows associated");
    assoc->add_option("--seed", aa.seed);
    assoc->add_option("--out", aa.out, "index,group CSV output")->required();
    assoc->add_option("--summary", aa.summary, "also write the JSON summary here");
    assoc->add_flag("--normalize", aa.normalize, "rescale non-unit rows instead of failing");
    assoc->add_option("--threads", aa.threads, "OpenMP threads (0 = default)");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "Clustering accuracy of a grouping");
    eval->add_option("--pred", ea.pred, "index,group CSV")->required();
    eval->add_option("--truth", ea.truth, "index,label ground-truth CSV")->required();
    eval->add_option("--labels", ea.labels, "index,label partial-label CSV")->required();
    eval->add_option("--out", ea.out, "write the report JSON here");

    BaselineArgs ba;
    auto* base = app.add_subcommand("baseline", "Run a constrained clustering baseline");
    base->add_option("--algo", ba.algo)
        ->required()
        ->check(CLI::IsMember({"semi-kmeans", "semi-dbscan", "semi-dbscan-constrained"}));
    base->add_option("--features", ba.features)->required();
    base->add_option("--labels", ba.labels)->required();
    base->add_option("--out", ba.out)->required();
    base->add_option("--k", ba.k, "semi-kmeans cluster count");
    base->add_option("--max-iters", ba.max_iters);
    base->add_option("--tol", ba.tol);
    base->add_option("--eps", ba.eps, "DBSCAN radius");
    base->add_option("--min-pts", ba.min_pts);
    base->add_option("--metric", ba.metric)->check(CLI::IsMember({"jaccard", "cosine"}));
    base->add_option("--k1", ba.k1);
    base->add_option("--k2", ba.k2);
    base->add_option("--seed", ba.seed);
    base->add_flag("--assign-noise", ba.assign_noise, "map DBSCAN noise to the nearest cluster");
    base->add_flag("--normalize", ba.normalize);

    TrainArgs ta;
    auto* train = app.add_subcommand("train-toy", "Association / prototype learning loop on a toy model");
    train->add_option("--classes", ta.classes);
    train->add_option("--points-per-class", ta.points_per_class);
    train->add_option("--dim", ta.dim);
    train->add_option("--sigma", ta.sigma);
    train->add_option("--known-ratio", ta.known_ratio);
    train->add_option("--labeled-ratio", ta.labeled_ratio);
    train->add_option("--features", ta.features, "PALF input instead of synthetic data");
    train->add_option("--labels", ta.labels);
    train->add_option("--truth", ta.truth);
    train->add_option("--epochs", ta.epochs);
    train->add_option("--lr", ta.lr);
    train->add_option("--tau", ta.tau);
    train->add_option("--mu", ta.mu);
    train->add_option("--threshold", ta.threshold);
    train->add_option("--k1", ta.k1);
    train->add_option("--k2", ta.k2);
    train->add_option("--subset-ratio", ta.subset_ratio);
    train->add_option("--P", ta.P, "pseudo classes per batch");
    train->add_option("--K", ta.K, "instances per pseudo class");
    train->add_flag("--exclude-assigned", ta.exclude_assigned,
                    "train only on instances grouped by association itself");
    train->add_option("--seed", ta.seed);
    train->add_option("--history", ta.history, "per-epoch JSONL");
    train->add_option("--weights", ta.weights, "PALF weight matrix output");
    train->add_option("--report", ta.report, "final report JSON");
    train->add_option("--groups", ta.groups, "final index,group CSV");
    train->add_option("--threads", ta.threads);

    ScalingConfig sc;
    std::string bench_out;
    auto* bench = app.add_subcommand("bench", "Scaling of the distance and greedy stages");
    bench->add_option("--sizes", sc.sizes)->delimiter(',');
    bench->add_option("--reps", sc.reps);
    bench->add_option("--threads", sc.threads);
    bench->add_option("--dim", sc.dim);
    bench->add_option("--sigma", sc.sigma);
    bench->add_option("--threshold", sc.threshold);
    bench->add_option("--k1", sc.k1);
    bench->add_option("--k2", sc.k2);
    bench->add_option("--seed", sc.seed);
    bench->add_option("--out", bench_out);

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        if (msg.empty()) {
            msg = e.get_name();
        }
        err << "error: " << msg << '\n';
        return kExitInput;
    }

    try {
        if (*assoc) return cmd_associate(aa, out);
        if (*eval) return cmd_eval(ea, out);
        if (*base) return cmd_baseline(ba, out);
        if (*train) return cmd_train_toy(ta, out);
        if (*bench) return cmd_bench(sc, bench_out, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InvariantError& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInternal;
}

} // namespace gcd
