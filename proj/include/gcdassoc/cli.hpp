#ifndef GCDASSOC_CLI_HPP
#define GCDASSOC_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gcd {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitInternal = 2 };

/// Runs the command line `args` (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct ScalingConfig {
    std::vector<int> sizes{500, 1000, 2000, 4000};
    int reps = 3;
    int threads = 1;
    int dim = 32;
    int points_per_class = 50;
    double sigma = 0.1;
    double threshold = 0.35;
    int k1 = 20;
    int k2 = 6;
    std::uint64_t seed = 0;
};

struct ScalingPoint {
    int n = 0;
    double distance_ms = 0.0;
    double greedy_ms = 0.0;
    std::size_t candidate_pair_count = 0;
};

struct ScalingResult {
    int threads = 1;
    std::vector<ScalingPoint> points;
    std::optional<double> distance_slope;
    std::optional<double> greedy_slope;

    std::string to_json() const;
};

/// Median timings of the Jaccard distance stage and the greedy stage per
/// size, plus least-squares log-log slopes (distance time vs n, greedy time
/// vs candidate pair count) when more than one size is given.
ScalingResult run_scaling(const ScalingConfig& cfg);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace gcd

#endif
