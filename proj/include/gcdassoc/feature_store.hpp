#ifndef GCDASSOC_FEATURE_STORE_HPP
#define GCDASSOC_FEATURE_STORE_HPP

#include "gcdassoc/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace gcd {

/**
 * Per-instance known-class label, or kUnassigned for unlabeled instances.
 *
 * Labels are dense: every class in [0, num_known_classes) owns at least one
 * labeled instance. Use validate() after building one by hand.
 */
struct PartialLabels {
    std::vector<int> labels;
    int num_known_classes = 0;

    std::size_t size() const { return labels.size(); }
    bool is_labeled(std::size_t i) const { return labels[i] != kUnassigned; }
    std::size_t num_labeled() const;
    std::size_t num_unlabeled() const { return size() - num_labeled(); }

    /// Throws InputError when a value is out of range or a class is empty.
    void validate() const;

    /// Derives num_known_classes as 1 + max label and validates.
    static PartialLabels from_labels(std::vector<int> labels);
};

struct DatasetSplit {
    double known_class_ratio = 0.5;
    double labeled_sample_ratio = 0.5;
    std::uint64_t seed = 0;
};

struct SyntheticSpec {
    int num_classes = 20;
    int points_per_class = 50;
    int ambient_dim = 32;
    double noise_sigma = 0.3;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    FeatureMatrix features;
    std::vector<int> truth;
};

/// Unit-sphere class means with normalized Gaussian perturbations.
/// Rows are ordered class by class.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/**
 * Marks ceil(known_class_ratio * C) classes as known and labels
 * ceil(labeled_sample_ratio * n_c) instances inside each known class.
 * Known classes are renumbered 0..C1-1 in ascending order of their
 * original id.
 */
PartialLabels make_split(std::span<const int> truth, const DatasetSplit& split);

/// Original class ids of the known classes, indexed by renumbered label.
std::vector<int> known_class_ids(std::span<const int> truth, const PartialLabels& labels);

// PALF: "PALF" | u16 version | u32 rows | u32 cols | rows*cols f32, all LE.
inline constexpr std::uint16_t kPalfVersion = 1;

void save_matrix(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix(const std::filesystem::path& path);

void save_features(const FeatureMatrix& m, const std::filesystem::path& path);

/// Loads a PALF file. Rows off the unit sphere are an error unless
/// `normalize` is set, in which case they are rescaled.
FeatureMatrix load_features(const std::filesystem::path& path, bool normalize = false);

/// Reads an `index,<column>` CSV into a dense per-index vector.
/// `expected_rows`, when given, must match the row count.
std::vector<int> load_index_csv(const std::filesystem::path& path, const char* column,
                                std::optional<std::size_t> expected_rows = std::nullopt);
void save_index_csv(std::span<const int> values, const char* column,
                    const std::filesystem::path& path);

PartialLabels load_labels(const std::filesystem::path& path,
                          std::optional<std::size_t> expected_rows = std::nullopt);
void save_labels(const PartialLabels& labels, const std::filesystem::path& path);

} // namespace gcd

#endif
