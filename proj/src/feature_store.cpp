#include "gcdassoc/feature_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

namespace gcd {

namespace {

static_assert(std::endian::native == std::endian::little,
              "PALF I/O assumes a little-endian host");

// ceil(ratio * n) with a small guard so 0.5 * 20 stays 10 under rounding.
std::size_t ceil_fraction(double ratio, std::size_t n) {
    return static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
}

void check_ratio(double r, const char* name) {
    if (!(r > 0.0 && r <= 1.0)) {
        throw InputError(std::string(name) + " must lie in (0,1], got " + std::to_string(r));
    }
}

template <typename T>
void put(std::ostream& os, T v) {
    std::array<char, sizeof(T)> buf;
    std::memcpy(buf.data(), &v, sizeof(T));
    os.write(buf.data(), buf.size());
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
    std::array<char, sizeof(T)> buf;
    if (!is.read(buf.data(), buf.size())) {
        throw FormatError(path.string() + ": truncated header");
    }
    T v;
    std::memcpy(&v, buf.data(), sizeof(T));
    return v;
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
        s.pop_back();
    }
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) {
        ++b;
    }
    return s.substr(b);
}

long parse_int(const std::string& field, const std::filesystem::path& path, std::size_t line) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(field, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != field.size()) {
        throw FormatError(path.string() + ":" + std::to_string(line) + ": not an integer: '" +
                          field + "'");
    }
    return v;
}

} // namespace

std::size_t PartialLabels::num_labeled() const {
    return static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [](int v) { return v != kUnassigned; }));
}

void PartialLabels::validate() const {
    if (num_known_classes < 0) {
        throw InputError("negative known-class count");
    }
    std::vector<char> seen(static_cast<std::size_t>(num_known_classes), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int v = labels[i];
        if (v == kUnassigned) {
            continue;
        }
        if (v < 0 || v >= num_known_classes) {
            throw InputError("label " + std::to_string(v) + " at index " + std::to_string(i) +
                             " outside [-1, " + std::to_string(num_known_classes) + ")");
        }
        seen[static_cast<std::size_t>(v)] = 1;
    }
    for (int c = 0; c < num_known_classes; ++c) {
        if (!seen[static_cast<std::size_t>(c)]) {
            throw InputError("known class " + std::to_string(c) + " has no labeled instance");
        }
    }
}

PartialLabels PartialLabels::from_labels(std::vector<int> labels) {
    PartialLabels out;
    int max_label = kUnassigned;
    for (int v : labels) {
        if (v < kUnassigned) {
            throw InputError("label " + std::to_string(v) + " is below -1");
        }
        max_label = std::max(max_label, v);
    }
    out.num_known_classes = max_label + 1;
    out.labels = std::move(labels);
    out.validate();
    return out;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.num_classes < 2) {
        throw InputError("synthetic data needs at least 2 classes");
    }
    if (spec.points_per_class < 2) {
        throw InputError("synthetic data needs at least 2 points per class");
    }
    if (spec.ambient_dim < 2) {
        throw InputError("synthetic ambient dimension must be at least 2");
    }
    if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
        throw InputError("noise sigma must be finite and nonnegative");
    }

    const auto C = static_cast<std::size_t>(spec.num_classes);
    const auto n = static_cast<std::size_t>(spec.points_per_class);
    const auto d = static_cast<std::size_t>(spec.ambient_dim);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Matrix means(C, d);
    for (std::size_t c = 0; c < C; ++c) {
        auto r = means.row(c);
        do {
            for (double& x : r) {
                x = gauss(rng);
            }
        } while (norm(r) == 0.0);
        normalize_in_place(r);
    }

    Matrix samples(C * n, d);
    std::vector<int> truth(C * n);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = c * n + k;
            auto r = samples.row(i);
            const auto mu = means.row(c);
            std::copy(mu.begin(), mu.end(), r.begin());
            if (spec.noise_sigma > 0.0) {
                for (double& x : r) {
                    x += spec.noise_sigma * gauss(rng);
                }
                normalize_in_place(r);
            }
            truth[i] = static_cast<int>(c);
        }
    }
    return {FeatureMatrix(std::move(samples)), std::move(truth)};
}

PartialLabels make_split(std::span<const int> truth, const DatasetSplit& split) {
    if (truth.empty()) {
        throw InputError("cannot split an empty dataset");
    }
    check_ratio(split.known_class_ratio, "known_class_ratio");
    check_ratio(split.labeled_sample_ratio, "labeled_sample_ratio");

    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0) {
            throw InputError("ground-truth class ids must be nonnegative");
        }
        members[truth[i]].push_back(i);
    }

    std::vector<int> classes;
    for (const auto& [c, _] : members) {
        classes.push_back(c);
    }

    std::mt19937_64 rng(split.seed);
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(ceil_fraction(split.known_class_ratio, classes.size()));
    std::sort(classes.begin(), classes.end());

    PartialLabels out;
    out.labels.assign(truth.size(), kUnassigned);
    out.num_known_classes = static_cast<int>(classes.size());
    for (std::size_t k = 0; k < classes.size(); ++k) {
        auto idx = members[classes[k]];
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(ceil_fraction(split.labeled_sample_ratio, idx.size()));
        for (std::size_t i : idx) {
            out.labels[i] = static_cast<int>(k);
        }
    }
    return out;
}

std::vector<int> known_class_ids(std::span<const int> truth, const PartialLabels& labels) {
    if (truth.size() != labels.size()) {
        throw InputError("truth and labels differ in length");
    }
    std::vector<int> ids(static_cast<std::size_t>(labels.num_known_classes), kUnassigned);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int l = labels.labels[i];
        if (l == kUnassigned) {
            continue;
        }
        auto& slot = ids[static_cast<std::size_t>(l)];
        if (slot != kUnassigned && slot != truth[i]) {
            throw InputError("known class " + std::to_string(l) +
                             " maps to more than one ground-truth class");
        }
        slot = truth[i];
    }
    return ids;
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw InputError("cannot open for writing: " + path.string());
    }
    os.write("PALF", 4);
    put<std::uint16_t>(os, kPalfVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
    for (double x : m.data()) {
        put<float>(os, static_cast<float>(x));
    }
    if (!os) {
        throw InputError("write failed: " + path.string());
    }
}

Matrix load_matrix(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw InputError("cannot open: " + path.string());
    }
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "PALF", 4) != 0) {
        throw FormatError(path.string() + ": bad magic, expected PALF");
    }
    const auto version = get<std::uint16_t>(is, path);
    if (version != kPalfVersion) {
        throw FormatError(path.string() + ": unsupported PALF version " + std::to_string(version));
    }
    const auto rows = get<std::uint32_t>(is, path);
    const auto cols = get<std::uint32_t>(is, path);
    const std::size_t count = static_cast<std::size_t>(rows) * cols;

    std::vector<float> raw(count);
    if (count > 0 &&
        !is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 4))) {
        throw FormatError(path.string() + ": truncated payload");
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw FormatError(path.string() + ": trailing bytes after payload");
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(raw[i])) {
            throw FormatError(path.string() + ": non-finite value at element " +
                              std::to_string(i));
        }
        data[i] = raw[i];
    }
    return Matrix(rows, cols, std::move(data));
}

void save_features(const FeatureMatrix& m, const std::filesystem::path& path) {
    save_matrix(m.matrix(), path);
}

FeatureMatrix load_features(const std::filesystem::path& path, bool normalize) {
    Matrix m = load_matrix(path);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (norm(m.row(r)) == 0.0) {
            throw FormatError(path.string() + ": row " + std::to_string(r) + " has zero norm");
        }
    }
    if (normalize) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (std::abs(norm(m.row(r)) - 1.0) > FeatureMatrix::kUnitTolerance) {
                normalize_in_place(m.row(r));
            }
        }
    }
    try {
        return FeatureMatrix(std::move(m));
    } catch (const InputError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<int> load_index_csv(const std::filesystem::path& path, const char* column,
                                std::optional<std::size_t> expected_rows) {
    std::ifstream is(path);
    if (!is) {
        throw InputError("cannot open: " + path.string());
    }
    std::string line;
    if (!std::getline(is, line) || trim(line) != std::string("index,") + column) {
        throw FormatError(path.string() + ": expected header 'index," + column + "'");
    }

    std::map<long, int> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected two fields");
        }
        const long idx = parse_int(trim(line.substr(0, comma)), path, lineno);
        const long val = parse_int(trim(line.substr(comma + 1)), path, lineno);
        if (idx < 0) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": negative index");
        }
        if (!rows.emplace(idx, static_cast<int>(val)).second) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": duplicate index " +
                              std::to_string(idx));
        }
    }

    const std::size_t n = expected_rows.value_or(rows.size());
    std::vector<int> out(n, 0);
    std::size_t next = 0;
    for (const auto& [idx, val] : rows) {
        if (static_cast<std::size_t>(idx) >= n) {
            throw FormatError(path.string() + ": index " + std::to_string(idx) +
                              " out of range for " + std::to_string(n) + " rows");
        }
        if (static_cast<std::size_t>(idx) != next) {
            throw FormatError(path.string() + ": missing index " + std::to_string(next));
        }
        out[next++] = val;
    }
    if (next != n) {
        throw FormatError(path.string() + ": missing index " + std::to_string(next));
    }
    return out;
}

void save_index_csv(std::span<const int> values, const char* column,
                    const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw InputError("cannot open for writing: " + path.string());
    }
    os << "index," << column << '\n';
    for (std::size_t i = 0; i < values.size(); ++i) {
        os << i << ',' << values[i] << '\n';
    }
    if (!os) {
        throw InputError("write failed: " + path.string());
    }
}

PartialLabels load_labels(const std::filesystem::path& path,
                          std::optional<std::size_t> expected_rows) {
    auto values = load_index_csv(path, "label", expected_rows);
    try {
        return PartialLabels::from_labels(std::move(values));
    } catch (const InputError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_labels(const PartialLabels& labels, const std::filesystem::path& path) {
    save_index_csv(labels.labels, "label", path);
}

} // namespace gcd
