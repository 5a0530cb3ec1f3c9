#include "albench/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace albench {

void FeatureDataset::validate() const {
    if (features.rows < 1) throw std::invalid_argument("dataset: no samples");
    if (features.cols < 1) throw std::invalid_argument("dataset: dimension must be >= 1");
    if (static_cast<int>(labels.size()) != features.rows)
        throw std::invalid_argument("dataset: label count does not match row count");
    if (num_classes < 1) throw std::invalid_argument("dataset: num_classes must be >= 1");
    for (int y : labels)
        if (y < 0 || y >= num_classes) throw std::invalid_argument("dataset: label out of range");
}

std::vector<long long> FeatureDataset::label_histogram() const {
    std::vector<long long> counts(num_classes, 0);
    for (int y : labels) ++counts[y];
    return counts;
}

void SyntheticSpec::validate() const {
    if (means.rows < 1 || means.cols < 1) throw std::invalid_argument("synthetic spec: means must be K x d with K,d >= 1");
    if (static_cast<int>(stddevs.size()) != means.rows || static_cast<int>(counts.size()) != means.rows)
        throw std::invalid_argument("synthetic spec: stddevs/counts must have one entry per class");
    for (double s : stddevs)
        if (!(s > 0.0)) throw std::invalid_argument("synthetic spec: stddev must be > 0");
    for (int c : counts)
        if (c < 1) throw std::invalid_argument("synthetic spec: counts must be >= 1");
}

void ShiftSpec::validate() const {
    if (!(magnitude >= 0.0)) throw std::invalid_argument("shift spec: magnitude must be >= 0");
}

PoolState PoolState::fresh(int n) {
    PoolState p;
    p.unlabeled.resize(n);
    for (int i = 0; i < n; ++i) p.unlabeled[i] = i;
    return p;
}

void PoolState::acquire(std::span<const int> indices) {
    std::unordered_set<int> take(indices.begin(), indices.end());
    if (take.size() != indices.size()) throw std::invalid_argument("pool: duplicate indices in acquisition");
    size_t found = 0;
    std::vector<int> remaining;
    remaining.reserve(unlabeled.size());
    for (int u : unlabeled) {
        if (take.count(u)) {
            ++found;
        } else {
            remaining.push_back(u);
        }
    }
    if (found != take.size()) throw std::invalid_argument("pool: acquired index is not in the unlabeled set");
    for (int i : indices) labeled.push_back(i);
    unlabeled = std::move(remaining);
}

void PoolState::check_invariants(int n) const {
    std::vector<char> seen(n, 0);
    for (int i : labeled) {
        if (i < 0 || i >= n || seen[i]) throw std::logic_error("pool invariant violated: labeled set");
        seen[i] = 1;
    }
    for (int i : unlabeled) {
        if (i < 0 || i >= n || seen[i]) throw std::logic_error("pool invariant violated: unlabeled overlaps labeled");
        seen[i] = 1;
    }
    if (labeled.size() + unlabeled.size() != static_cast<size_t>(n))
        throw std::logic_error("pool invariant violated: coverage");
}

FeatureDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const int k = spec.num_classes();
    const int d = spec.dim();
    int total = 0;
    for (int c : spec.counts) total += c;

    FeatureDataset ds;
    ds.num_classes = k;
    ds.features = Matrix(total, d);
    ds.labels.resize(total);

    Rng rng(spec.seed);
    int row = 0;
    for (int c = 0; c < k; ++c) {
        auto mean = spec.means.row(c);
        const double sd = spec.stddevs[c];
        for (int i = 0; i < spec.counts[c]; ++i, ++row) {
            auto out = ds.features.row(row);
            for (int j = 0; j < d; ++j) out[j] = mean[j] + sd * rng.next_gaussian();
            ds.labels[row] = c;
        }
    }
    return ds;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trimmed(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double_or_throw(const std::string& raw, int line_no) {
    std::string s = trimmed(raw);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error("csv line " + std::to_string(line_no) + ": unparseable number '" + raw + "'");
    return v;
}

int parse_label_or_throw(const std::string& raw, int line_no) {
    std::string s = trimmed(raw);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw std::runtime_error("csv line " + std::to_string(line_no) + ": unparseable label '" + raw + "'");
    if (v < 0) throw std::runtime_error("csv line " + std::to_string(line_no) + ": label must be non-negative");
    return v;
}

void format_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

FeatureDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("dataset " + path + ": no samples");
    auto header = split_csv_line(line);
    if (header.empty() || trimmed(header[0]) != "label")
        throw std::runtime_error("dataset " + path + ": header must start with 'label'");
    const int d = static_cast<int>(header.size()) - 1;
    if (d < 1) throw std::runtime_error("dataset " + path + ": header declares no feature columns");

    std::vector<double> values;
    std::vector<int> labels;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != d + 1)
            throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) +
                                     " fields, got " + std::to_string(fields.size()));
        labels.push_back(parse_label_or_throw(fields[0], line_no));
        for (int j = 1; j <= d; ++j) values.push_back(parse_double_or_throw(fields[j], line_no));
    }
    if (labels.empty()) throw std::runtime_error("dataset " + path + ": no samples");

    FeatureDataset ds;
    ds.features.rows = static_cast<int>(labels.size());
    ds.features.cols = d;
    ds.features.data = std::move(values);
    ds.labels = std::move(labels);
    ds.num_classes = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    ds.validate();
    return ds;
}

void save_dataset_csv(const FeatureDataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    std::string buf = "label";
    for (int j = 0; j < ds.dim(); ++j) {
        buf += ",f";
        buf += std::to_string(j);
    }
    buf += '\n';
    for (int i = 0; i < ds.size(); ++i) {
        buf += std::to_string(ds.labels[i]);
        auto row = ds.features.row(i);
        for (double v : row) {
            buf += ',';
            format_double(buf, v);
        }
        buf += '\n';
        out << buf;
        buf.clear();
    }
}

std::vector<int> draw_query_subset(const PoolState& pool, int size, Rng& rng) {
    if (size < 1) throw std::invalid_argument("query subset size must be >= 1");
    if (pool.unlabeled.empty()) throw std::runtime_error("query subset: unlabeled pool is empty");
    std::vector<int> idx = pool.unlabeled;
    const int n = static_cast<int>(idx.size());
    const int k = std::min(size, n);
    for (int i = 0; i < k; ++i) {
        int j = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

FeatureDataset apply_shift(const FeatureDataset& ds, const ShiftSpec& shift, Rng& rng) {
    shift.validate();
    FeatureDataset out = ds;
    if (shift.magnitude == 0.0) return out;
    if (shift.kind == ShiftKind::mean_translation) {
        for (double& v : out.features.data) v += shift.magnitude;
    } else {
        for (double& v : out.features.data) v += shift.magnitude * rng.next_gaussian();
    }
    return out;
}

}  // namespace albench
