#include "imbf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "imbf/format.hpp"
#include "imbf/rng.hpp"

namespace imbf {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& token, double& out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::string> kaggle_header() {
    std::vector<std::string> h = {"Time"};
    for (int i = 1; i <= 28; ++i) h.push_back("V" + std::to_string(i));
    h.push_back("Amount");
    h.push_back("Class");
    return h;
}

}  // namespace

std::size_t Dataset::count_label(int value) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), value));
}

bool Dataset::has_missing() const {
    for (double v : features.data())
        if (std::isnan(v)) return true;
    return false;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.feature_names = feature_names;
    out.id_bound = id_bound;
    out.features = Matrix(rows.size(), n_cols());
    out.labels.reserve(rows.size());
    out.row_ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::size_t r = rows[i];
        auto src = features.row(r);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(labels[r]);
        out.row_ids.push_back(row_ids[r]);
    }
    return out;
}

Dataset load_csv(const std::string& path, SchemaMode mode) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty file, header row required: " + path);

    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);
    if (header.empty()) throw SchemaError("empty header row: " + path);

    // A header whose every cell parses as a number is a data row, which means
    // the header is missing.
    bool all_numeric = true;
    for (const auto& h : header) {
        double tmp;
        if (!parse_double(h, tmp)) {
            all_numeric = false;
            break;
        }
    }
    if (all_numeric) throw SchemaError("first row is numeric; header row required: " + path);

    std::size_t label_col;
    if (mode == SchemaMode::kaggle_creditcard) {
        auto expected = kaggle_header();
        if (header != expected) {
            std::string msg = "header does not match kaggle creditcard schema";
            if (header.size() != expected.size())
                msg += " (expected " + std::to_string(expected.size()) + " columns, got " +
                       std::to_string(header.size()) + ")";
            throw SchemaError(msg);
        }
        label_col = header.size() - 1;  // Class
    } else {
        if (header.size() < 2) throw SchemaError("need at least one feature column plus a label");
        label_col = header.size() - 1;
    }

    Dataset ds;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_col) ds.feature_names.push_back(header[c]);
    ds.features = Matrix(0, ds.feature_names.size());

    std::size_t row_no = 0;  // 1-based over data rows, for diagnostics
    std::vector<double> row_buf(ds.feature_names.size());
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row_no;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                                 std::to_string(cells.size()),
                             row_no, cells.size());
        std::size_t fi = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::string cell = trim(cells[c]);
            if (c == label_col) {
                if (cell.empty()) throw LabelError("missing label at row " + std::to_string(row_no));
                double v;
                if (!parse_double(cell, v) || (v != 0.0 && v != 1.0))
                    throw LabelError("label must be 0 or 1, got '" + cell + "' at row " +
                                     std::to_string(row_no));
                ds.labels.push_back(static_cast<int>(v));
            } else {
                if (cell.empty()) {
                    row_buf[fi++] = kMissing;
                } else {
                    double v;
                    if (!parse_double(cell, v))
                        throw ParseError("non-numeric cell '" + cell + "'", row_no, c + 1);
                    if (std::isinf(v) || std::isnan(v))
                        throw ParseError("non-finite cell '" + cell + "'", row_no, c + 1);
                    row_buf[fi++] = v;
                }
            }
        }
        ds.features.append_row(row_buf);
    }

    if (ds.n_rows() == 0) throw EmptyDatasetError("no data rows in " + path);
    ds.row_ids.resize(ds.n_rows());
    std::iota(ds.row_ids.begin(), ds.row_ids.end(), std::int64_t{0});
    ds.id_bound = static_cast<std::int64_t>(ds.n_rows());
    return ds;
}

void write_csv(const Dataset& ds, const std::string& path,
               const std::vector<std::string>& provenance) {
    if (!provenance.empty() && provenance.size() != ds.n_rows())
        throw ShapeError("provenance length does not match row count");
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);

    for (const auto& name : ds.feature_names) out << name << ',';
    out << "Class";
    if (!provenance.empty()) out << ",origin";
    out << '\n';

    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        auto row = ds.features.row(r);
        for (double v : row) {
            if (!std::isnan(v)) out << format_double(v);
            out << ',';
        }
        out << ds.labels[r];
        if (!provenance.empty()) out << ',' << provenance[r];
        out << '\n';
    }
}

InspectionReport inspect(const Dataset& ds) {
    if (ds.n_rows() == 0) throw EmptyDatasetError("inspect: dataset is empty");
    InspectionReport rep;
    rep.n_rows = ds.n_rows();
    rep.n_fraud = ds.count_label(1);
    rep.fraud_fraction = static_cast<double>(rep.n_fraud) / static_cast<double>(rep.n_rows);
    rep.missing_per_column.assign(ds.n_cols(), 0);
    rep.per_column_stats.assign(ds.n_cols(), {});

    for (std::size_t c = 0; c < ds.n_cols(); ++c) {
        double mn = std::numeric_limits<double>::infinity();
        double mx = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        std::size_t present = 0;
        for (std::size_t r = 0; r < ds.n_rows(); ++r) {
            double v = ds.features(r, c);
            if (std::isnan(v)) {
                ++rep.missing_per_column[c];
                continue;
            }
            mn = std::min(mn, v);
            mx = std::max(mx, v);
            sum += v;
            ++present;
        }
        ColumnStats& st = rep.per_column_stats[c];
        if (present == 0) continue;  // all-missing column: stats stay zero
        st.min = mn;
        st.max = mx;
        st.mean = sum / static_cast<double>(present);
        double sq = 0.0;
        for (std::size_t r = 0; r < ds.n_rows(); ++r) {
            double v = ds.features(r, c);
            if (std::isnan(v)) continue;
            double d = v - st.mean;
            sq += d * d;
        }
        st.std_dev = std::sqrt(sq / static_cast<double>(present));
    }
    return rep;
}

Dataset resolve_missing(const Dataset& ds, MissingPolicy policy) {
    if (!ds.has_missing()) return ds;
    switch (policy) {
        case MissingPolicy::reject:
            throw ParseError("dataset contains missing values", 0, 0);
        case MissingPolicy::drop_rows: {
            std::vector<std::size_t> keep;
            for (std::size_t r = 0; r < ds.n_rows(); ++r) {
                bool ok = true;
                for (double v : ds.features.row(r))
                    if (std::isnan(v)) {
                        ok = false;
                        break;
                    }
                if (ok) keep.push_back(r);
            }
            if (keep.empty()) throw EmptyDatasetError("every row has missing values");
            return ds.subset(keep);
        }
        case MissingPolicy::mean_impute: {
            InspectionReport rep = inspect(ds);
            Dataset out = ds;
            for (std::size_t c = 0; c < out.n_cols(); ++c) {
                if (rep.missing_per_column[c] == 0) continue;
                for (std::size_t r = 0; r < out.n_rows(); ++r)
                    if (std::isnan(out.features(r, c)))
                        out.features(r, c) = rep.per_column_stats[c].mean;
            }
            return out;
        }
    }
    throw ConfigError("unknown missing policy");
}

void require_trainable(const Dataset& ds) {
    if (ds.n_rows() == 0) throw EmptyDatasetError("dataset is empty");
    for (double v : ds.features.data())
        if (!std::isfinite(v))
            throw ParseError("dataset contains missing or non-finite values; "
                             "resolve them before training",
                             0, 0);
}

void require_two_classes(const Dataset& ds) {
    require_trainable(ds);
    if (ds.count_label(1) == 0 || ds.count_label(0) == 0)
        throw DegenerateLabelsError("training requires both classes present");
}

void Standardizer::transform_inplace(Dataset& ds) const {
    if (ds.n_cols() != mean.size())
        throw ShapeError("standardizer fitted on " + std::to_string(mean.size()) +
                         " columns, dataset has " + std::to_string(ds.n_cols()));
    for (std::size_t r = 0; r < ds.n_rows(); ++r) {
        auto row = ds.features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / std_dev[c];
    }
}

Dataset Standardizer::transform(const Dataset& ds) const {
    Dataset out = ds;
    transform_inplace(out);
    return out;
}

Dataset Standardizer::inverse_transform(const Dataset& ds) const {
    if (ds.n_cols() != mean.size()) throw ShapeError("inverse_transform: column count mismatch");
    Dataset out = ds;
    for (std::size_t r = 0; r < out.n_rows(); ++r) {
        auto row = out.features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = row[c] * std_dev[c] + mean[c];
    }
    return out;
}

Standardizer standardizer_fit(const Dataset& train) {
    require_trainable(train);
    const std::size_t n = train.n_rows();
    const std::size_t d = train.n_cols();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.std_dev.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        auto row = train.features.row(r);
        for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
    }
    for (std::size_t c = 0; c < d; ++c) s.mean[c] /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        auto row = train.features.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            double diff = row[c] - s.mean[c];
            s.std_dev[c] += diff * diff;
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        s.std_dev[c] = std::sqrt(s.std_dev[c] / static_cast<double>(n));
        if (s.std_dev[c] == 0.0) {
            s.std_dev[c] = 1.0;  // constant column maps to 0
            s.constant_columns.push_back(c);
        }
    }
    return s;
}

StandardizeResult standardize_fit_transform(const Dataset& train,
                                            const std::vector<const Dataset*>& apply_to) {
    StandardizeResult res;
    res.standardizer = standardizer_fit(train);
    res.train = res.standardizer.transform(train);
    res.applied.reserve(apply_to.size());
    for (const Dataset* ds : apply_to) res.applied.push_back(res.standardizer.transform(*ds));
    return res;
}

std::vector<std::size_t> FoldPlan::fold_rows(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::complement_rows(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

FoldPlan stratified_kfold(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_kfold: k must be >= 2");
    std::size_t n_pos = ds.count_label(1);
    std::size_t n_neg = ds.n_rows() - n_pos;
    std::size_t minority = std::min(n_pos, n_neg);
    if (minority < static_cast<std::size_t>(k))
        throw InsufficientMinorityError("minority count " + std::to_string(minority) +
                                        " < k = " + std::to_string(k));

    FoldPlan plan;
    plan.k = k;
    plan.assignments.assign(ds.n_rows(), 0);
    Rng rng(derive_seed(seed, "stratified_kfold", static_cast<std::uint64_t>(k)));
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.n_rows(); ++i)
            if (ds.labels[i] == cls) idx.push_back(i);
        rng.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i)
            plan.assignments[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return plan;
}

Dataset make_synthetic(std::size_t n_major, std::size_t n_minor, std::size_t d,
                       double separation, std::uint64_t seed) {
    if (n_major < 1 || n_minor < 1 || d < 1)
        throw ConfigError("make_synthetic: class sizes and dimension must be >= 1");
    if (separation < 0.0) throw ConfigError("make_synthetic: separation must be >= 0");

    Dataset ds;
    for (std::size_t c = 0; c < d; ++c) ds.feature_names.push_back("f" + std::to_string(c));
    const std::size_t n = n_major + n_minor;
    ds.features = Matrix(n, d);
    ds.labels.assign(n, 0);
    Rng rng(derive_seed(seed, "make_synthetic", 0));
    for (std::size_t r = 0; r < n; ++r) {
        bool minor = r >= n_major;
        auto row = ds.features.row(r);
        for (std::size_t c = 0; c < d; ++c) row[c] = rng.normal() + (minor ? separation : 0.0);
        if (minor) ds.labels[r] = 1;
    }
    ds.row_ids.resize(n);
    std::iota(ds.row_ids.begin(), ds.row_ids.end(), std::int64_t{0});
    ds.id_bound = static_cast<std::int64_t>(n);
    return ds;
}

Dataset subsample_majority(const Dataset& ds, std::size_t max_majority, std::uint64_t seed) {
    std::vector<std::size_t> majority;
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        if (ds.labels[i] == 0) majority.push_back(i);
    if (majority.size() <= max_majority) return ds;

    Rng rng(derive_seed(seed, "subsample_majority", max_majority));
    rng.shuffle(majority);
    majority.resize(max_majority);
    std::vector<std::size_t> keep = std::move(majority);
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        if (ds.labels[i] == 1) keep.push_back(i);
    std::sort(keep.begin(), keep.end());  // preserve original row order
    return ds.subset(keep);
}

}  // namespace imbf
