#include "latentpath/dataset.hpp"

#include "latentpath/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace latentpath {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(std::string_view line, char delimiter) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                current += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(trim(current));
    return fields;
}

bool is_missing_marker(const std::string& cell) { return cell.empty() || cell == "NA"; }

double parse_cell(const std::string& cell) {
    if (is_missing_marker(cell)) return kNaN;
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) return kNaN;
    return value;
}

}  // namespace

bool Dataset::missing(int row, int col) const { return std::isnan(values(row, col)); }

int Dataset::column(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

Dataset Dataset::select(const std::vector<std::string>& columns) const {
    Dataset out;
    out.names = columns;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(columns.size()));
    out.raw.assign(raw.size(), std::vector<std::string>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const int src = column(columns[c]);
        if (src < 0) throw DataError(fmt::format("unknown variable '{}'", columns[c]));
        out.values.col(static_cast<Eigen::Index>(c)) = values.col(src);
        for (std::size_t r = 0; r < raw.size(); ++r) out.raw[r][c] = raw[r][static_cast<std::size_t>(src)];
    }
    return out;
}

Dataset Dataset::take_rows(const std::vector<int>& rows) const {
    Dataset out;
    out.names = names;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    out.raw.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.values.row(static_cast<Eigen::Index>(r)) = values.row(rows[r]);
        if (!raw.empty()) out.raw.push_back(raw[static_cast<std::size_t>(rows[r])]);
    }
    return out;
}

Dataset parse_table(const std::string& text, const TableOptions& options) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto fields = split_fields(line, options.delimiter);
        if (header.empty()) {
            header = std::move(fields);
            continue;
        }
        if (fields.size() != header.size()) {
            throw DataError(fmt::format("line {}: expected {} fields, found {}", line_no, header.size(),
                                        fields.size()));
        }
        rows.push_back(std::move(fields));
    }
    if (header.empty()) throw DataError("empty table: no header row");
    if (rows.empty()) throw DataError("empty table: header without data rows");

    Dataset data;
    data.names = header;
    data.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_cell(rows[r][c]);
        }
    }
    data.raw = std::move(rows);
    return data;
}

Dataset load_table(const std::string& path, const TableOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open data file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_table(buffer.str(), options);
}

void write_table(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write data file '" + path + "'");
    out << fmt::format("{}\n", fmt::join(data.names, ","));
    for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.values.cols(); ++c) {
            if (c) out << ',';
            const double v = data.values(r, c);
            if (std::isnan(v)) {
                out << "NA";
            } else {
                out << fmt::format("{}", v);
            }
        }
        out << '\n';
    }
}

bool SampleMoments::has_zero_variance() const {
    return std::find(zero_variance.begin(), zero_variance.end(), true) != zero_variance.end();
}

Eigen::MatrixXd correlation_from_covariance(const Eigen::MatrixXd& s) {
    const Eigen::Index p = s.rows();
    Eigen::MatrixXd r(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (i == j) {
                r(i, j) = 1.0;
            } else if (s(i, i) <= 0.0 || s(j, j) <= 0.0) {
                r(i, j) = kNaN;
            } else {
                r(i, j) = std::clamp(s(i, j) / std::sqrt(s(i, i) * s(j, j)), -1.0, 1.0);
            }
        }
    }
    return r;
}

SampleMoments covariance(const Dataset& data, Divisor divisor) {
    std::vector<Eigen::Index> complete;
    for (Eigen::Index r = 0; r < data.values.rows(); ++r) {
        if (!data.values.row(r).array().isNaN().any()) complete.push_back(r);
    }
    const auto n = static_cast<Eigen::Index>(complete.size());
    if (n < 2) throw DataError(fmt::format("need at least 2 complete rows, found {}", n));

    Eigen::MatrixXd x(n, data.values.cols());
    for (Eigen::Index r = 0; r < n; ++r) x.row(r) = data.values.row(complete[static_cast<std::size_t>(r)]);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const double denom = divisor == Divisor::N ? static_cast<double>(n) : static_cast<double>(n - 1);

    SampleMoments m;
    m.covariance = (x.transpose() * x) / denom;
    m.covariance = (0.5 * (m.covariance + m.covariance.transpose())).eval();
    m.n = static_cast<int>(n);
    m.p = static_cast<int>(data.values.cols());
    m.names = data.names;
    m.divisor = divisor;
    m.zero_variance.resize(static_cast<std::size_t>(m.p));
    for (int i = 0; i < m.p; ++i) m.zero_variance[static_cast<std::size_t>(i)] = !(m.covariance(i, i) > 0.0);
    m.correlation = correlation_from_covariance(m.covariance);
    return m;
}

SampleMoments moments_from_covariance(const Eigen::MatrixXd& s, int n, std::vector<std::string> names) {
    if (s.rows() != s.cols() || static_cast<std::size_t>(s.rows()) != names.size()) {
        throw DataError("covariance matrix and name list disagree in size");
    }
    SampleMoments m;
    m.covariance = s;
    m.n = n;
    m.p = static_cast<int>(s.rows());
    m.names = std::move(names);
    m.zero_variance.resize(static_cast<std::size_t>(m.p));
    for (int i = 0; i < m.p; ++i) m.zero_variance[static_cast<std::size_t>(i)] = !(s(i, i) > 0.0);
    m.correlation = correlation_from_covariance(s);
    return m;
}

std::vector<FrequencyRow> frequency_table(const Dataset& data, const std::string& variable) {
    const int col = data.column(variable);
    if (col < 0) throw DataError(fmt::format("unknown variable '{}'", variable));

    std::map<std::string, int> counts;
    int total = 0;
    for (const auto& row : data.raw) {
        const auto& cell = row[static_cast<std::size_t>(col)];
        if (is_missing_marker(cell)) continue;
        ++counts[cell];
        ++total;
    }
    std::vector<FrequencyRow> out;
    for (const auto& [level, count] : counts) {
        out.push_back({level, count, total ? 100.0 * count / total : 0.0});
    }
    const bool numeric = std::all_of(out.begin(), out.end(),
                                     [](const FrequencyRow& r) { return !std::isnan(parse_cell(r.level)); });
    if (numeric) {
        std::stable_sort(out.begin(), out.end(), [](const FrequencyRow& a, const FrequencyRow& b) {
            return parse_cell(a.level) < parse_cell(b.level);
        });
    }
    return out;
}

}  // namespace latentpath
