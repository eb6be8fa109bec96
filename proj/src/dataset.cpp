#include "chr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace chr {

NonNumericCellError::NonNumericCellError(std::size_t row_, const std::string& column_,
                                         const std::string& cell)
    : CsvError("non-numeric cell '" + cell + "' in column '" + column_ + "' at data row " +
               std::to_string(row_)),
      row(row_),
      column(column_) {}

void Standardizer::fit(const Matrix& x) {
    means_.assign(x.cols, 0.0);
    sds_.assign(x.cols, 1.0);
    if (x.rows == 0) return;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) s += x.at(i, j);
        means_[j] = s / static_cast<double>(x.rows);
        double v = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double d = x.at(i, j) - means_[j];
            v += d * d;
        }
        const double sd = std::sqrt(v / static_cast<double>(x.rows));
        sds_[j] = sd > 0.0 ? sd : 1.0;
    }
}

Matrix Standardizer::apply(const Matrix& x) const {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) out.at(i, j) = (x.at(i, j) - means_[j]) / sds_[j];
    return out;
}

std::vector<double> Standardizer::apply_row(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - means_[j]) / sds_[j];
    return out;
}

void Standardizer::restore(std::vector<double> means, std::vector<double> sds) {
    means_ = std::move(means);
    sds_ = std::move(sds);
}

SupportBounds support_bounds(const std::vector<double>& y, double pad) {
    if (y.empty()) throw std::invalid_argument("support_bounds: empty response vector");
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    const double range = *mx - *mn;
    const double w = range > 0.0 ? pad * range : std::max(1.0, 0.2 * std::abs(*mn));
    return SupportBounds{*mn - w, *mx + w};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) {
        // trim surrounding whitespace
        const auto b = cur.find_first_not_of(" \t\r");
        const auto e = cur.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e && !s.empty();
}

struct RawCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

RawCsv read_raw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path + "'");
    RawCsv raw;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_csv_line(line);
        if (!have_header) {
            raw.header = std::move(cells);
            have_header = true;
        } else {
            raw.rows.push_back(std::move(cells));
        }
    }
    if (!have_header || raw.rows.empty()) throw EmptyFileError("'" + path + "' has no data rows");
    return raw;
}

}  // namespace

Dataset read_csv(const std::string& path, const std::string& target_column) {
    RawCsv raw = read_raw(path);
    std::size_t target = raw.header.size();
    for (std::size_t j = 0; j < raw.header.size(); ++j)
        if (raw.header[j] == target_column) target = j;
    if (target == raw.header.size())
        throw MissingTargetError("target column '" + target_column + "' not found in '" + path +
                                 "'");

    Dataset d;
    for (std::size_t j = 0; j < raw.header.size(); ++j)
        if (j != target) d.feature_names.push_back(raw.header[j]);
    d.x = Matrix(raw.rows.size(), raw.header.size() - 1);
    d.y.resize(raw.rows.size());

    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        const auto& cells = raw.rows[i];
        if (cells.size() != raw.header.size())
            throw CsvError("row " + std::to_string(i + 1) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(raw.header.size()));
        std::size_t k = 0;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double v = 0.0;
            if (!parse_double(cells[j], v)) throw NonNumericCellError(i + 1, raw.header[j], cells[j]);
            if (j == target)
                d.y[i] = v;
            else
                d.x.at(i, k++) = v;
        }
    }
    return d;
}

Matrix read_csv_features(const std::string& path, std::vector<std::string>* names) {
    RawCsv raw = read_raw(path);
    if (names) *names = raw.header;
    Matrix x(raw.rows.size(), raw.header.size());
    for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        const auto& cells = raw.rows[i];
        if (cells.size() != raw.header.size())
            throw CsvError("row " + std::to_string(i + 1) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(raw.header.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double v = 0.0;
            if (!parse_double(cells[j], v)) throw NonNumericCellError(i + 1, raw.header[j], cells[j]);
            x.at(i, j) = v;
        }
    }
    return x;
}

void write_intervals_csv(const std::string& path,
                         const std::vector<std::pair<double, double>>& intervals) {
    std::ofstream out(path);
    if (!out) throw CsvError("cannot write '" + path + "'");
    out << "lo,hi\n";
    out.precision(17);
    for (const auto& [lo, hi] : intervals) out << lo << "," << hi << "\n";
}

Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.feature_names = d.feature_names;
    out.x = Matrix(idx.size(), d.p());
    out.y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto r = d.x.row(idx[i]);
        std::copy(r.begin(), r.end(), out.x.row(i).begin());
        out.y[i] = d.y[idx[i]];
    }
    return out;
}

}  // namespace chr
