#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace chr {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyFileError : CsvError {
    using CsvError::CsvError;
};
struct MissingTargetError : CsvError {
    using CsvError::CsvError;
};
struct NonNumericCellError : CsvError {
    NonNumericCellError(std::size_t row, const std::string& column, const std::string& cell);
    std::size_t row;  // 1-based data row (header excluded)
    std::string column;
};

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct Dataset {
    Matrix x;
    std::vector<double> y;
    std::vector<std::string> feature_names;

    std::size_t n() const { return x.rows; }
    std::size_t p() const { return x.cols; }
};

/// Column-wise zero-mean unit-variance transform fitted on training data and
/// applied unchanged elsewhere. Constant columns keep scale one.
class Standardizer {
  public:
    Standardizer() = default;
    void fit(const Matrix& x);
    Matrix apply(const Matrix& x) const;
    std::vector<double> apply_row(std::span<const double> x) const;

    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& sds() const { return sds_; }
    void restore(std::vector<double> means, std::vector<double> sds);

  private:
    std::vector<double> means_;
    std::vector<double> sds_;
};

struct SupportBounds {
    double lo = 0.0;
    double hi = 1.0;
};

/// Conservative response bounds: training min/max expanded by pad (default
/// 20%) of the observed range on each side.
SupportBounds support_bounds(const std::vector<double>& y, double pad = 0.2);

/// Loads a CSV with a header row. The target column is extracted as the
/// response; every other column must be numeric and becomes a feature. A
/// non-numeric cell aborts with its row number and column name.
Dataset read_csv(const std::string& path, const std::string& target_column);

/// Feature-only variant (no target column extracted).
Matrix read_csv_features(const std::string& path, std::vector<std::string>* names = nullptr);

void write_intervals_csv(const std::string& path,
                         const std::vector<std::pair<double, double>>& intervals);

/// Row subset helpers used by the experiment harness.
Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& idx);

}  // namespace chr
