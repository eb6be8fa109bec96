#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chr/dataset.hpp"
#include "chr/models.hpp"
#include "chr/synthetic.hpp"

namespace chr {

struct TooFewTestPointsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fraction of test points with lo <= y <= hi.
double marginal_coverage(const std::vector<std::pair<double, double>>& intervals,
                         const std::vector<double>& y);

struct WscConfig {
    double delta = 0.1;
    int n_directions = 1000;
    std::uint64_t seed = 7;
};

/// Worst-slab conditional coverage estimate. A random 25% selection split
/// picks, over random unit directions, the minimum-coverage slab holding at
/// least a delta fraction of points; the reported value is that slab's
/// coverage on the held-out 75%, which avoids selection bias. With one
/// feature only the two signed directions exist.
double worst_slab_coverage(const Matrix& x, const std::vector<std::uint8_t>& covered,
                           const WscConfig& cfg);

struct ExperimentConfig {
    std::string method = "chr";  // chr | chr-cvplus | cqr | dcp | distsplit | dcp-cqr
    ModelConfig model;
    SyntheticConfig data;        // synthetic source (used when csv_path is empty)
    std::string csv_path;        // optional real-data source
    std::string target_column = "y";
    double alpha = 0.1;
    int bins = 100;
    int resolution = 0;    // T; 0 selects the calibration size
    int start_index = -1;  // t_bar; -1 selects round((1 - alpha) T)
    bool randomize = true;
    std::size_t n_train = 1000;
    std::size_t n_cal = 1000;
    std::size_t n_test = 2000;
    int repetitions = 1;
    int folds = 10;  // CV+ only
    std::uint64_t seed = 1;
    bool compute_wsc = true;
    WscConfig wsc{};
    int threads = 0;  // 0 selects the hardware count
};

struct RepetitionRecord {
    int rep = 0;
    std::uint64_t seed = 0;
    double coverage = 0.0;
    double wsc = 0.0;
    double mean_width = 0.0;
};

struct EvaluationReport {
    ExperimentConfig config;
    std::vector<RepetitionRecord> records;
    double mean_coverage = 0.0, se_coverage = 0.0;
    double mean_wsc = 0.0, se_wsc = 0.0;
    double mean_width = 0.0, se_width = 0.0;

    /// Deterministic reduction: records are sorted by repetition index first,
    /// so any input order yields the same aggregate.
    void aggregate();
};

/// Runs the full protocol: per repetition, fresh data (train/calibration of
/// equal size by default plus an independent test set), fit, calibrate,
/// predict, evaluate. Repetitions run in parallel on derived seeds.
EvaluationReport run_experiment(const ExperimentConfig& cfg);

/// One CSV row per repetition per report, config columns included.
void write_report_csv(const std::string& path, const std::vector<EvaluationReport>& reports);
/// JSON summary: config echo plus aggregate metrics per report.
void write_report_json(const std::string& path, const std::vector<EvaluationReport>& reports);

}  // namespace chr
