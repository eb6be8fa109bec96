#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chr/calibration.hpp"
#include "chr/dataset.hpp"
#include "chr/models.hpp"
#include "chr/nested_sequence.hpp"

namespace chr {

struct FoldTooSmallError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChrConfig {
    double alpha = 0.1;
    int bins = 100;
    int resolution = 0;    // T; 0 selects the calibration-set size
    int start_index = -1;  // t_bar; -1 selects round((1 - alpha) * T)
    bool randomize = true;
    std::uint64_t seed = 1;
};

/// Split-conformal CHR: fit a quantile model, bin its conditional densities
/// over a fixed partition, score a calibration set with nested-interval
/// conformity scores, and emit calibrated intervals for new points. All
/// uniform draws derive from the config seed, so results are reproducible
/// bit for bit.
class ChrPredictor {
  public:
    ChrPredictor(std::unique_ptr<QuantileModel> model, ChrConfig cfg);

    void fit(const Dataset& train);
    void calibrate(const Dataset& cal);

    std::pair<double, double> predict(std::span<const double> x, std::uint64_t draw_index) const;
    std::vector<std::pair<double, double>> predict_batch(const Matrix& x) const;

    ConditionalHistogram conditional_histogram(std::span<const double> x) const;

    const Partition& partition() const { return *partition_; }
    const SequenceConfig& sequence_config() const { return seq_; }
    const CalibrationResult& calibration() const { return cal_; }
    const QuantileModel& model() const { return *model_; }
    const ChrConfig& config() const { return cfg_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    /// Writes <prefix>.json (human-auditable manifest) and <prefix>.bin
    /// (flat block of model doubles).
    void save(const std::string& prefix) const;
    static ChrPredictor load(const std::string& prefix);

  private:
    ChrConfig cfg_;
    std::unique_ptr<QuantileModel> model_;
    std::optional<Partition> partition_;
    SequenceConfig seq_;
    CalibrationResult cal_;
    std::vector<std::string> feature_names_;
    bool calibrated_ = false;
};

/// Artifact discriminator read from <prefix>.json ("chr-predictor" or
/// "chr-cvplus-predictor").
std::string sniff_artifact_kind(const std::string& prefix);

struct CvPlusConfig {
    double alpha = 0.1;
    int folds = 10;
    int bins = 100;
    int resolution = 0;    // T; 0 selects the training size
    int start_index = -1;  // -1 selects round((1 - alpha) * T)
    bool randomize = true;
    std::uint64_t seed = 1;
};

/// Cross-validation+ calibration: each training sample is scored under the
/// model of the fold that held it out, and a new point's interval is the
/// convex hull of the response bins surviving the rank comparison against
/// those scores. Marginal coverage is guaranteed above 1 - 2*alpha.
class CvPlusPredictor {
  public:
    CvPlusPredictor(const Dataset& train, const ModelConfig& model_cfg,
                    const SyntheticConfig* law, CvPlusConfig cfg);

    std::pair<double, double> predict(std::span<const double> x, std::uint64_t draw_index) const;
    std::vector<std::pair<double, double>> predict_batch(const Matrix& x) const;

    int folds() const { return cfg_.folds; }
    const Partition& partition() const { return *partition_; }

    /// Same two-file artifact format as ChrPredictor, with one model block
    /// per fold and the per-fold score lists in the manifest.
    void save(const std::string& prefix) const;
    static CvPlusPredictor load(const std::string& prefix);

  private:
    CvPlusPredictor() = default;

    CvPlusConfig cfg_;
    SequenceConfig seq_;
    std::optional<Partition> partition_;
    std::vector<std::unique_ptr<QuantileModel>> fold_models_;
    std::vector<std::vector<int>> fold_scores_;  // per fold, sorted
    std::size_t n_ = 0;
    double alpha_n_ = 0.0;
};

}  // namespace chr
