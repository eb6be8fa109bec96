#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chr/dataset.hpp"
#include "chr/density.hpp"
#include "chr/synthetic.hpp"

namespace chr {

struct EmptyTrainingSetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedGeneratorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Conditional quantile estimator. fit() learns from (features, responses)
/// and records conservative response support bounds; quantiles() returns
/// monotone per-x estimates (crossing raw outputs are sorted before return,
/// and everything is clamped into the support). Feature scaling is handled
/// inside each model, so callers pass raw rows.
class QuantileModel {
  public:
    virtual ~QuantileModel() = default;

    void fit(const Matrix& x, const std::vector<double>& y);
    void fit(const Dataset& d) { fit(d.x, d.y); }

    /// Monotone quantile estimates at arbitrary levels; levels <= 0 and
    /// >= 1 map to the support bounds.
    std::vector<double> quantiles(std::span<const double> x,
                                  std::span<const double> levels) const;

    /// Standard grid: levels k/100 for k = 0..100 (bounds at 0 and 1,
    /// interior levels 1%..99%).
    QuantileGrid quantile_grid(std::span<const double> x) const;

    virtual std::string name() const = 0;
    virtual std::unique_ptr<QuantileModel> clone_config() const = 0;  // unfitted copy

    const SupportBounds& support() const { return support_; }
    void set_support(const SupportBounds& b) { support_ = b; }

    static const std::vector<double>& standard_levels();

  protected:
    virtual void do_fit(const Matrix& x, const std::vector<double>& y) = 0;
    virtual std::vector<double> raw_quantiles(std::span<const double> x,
                                              std::span<const double> levels) const = 0;

    SupportBounds support_{};
    bool fitted_ = false;
};

/// Empirical quantiles of the k nearest training responses (Euclidean
/// distance on internally standardized features). k = 0 selects
/// max(50, n/20) clamped to the training size.
class KnnQuantileModel final : public QuantileModel {
  public:
    explicit KnnQuantileModel(int k = 0) : k_cfg_(k) {}

    std::string name() const override { return "knn"; }
    std::unique_ptr<QuantileModel> clone_config() const override {
        return std::make_unique<KnnQuantileModel>(k_cfg_);
    }

    int effective_k() const { return k_; }

    // serialization access
    const Matrix& train_features() const { return train_x_; }
    const std::vector<double>& train_responses() const { return train_y_; }
    const Standardizer& standardizer() const { return scaler_; }
    void restore(Matrix x, std::vector<double> y, Standardizer s, int k);

  protected:
    void do_fit(const Matrix& x, const std::vector<double>& y) override;
    std::vector<double> raw_quantiles(std::span<const double> x,
                                      std::span<const double> levels) const override;

  private:
    int k_cfg_ = 0;
    int k_ = 0;
    Matrix train_x_;  // standardized
    std::vector<double> train_y_;
    Standardizer scaler_;
};

/// One linear model per interior grid level, trained by full-batch
/// subgradient descent on the pinball loss (momentum, geometrically decaying
/// step, fixed iteration budget, parameters initialized at zero). Levels
/// between fitted grid points are interpolated.
class LinearPinballModel final : public QuantileModel {
  public:
    struct Options {
        int max_iters = 1500;
        double learning_rate = 0.5;
        double momentum = 0.9;
    };
    LinearPinballModel();
    explicit LinearPinballModel(Options opts);

    std::string name() const override { return "linear"; }
    std::unique_ptr<QuantileModel> clone_config() const override {
        return std::make_unique<LinearPinballModel>(opts_);
    }

    /// False when the loss was still improving materially at the end of the
    /// iteration budget; the best iterate is used either way.
    bool converged() const { return converged_; }

    const std::vector<double>& fitted_levels() const { return levels_; }
    const std::vector<double>& weights() const { return weights_; }  // levels x (p+1), row-major
    const Standardizer& standardizer() const { return scaler_; }
    double response_mean() const { return y_mean_; }
    double response_sd() const { return y_sd_; }
    void restore(std::vector<double> levels, std::vector<double> weights, Standardizer s,
                 double y_mean, double y_sd);

  protected:
    void do_fit(const Matrix& x, const std::vector<double>& y) override;
    std::vector<double> raw_quantiles(std::span<const double> x,
                                      std::span<const double> levels) const override;

  private:
    double predict_level(std::size_t level_idx, std::span<const double> xs) const;

    Options opts_;
    std::vector<double> levels_;   // interior grid levels
    std::vector<double> weights_;  // per level: p coefficients then intercept
    Standardizer scaler_;
    double y_mean_ = 0.0;
    double y_sd_ = 1.0;
    bool converged_ = true;
};

/// Exact conditional quantiles of the synthetic law. Only meaningful for
/// 1-feature data drawn from that generator.
class OracleQuantileModel final : public QuantileModel {
  public:
    explicit OracleQuantileModel(SyntheticConfig law) : law_(law) {}

    std::string name() const override { return "oracle"; }
    std::unique_ptr<QuantileModel> clone_config() const override {
        return std::make_unique<OracleQuantileModel>(law_);
    }
    const SyntheticConfig& law() const { return law_; }

  protected:
    void do_fit(const Matrix& x, const std::vector<double>& y) override;
    std::vector<double> raw_quantiles(std::span<const double> x,
                                      std::span<const double> levels) const override;

  private:
    SyntheticConfig law_;
};

struct ModelConfig {
    std::string type = "knn";  // knn | linear | oracle
    int knn_k = 0;
    LinearPinballModel::Options pinball{};
};

/// Factory; the synthetic law is required for type == "oracle".
std::unique_ptr<QuantileModel> make_model(const ModelConfig& cfg,
                                          const SyntheticConfig* law = nullptr);

/// Shared estimation pipeline: quantile grid -> piecewise density -> tail
/// smoothing between the first and last interior grid levels. CHR integrates
/// this over a partition; DCP and DistSplit use its CDF directly.
PiecewiseDensity conditional_density(const QuantileModel& model, std::span<const double> x);

}  // namespace chr
