#include "chr/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace chr {

const std::vector<double>& QuantileModel::standard_levels() {
    static const std::vector<double> levels = [] {
        std::vector<double> v(101);
        for (int k = 0; k <= 100; ++k) v[static_cast<std::size_t>(k)] = k / 100.0;
        return v;
    }();
    return levels;
}

void QuantileModel::fit(const Matrix& x, const std::vector<double>& y) {
    if (x.rows == 0 || y.empty()) throw EmptyTrainingSetError("fit: empty training set");
    if (x.rows != y.size()) throw std::invalid_argument("fit: feature/response size mismatch");
    support_ = support_bounds(y);
    do_fit(x, y);
    fitted_ = true;
}

std::vector<double> QuantileModel::quantiles(std::span<const double> x,
                                             std::span<const double> levels) const {
    if (!fitted_) throw std::logic_error("quantiles: model not fitted");
    std::vector<double> out = raw_quantiles(x, levels);
    std::sort(out.begin(), out.end());  // rearrangement repairs quantile crossing
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (levels[i] <= 0.0)
            out[i] = support_.lo;
        else if (levels[i] >= 1.0)
            out[i] = support_.hi;
        else
            out[i] = std::clamp(out[i], support_.lo, support_.hi);
    }
    return out;
}

QuantileGrid QuantileModel::quantile_grid(std::span<const double> x) const {
    QuantileGrid g;
    g.levels = standard_levels();
    g.values = quantiles(x, g.levels);
    return g;
}

// --------------------------------- k-NN ------------------------------------

void KnnQuantileModel::do_fit(const Matrix& x, const std::vector<double>& y) {
    scaler_.fit(x);
    train_x_ = scaler_.apply(x);
    train_y_ = y;
    const int n = static_cast<int>(y.size());
    k_ = k_cfg_ > 0 ? k_cfg_ : std::max(50, n / 20);
    k_ = std::clamp(k_, 1, n);
}

std::vector<double> KnnQuantileModel::raw_quantiles(std::span<const double> x,
                                                    std::span<const double> levels) const {
    const std::size_t n = train_x_.rows;
    const std::vector<double> xs = scaler_.apply_row(x);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        const auto r = train_x_.row(i);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double t = r[j] - xs[j];
            d += t * t;
        }
        dist[i] = {d, i};
    }
    const std::size_t k = static_cast<std::size_t>(k_);
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    std::vector<double> neigh(k);
    for (std::size_t i = 0; i < k; ++i) neigh[i] = train_y_[dist[i].second];
    std::sort(neigh.begin(), neigh.end());

    std::vector<double> out(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double a = levels[i];
        if (a <= 0.0) {
            out[i] = neigh.front();
        } else if (a >= 1.0) {
            out[i] = neigh.back();
        } else {
            // smallest rank r with r/k >= a
            auto r = static_cast<std::size_t>(std::ceil(a * static_cast<double>(k) - 1e-9));
            r = std::clamp<std::size_t>(r, 1, k);
            out[i] = neigh[r - 1];
        }
    }
    return out;
}

void KnnQuantileModel::restore(Matrix x, std::vector<double> y, Standardizer s, int k) {
    train_x_ = std::move(x);
    train_y_ = std::move(y);
    scaler_ = std::move(s);
    k_ = k;
    k_cfg_ = k;
    fitted_ = true;
}

// ----------------------------- linear pinball ------------------------------

LinearPinballModel::LinearPinballModel() : LinearPinballModel(Options{}) {}
LinearPinballModel::LinearPinballModel(Options opts) : opts_(opts) {}

void LinearPinballModel::do_fit(const Matrix& x, const std::vector<double>& y) {
    scaler_.fit(x);
    const Matrix xs = scaler_.apply(x);
    const std::size_t n = xs.rows;
    const std::size_t p = xs.cols;

    y_mean_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double v = 0.0;
    for (double yi : y) v += (yi - y_mean_) * (yi - y_mean_);
    y_sd_ = std::sqrt(v / static_cast<double>(n));
    if (y_sd_ <= 0.0) y_sd_ = 1.0;
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = (y[i] - y_mean_) / y_sd_;

    const auto& grid = standard_levels();
    levels_.assign(grid.begin() + 1, grid.end() - 1);  // interior levels only
    const std::size_t nl = levels_.size();
    const std::size_t d = p + 1;  // coefficients plus intercept

    std::vector<double> w(nl * d, 0.0), vel(nl * d, 0.0), grad(nl * d, 0.0);
    std::vector<double> best_w = w;
    double best_loss = std::numeric_limits<double>::infinity();
    double loss_at_80 = std::numeric_limits<double>::infinity();

    const double decay = std::pow(1e-3, 1.0 / std::max(1, opts_.max_iters));
    double lr = opts_.learning_rate;
    for (int iter = 0; iter < opts_.max_iters; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = xs.row(i);
            for (std::size_t l = 0; l < nl; ++l) {
                const double* wl = &w[l * d];
                double pred = wl[p];
                for (std::size_t j = 0; j < p; ++j) pred += wl[j] * row[j];
                const double r = ys[i] - pred;
                const double a = levels_[l];
                double g;  // subgradient of the pinball loss w.r.t. the prediction
                if (r > 0.0) {
                    loss += a * r;
                    g = -a;
                } else if (r < 0.0) {
                    loss += (a - 1.0) * r;
                    g = 1.0 - a;
                } else {
                    g = 0.0;
                }
                double* gl = &grad[l * d];
                for (std::size_t j = 0; j < p; ++j) gl[j] += g * row[j];
                gl[p] += g;
            }
        }
        loss /= static_cast<double>(n) * static_cast<double>(nl);
        if (loss < best_loss) {
            best_loss = loss;
            best_w = w;
        }
        if (iter == (opts_.max_iters * 4) / 5) loss_at_80 = best_loss;

        const double scale = lr / static_cast<double>(n);
        for (std::size_t idx = 0; idx < w.size(); ++idx) {
            vel[idx] = opts_.momentum * vel[idx] + grad[idx];
            w[idx] -= scale * vel[idx];
        }
        lr *= decay;
    }
    weights_ = std::move(best_w);
    converged_ = !(std::isfinite(loss_at_80) &&
                   best_loss < loss_at_80 - 1e-4 * std::max(1.0, std::abs(loss_at_80)));
}

double LinearPinballModel::predict_level(std::size_t level_idx, std::span<const double> xs) const {
    const std::size_t d = xs.size() + 1;
    const double* wl = &weights_[level_idx * d];
    double pred = wl[xs.size()];
    for (std::size_t j = 0; j < xs.size(); ++j) pred += wl[j] * xs[j];
    return pred * y_sd_ + y_mean_;
}

std::vector<double> LinearPinballModel::raw_quantiles(std::span<const double> x,
                                                      std::span<const double> levels) const {
    const std::vector<double> xs = scaler_.apply_row(x);
    std::vector<double> out(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double a = levels[i];
        if (a <= levels_.front()) {
            out[i] = predict_level(0, xs);
        } else if (a >= levels_.back()) {
            out[i] = predict_level(levels_.size() - 1, xs);
        } else {
            const auto it = std::lower_bound(levels_.begin(), levels_.end(), a);
            const std::size_t hi = static_cast<std::size_t>(it - levels_.begin());
            if (levels_[hi] == a) {
                out[i] = predict_level(hi, xs);
            } else {
                const std::size_t lo = hi - 1;
                const double t = (a - levels_[lo]) / (levels_[hi] - levels_[lo]);
                out[i] = (1.0 - t) * predict_level(lo, xs) + t * predict_level(hi, xs);
            }
        }
    }
    return out;
}

void LinearPinballModel::restore(std::vector<double> levels, std::vector<double> weights,
                                 Standardizer s, double y_mean, double y_sd) {
    levels_ = std::move(levels);
    weights_ = std::move(weights);
    scaler_ = std::move(s);
    y_mean_ = y_mean;
    y_sd_ = y_sd;
    fitted_ = true;
}

// --------------------------------- oracle ----------------------------------

void OracleQuantileModel::do_fit(const Matrix& x, const std::vector<double>&) {
    if (x.cols != 1)
        throw UnsupportedGeneratorError("oracle model requires the 1-feature synthetic law");
}

std::vector<double> OracleQuantileModel::raw_quantiles(std::span<const double> x,
                                                       std::span<const double> levels) const {
    std::vector<double> out(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i)
        out[i] = oracle_conditional_quantile(law_, x[0], levels[i]);
    return out;
}

// --------------------------------- factory ---------------------------------

std::unique_ptr<QuantileModel> make_model(const ModelConfig& cfg, const SyntheticConfig* law) {
    if (cfg.type == "knn") return std::make_unique<KnnQuantileModel>(cfg.knn_k);
    if (cfg.type == "linear") return std::make_unique<LinearPinballModel>(cfg.pinball);
    if (cfg.type == "oracle") {
        if (!law)
            throw UnsupportedGeneratorError(
                "oracle model is only available for synthetic data with a known law");
        return std::make_unique<OracleQuantileModel>(*law);
    }
    throw std::invalid_argument("unknown model type '" + cfg.type + "'");
}

PiecewiseDensity conditional_density(const QuantileModel& model, std::span<const double> x) {
    const QuantileGrid grid = model.quantile_grid(x);
    const PiecewiseDensity raw = quantiles_to_density(grid);
    const double lower_q = grid.values[1];
    const double upper_q = grid.values[grid.values.size() - 2];
    return tail_smooth(raw, lower_q, upper_q);
}

}  // namespace chr
