#include "chr/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "chr/rng.hpp"

namespace chr {

namespace {

constexpr std::uint64_t kCalStream = 0x63616c69ULL;
constexpr std::uint64_t kTestStream = 0x74657374ULL;
constexpr std::uint64_t kFoldStream = 0x666f6c64ULL;
constexpr int kSchemaVersion = 1;

double test_eps(std::uint64_t seed, std::uint64_t draw_index) {
    auto rng = make_rng(derive_seed(derive_seed(seed, kTestStream), draw_index));
    return uniform01(rng);
}

}  // namespace

ChrPredictor::ChrPredictor(std::unique_ptr<QuantileModel> model, ChrConfig cfg)
    : cfg_(cfg), model_(std::move(model)) {
    if (!model_) throw std::invalid_argument("ChrPredictor: null model");
    if (!(cfg_.alpha > 0.0 && cfg_.alpha < 1.0))
        throw std::invalid_argument("ChrPredictor: alpha outside (0, 1)");
    if (cfg_.bins < 1) throw std::invalid_argument("ChrPredictor: bins must be >= 1");
}

void ChrPredictor::fit(const Dataset& train) {
    model_->fit(train);
    feature_names_ = train.feature_names;
    const SupportBounds b = model_->support();
    partition_ = Partition::equal_width(b.lo, b.hi, cfg_.bins);
}

ConditionalHistogram ChrPredictor::conditional_histogram(std::span<const double> x) const {
    if (!partition_) throw std::logic_error("ChrPredictor: fit before asking for histograms");
    return density_to_histogram(conditional_density(*model_, x), *partition_);
}

void ChrPredictor::calibrate(const Dataset& cal) {
    if (!partition_) throw std::logic_error("ChrPredictor: fit before calibrate");
    if (cal.n() == 0) throw EmptyCalibrationSetError("ChrPredictor: empty calibration set");
    const int T = cfg_.resolution > 0 ? cfg_.resolution : static_cast<int>(cal.n());
    seq_ = SequenceConfig::for_alpha(T, cfg_.alpha, cfg_.randomize);
    if (cfg_.start_index >= 0) seq_.start_index = std::min(cfg_.start_index, T);

    auto rng = make_rng(derive_seed(cfg_.seed, kCalStream));
    ConformityScoreSet scores;
    scores.resolution = T;
    scores.scores.resize(cal.n());
    for (std::size_t i = 0; i < cal.n(); ++i) {
        const double eps = uniform01(rng);
        const ConditionalHistogram h = conditional_histogram(cal.x.row(i));
        scores.scores[i] = conformity_score(h, *partition_, cal.y[i], seq_, eps);
    }
    cal_ = split_calibrate(scores, cfg_.alpha);
    calibrated_ = true;
}

std::pair<double, double> ChrPredictor::predict(std::span<const double> x,
                                                std::uint64_t draw_index) const {
    if (!calibrated_) throw std::logic_error("ChrPredictor: calibrate before predict");
    const double eps = test_eps(cfg_.seed, draw_index);
    const ConditionalHistogram h = conditional_histogram(x);
    return predict_interval(h, *partition_, cal_, seq_, eps);
}

std::vector<std::pair<double, double>> ChrPredictor::predict_batch(const Matrix& x) const {
    std::vector<std::pair<double, double>> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i), i);
    return out;
}

// ------------------------------ serialization -------------------------------

namespace {

void write_doubles(const std::string& path, const std::vector<double>& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(const std::string& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot read '" + path + "'");
    std::vector<double> v(count);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
        throw SchemaError("payload '" + path + "' shorter than the manifest promises");
    return v;
}

nlohmann::json model_to_manifest(const QuantileModel& model, std::vector<double>& payload) {
    nlohmann::json jm;
    jm["type"] = model.name();
    jm["support"] = {{"lo", model.support().lo}, {"hi", model.support().hi}};
    const std::size_t offset = payload.size();
    if (const auto* knn = dynamic_cast<const KnnQuantileModel*>(&model)) {
        jm["k"] = knn->effective_k();
        jm["rows"] = knn->train_features().rows;
        jm["cols"] = knn->train_features().cols;
        jm["scaler_means"] = knn->standardizer().means();
        jm["scaler_sds"] = knn->standardizer().sds();
        payload.insert(payload.end(), knn->train_features().data.begin(),
                       knn->train_features().data.end());
        payload.insert(payload.end(), knn->train_responses().begin(),
                       knn->train_responses().end());
    } else if (const auto* lin = dynamic_cast<const LinearPinballModel*>(&model)) {
        jm["levels"] = lin->fitted_levels();
        jm["scaler_means"] = lin->standardizer().means();
        jm["scaler_sds"] = lin->standardizer().sds();
        jm["y_mean"] = lin->response_mean();
        jm["y_sd"] = lin->response_sd();
        payload.insert(payload.end(), lin->weights().begin(), lin->weights().end());
    } else if (const auto* orc = dynamic_cast<const OracleQuantileModel*>(&model)) {
        const SyntheticConfig& law = orc->law();
        jm["law"] = {{"flip_prob", law.flip_prob},     {"outlier_prob", law.outlier_prob},
                     {"outlier_lo", law.outlier_lo},   {"outlier_hi", law.outlier_hi},
                     {"scale_base", law.scale_base},   {"scale_slope", law.scale_slope}};
    } else {
        throw SchemaError("save: unknown model type '" + model.name() + "'");
    }
    jm["payload_offset"] = offset;
    jm["payload_doubles"] = payload.size() - offset;
    return jm;
}

std::unique_ptr<QuantileModel> model_from_manifest(const nlohmann::json& jm,
                                                   const std::vector<double>& full_payload) {
    const std::string type = jm["type"].get<std::string>();
    const std::size_t offset = jm["payload_offset"].get<std::size_t>();
    const std::size_t count = jm["payload_doubles"].get<std::size_t>();
    if (offset + count > full_payload.size())
        throw SchemaError("model payload extends past the binary block");
    const std::vector<double> payload(full_payload.begin() + static_cast<std::ptrdiff_t>(offset),
                                      full_payload.begin() +
                                          static_cast<std::ptrdiff_t>(offset + count));

    std::unique_ptr<QuantileModel> model;
    if (type == "knn") {
        const std::size_t rows = jm["rows"].get<std::size_t>();
        const std::size_t cols = jm["cols"].get<std::size_t>();
        if (payload.size() != rows * cols + rows)
            throw SchemaError("knn payload size mismatch");
        Matrix x(rows, cols);
        std::copy(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(rows * cols),
                  x.data.begin());
        std::vector<double> y(payload.begin() + static_cast<std::ptrdiff_t>(rows * cols),
                              payload.end());
        Standardizer s;
        s.restore(jm["scaler_means"].get<std::vector<double>>(),
                  jm["scaler_sds"].get<std::vector<double>>());
        auto knn = std::make_unique<KnnQuantileModel>();
        knn->restore(std::move(x), std::move(y), std::move(s), jm["k"].get<int>());
        model = std::move(knn);
    } else if (type == "linear") {
        Standardizer s;
        s.restore(jm["scaler_means"].get<std::vector<double>>(),
                  jm["scaler_sds"].get<std::vector<double>>());
        auto lin = std::make_unique<LinearPinballModel>();
        lin->restore(jm["levels"].get<std::vector<double>>(), payload, std::move(s),
                     jm["y_mean"].get<double>(), jm["y_sd"].get<double>());
        model = std::move(lin);
    } else if (type == "oracle") {
        SyntheticConfig law;
        law.flip_prob = jm["law"]["flip_prob"].get<double>();
        law.outlier_prob = jm["law"]["outlier_prob"].get<double>();
        law.outlier_lo = jm["law"]["outlier_lo"].get<double>();
        law.outlier_hi = jm["law"]["outlier_hi"].get<double>();
        law.scale_base = jm["law"]["scale_base"].get<double>();
        law.scale_slope = jm["law"]["scale_slope"].get<double>();
        auto orc = std::make_unique<OracleQuantileModel>(law);
        Matrix dummy(1, 1);
        std::vector<double> ydummy{0.0};
        orc->fit(dummy, ydummy);  // marks fitted; support is overwritten below
        model = std::move(orc);
    } else {
        throw SchemaError("unknown model type '" + type + "' in manifest");
    }
    model->set_support(SupportBounds{jm["support"]["lo"].get<double>(),
                                     jm["support"]["hi"].get<double>()});
    return model;
}

void write_manifest(const std::string& prefix, const nlohmann::json& j) {
    std::ofstream out(prefix + ".json");
    if (!out) throw SchemaError("cannot write '" + prefix + ".json'");
    out << j.dump(2) << "\n";
}

nlohmann::json read_manifest(const std::string& prefix, const std::string& kind) {
    std::ifstream in(prefix + ".json");
    if (!in) throw SchemaError("cannot read '" + prefix + ".json'");
    nlohmann::json j;
    in >> j;
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != kSchemaVersion)
        throw SchemaError("unsupported schema version in '" + prefix + ".json'");
    if (j.value("artifact", "") != kind)
        throw SchemaError("'" + prefix + ".json' is not a " + kind + " artifact");
    return j;
}

}  // namespace

std::string sniff_artifact_kind(const std::string& prefix) {
    std::ifstream in(prefix + ".json");
    if (!in) throw SchemaError("cannot read '" + prefix + ".json'");
    nlohmann::json j;
    in >> j;
    return j.value("artifact", "");
}

void ChrPredictor::save(const std::string& prefix) const {
    if (!calibrated_) throw std::logic_error("ChrPredictor: calibrate before save");
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["artifact"] = "chr-predictor";
    j["alpha"] = cfg_.alpha;
    j["bins"] = cfg_.bins;
    j["resolution"] = seq_.resolution;
    j["start_index"] = seq_.start_index;
    j["randomize"] = seq_.randomize;
    j["seed"] = cfg_.seed;
    j["t_hat"] = cal_.t_hat;
    j["n_cal"] = cal_.n_cal;
    j["partition_edges"] = partition_->edges();
    j["feature_names"] = feature_names_;

    std::vector<double> payload;
    j["model"] = model_to_manifest(*model_, payload);
    j["payload_doubles"] = payload.size();
    write_manifest(prefix, j);
    write_doubles(prefix + ".bin", payload);
}

ChrPredictor ChrPredictor::load(const std::string& prefix) {
    const nlohmann::json j = read_manifest(prefix, "chr-predictor");
    const auto payload =
        read_doubles(prefix + ".bin", j["payload_doubles"].get<std::size_t>());
    std::unique_ptr<QuantileModel> model = model_from_manifest(j["model"], payload);

    ChrConfig cfg;
    cfg.alpha = j["alpha"].get<double>();
    cfg.bins = j["bins"].get<int>();
    cfg.resolution = j["resolution"].get<int>();
    cfg.start_index = j["start_index"].get<int>();
    cfg.randomize = j["randomize"].get<bool>();
    cfg.seed = j["seed"].get<std::uint64_t>();

    ChrPredictor pred(std::move(model), cfg);
    pred.partition_ = Partition(j["partition_edges"].get<std::vector<double>>());
    pred.feature_names_ = j["feature_names"].get<std::vector<std::string>>();
    pred.seq_ = SequenceConfig{cfg.resolution, cfg.start_index, cfg.randomize};
    pred.cal_ = CalibrationResult{j["t_hat"].get<int>(), cfg.alpha, j["n_cal"].get<int>()};
    pred.calibrated_ = true;
    return pred;
}

// ---------------------------------- CV+ -------------------------------------

CvPlusPredictor::CvPlusPredictor(const Dataset& train, const ModelConfig& model_cfg,
                                 const SyntheticConfig* law, CvPlusConfig cfg)
    : cfg_(cfg) {
    n_ = train.n();
    const int K = cfg_.folds;
    if (K < 2) throw std::invalid_argument("CvPlusPredictor: need at least 2 folds");
    if (n_ / static_cast<std::size_t>(K) < 2)
        throw FoldTooSmallError("CvPlusPredictor: a fold would hold fewer than 2 samples");

    const int T = cfg_.resolution > 0 ? cfg_.resolution : static_cast<int>(n_);
    seq_ = SequenceConfig::for_alpha(T, cfg_.alpha, cfg_.randomize);
    if (cfg_.start_index >= 0) seq_.start_index = std::min(cfg_.start_index, T);

    const SupportBounds b = support_bounds(train.y);
    partition_ = Partition::equal_width(b.lo, b.hi, cfg_.bins);

    // Shuffled balanced folds; the remainder spreads one sample per fold.
    std::vector<std::size_t> perm(n_);
    std::iota(perm.begin(), perm.end(), 0);
    auto frng = make_rng(derive_seed(cfg_.seed, kFoldStream));
    std::shuffle(perm.begin(), perm.end(), frng);
    std::vector<int> fold_of(n_);
    for (std::size_t r = 0; r < n_; ++r) fold_of[perm[r]] = static_cast<int>(r % static_cast<std::size_t>(K));

    fold_models_.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        std::vector<std::size_t> rows;
        rows.reserve(n_);
        for (std::size_t i = 0; i < n_; ++i)
            if (fold_of[i] != k) rows.push_back(i);
        const Dataset sub = take_rows(train, rows);
        fold_models_[static_cast<std::size_t>(k)] = make_model(model_cfg, law);
        fold_models_[static_cast<std::size_t>(k)]->fit(sub);
    }

    // Per-sample conformity scores under the holding-out fold's model.
    auto erng = make_rng(derive_seed(cfg_.seed, kCalStream));
    fold_scores_.assign(static_cast<std::size_t>(K), {});
    for (std::size_t i = 0; i < n_; ++i) {
        const double eps = uniform01(erng);
        const auto& model = *fold_models_[static_cast<std::size_t>(fold_of[i])];
        const ConditionalHistogram h =
            density_to_histogram(conditional_density(model, train.x.row(i)), *partition_);
        const int score = conformity_score(h, *partition_, train.y[i], seq_, eps);
        fold_scores_[static_cast<std::size_t>(fold_of[i])].push_back(score);
    }
    for (auto& v : fold_scores_) std::sort(v.begin(), v.end());

    const double n = static_cast<double>(n_);
    alpha_n_ = cfg_.alpha * (1.0 + 1.0 / n) - 1.0 / n;
}

std::pair<double, double> CvPlusPredictor::predict(std::span<const double> x,
                                                   std::uint64_t draw_index) const {
    const double eps = test_eps(cfg_.seed, draw_index);
    const int m = partition_->m();
    const std::size_t K = fold_models_.size();

    // Candidate responses are bin midpoints; scores are constant within bins,
    // so this scan is exact at bin granularity.
    std::vector<std::size_t> below(static_cast<std::size_t>(m), 0);
    std::vector<double> mean_entry(static_cast<std::size_t>(m), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const ConditionalHistogram h =
            density_to_histogram(conditional_density(*fold_models_[k], x), *partition_);
        const std::vector<int> entry = bin_entry_levels(h, seq_, eps);
        const auto& sorted = fold_scores_[k];
        for (int j = 0; j < m; ++j) {
            const auto idx = static_cast<std::size_t>(j);
            below[idx] += static_cast<std::size_t>(
                std::lower_bound(sorted.begin(), sorted.end(), entry[idx]) - sorted.begin());
            mean_entry[idx] += entry[idx];
        }
    }

    const double n = static_cast<double>(n_);
    int j_min = -1, j_max = -1;
    for (int j = 0; j < m; ++j) {
        if (static_cast<double>(below[static_cast<std::size_t>(j)]) / n < 1.0 - alpha_n_) {
            if (j_min < 0) j_min = j;
            j_max = j;
        }
    }
    const auto& e = partition_->edges();
    if (j_min < 0) {
        // No bin survives: degenerate point at the most conforming midpoint.
        const auto it = std::min_element(mean_entry.begin(), mean_entry.end());
        const int j = static_cast<int>(it - mean_entry.begin()) + 1;
        const double mid = partition_->bin_midpoint(j);
        return {mid, mid};
    }
    return {e[static_cast<std::size_t>(j_min)], e[static_cast<std::size_t>(j_max) + 1]};
}

std::vector<std::pair<double, double>> CvPlusPredictor::predict_batch(const Matrix& x) const {
    std::vector<std::pair<double, double>> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i), i);
    return out;
}

void CvPlusPredictor::save(const std::string& prefix) const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["artifact"] = "chr-cvplus-predictor";
    j["alpha"] = cfg_.alpha;
    j["folds"] = cfg_.folds;
    j["bins"] = cfg_.bins;
    j["resolution"] = seq_.resolution;
    j["start_index"] = seq_.start_index;
    j["randomize"] = seq_.randomize;
    j["seed"] = cfg_.seed;
    j["n_train"] = n_;
    j["alpha_n"] = alpha_n_;
    j["partition_edges"] = partition_->edges();
    j["fold_scores"] = fold_scores_;

    std::vector<double> payload;
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : fold_models_) models.push_back(model_to_manifest(*m, payload));
    j["fold_models"] = std::move(models);
    j["payload_doubles"] = payload.size();
    write_manifest(prefix, j);
    write_doubles(prefix + ".bin", payload);
}

CvPlusPredictor CvPlusPredictor::load(const std::string& prefix) {
    const nlohmann::json j = read_manifest(prefix, "chr-cvplus-predictor");
    const auto payload =
        read_doubles(prefix + ".bin", j["payload_doubles"].get<std::size_t>());

    CvPlusPredictor pred;
    pred.cfg_.alpha = j["alpha"].get<double>();
    pred.cfg_.folds = j["folds"].get<int>();
    pred.cfg_.bins = j["bins"].get<int>();
    pred.cfg_.resolution = j["resolution"].get<int>();
    pred.cfg_.start_index = j["start_index"].get<int>();
    pred.cfg_.randomize = j["randomize"].get<bool>();
    pred.cfg_.seed = j["seed"].get<std::uint64_t>();
    pred.seq_ = SequenceConfig{pred.cfg_.resolution, pred.cfg_.start_index,
                               pred.cfg_.randomize};
    pred.partition_ = Partition(j["partition_edges"].get<std::vector<double>>());
    pred.n_ = j["n_train"].get<std::size_t>();
    pred.alpha_n_ = j["alpha_n"].get<double>();
    pred.fold_scores_ = j["fold_scores"].get<std::vector<std::vector<int>>>();
    for (const auto& jm : j["fold_models"])
        pred.fold_models_.push_back(model_from_manifest(jm, payload));
    if (pred.fold_models_.size() != pred.fold_scores_.size())
        throw SchemaError("fold model/score count mismatch");
    return pred;
}

}  // namespace chr
