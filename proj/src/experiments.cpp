#include "chr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "chr/baselines.hpp"
#include "chr/predictor.hpp"
#include "chr/rng.hpp"

namespace chr {

double marginal_coverage(const std::vector<std::pair<double, double>>& intervals,
                         const std::vector<double>& y) {
    if (intervals.size() != y.size())
        throw std::invalid_argument("marginal_coverage: size mismatch");
    if (y.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (intervals[i].first <= y[i] && y[i] <= intervals[i].second) ++hit;
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

double worst_slab_coverage(const Matrix& x, const std::vector<std::uint8_t>& covered,
                           const WscConfig& cfg) {
    const std::size_t n = x.rows;
    if (covered.size() != n) throw std::invalid_argument("worst_slab_coverage: size mismatch");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
        throw std::invalid_argument("worst_slab_coverage: delta outside (0, 1)");
    const auto min_pts = static_cast<std::size_t>(std::ceil(1.0 / cfg.delta));
    if (n < min_pts)
        throw TooFewTestPointsError("worst_slab_coverage: need at least 1/delta points");

    auto rng = make_rng(cfg.seed);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t n_sel = std::max<std::size_t>(n / 4, min_pts);

    std::vector<std::vector<double>> dirs;
    if (x.cols == 1) {
        dirs = {{1.0}, {-1.0}};  // only two distinct unit directions in 1-D
    } else {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int d = 0; d < cfg.n_directions; ++d) {
            std::vector<double> v(x.cols);
            double norm = 0.0;
            for (double& vi : v) {
                vi = gauss(rng);
                norm += vi * vi;
            }
            norm = std::sqrt(norm);
            if (norm <= 0.0) continue;
            for (double& vi : v) vi /= norm;
            dirs.push_back(std::move(v));
        }
    }

    auto project = [&x](const std::vector<double>& v, std::size_t row) {
        double t = 0.0;
        const auto r = x.row(row);
        for (std::size_t j = 0; j < v.size(); ++j) t += v[j] * r[j];
        return t;
    };

    double best_cov = 2.0;
    std::vector<double> best_dir;
    double best_a = 0.0, best_b = 0.0;
    const auto w_min = static_cast<std::size_t>(
        std::ceil(cfg.delta * static_cast<double>(n_sel) - 1e-9));

    std::vector<std::pair<double, std::uint8_t>> pts(n_sel);
    for (const auto& v : dirs) {
        for (std::size_t i = 0; i < n_sel; ++i)
            pts[i] = {project(v, perm[i]), covered[perm[i]]};
        std::sort(pts.begin(), pts.end());
        std::vector<std::size_t> pref(n_sel + 1, 0);
        for (std::size_t i = 0; i < n_sel; ++i) pref[i + 1] = pref[i] + pts[i].second;
        for (std::size_t i = 0; i < n_sel; ++i) {
            for (std::size_t j = i + std::max<std::size_t>(w_min, 1) - 1; j < n_sel; ++j) {
                const double cov = static_cast<double>(pref[j + 1] - pref[i]) /
                                   static_cast<double>(j - i + 1);
                if (cov < best_cov) {
                    best_cov = cov;
                    best_dir = v;
                    best_a = pts[i].first;
                    best_b = pts[j].first;
                }
            }
        }
    }

    // Selection-bias control: report the chosen slab's coverage on holdout.
    std::size_t in_slab = 0, hit = 0, hold_hit = 0, hold_n = 0;
    for (std::size_t i = n_sel; i < n; ++i) {
        const std::size_t row = perm[i];
        ++hold_n;
        hold_hit += covered[row];
        const double t = project(best_dir, row);
        if (t >= best_a && t <= best_b) {
            ++in_slab;
            hit += covered[row];
        }
    }
    if (in_slab == 0)
        return hold_n ? static_cast<double>(hold_hit) / static_cast<double>(hold_n) : best_cov;
    return static_cast<double>(hit) / static_cast<double>(in_slab);
}

void EvaluationReport::aggregate() {
    std::sort(records.begin(), records.end(),
              [](const RepetitionRecord& a, const RepetitionRecord& b) { return a.rep < b.rep; });
    auto reduce = [this](auto field, double& mean, double& se) {
        const std::size_t r = records.size();
        if (r == 0) {
            mean = se = 0.0;
            return;
        }
        double s = 0.0;
        for (const auto& rec : records) s += rec.*field;
        mean = s / static_cast<double>(r);
        if (r < 2) {
            se = 0.0;
            return;
        }
        double v = 0.0;
        for (const auto& rec : records) v += (rec.*field - mean) * (rec.*field - mean);
        se = std::sqrt(v / static_cast<double>(r - 1)) / std::sqrt(static_cast<double>(r));
    };
    reduce(&RepetitionRecord::coverage, mean_coverage, se_coverage);
    reduce(&RepetitionRecord::wsc, mean_wsc, se_wsc);
    reduce(&RepetitionRecord::mean_width, mean_width, se_width);
}

namespace {

struct SplitData {
    Dataset train, cal, test;
};

SplitData make_data(const ExperimentConfig& cfg, const Dataset* csv, std::uint64_t rep_seed) {
    SplitData out;
    const std::size_t need = cfg.n_train + cfg.n_cal + cfg.n_test;
    if (csv) {
        std::vector<std::size_t> perm(csv->n());
        std::iota(perm.begin(), perm.end(), 0);
        auto rng = make_rng(derive_seed(rep_seed, 0x5917ULL));
        std::shuffle(perm.begin(), perm.end(), rng);
        if (csv->n() < need)
            throw std::invalid_argument("dataset smaller than n_train + n_cal + n_test");
        std::vector<std::size_t> a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cfg.n_train));
        std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(cfg.n_train),
                                   perm.begin() + static_cast<std::ptrdiff_t>(cfg.n_train + cfg.n_cal));
        std::vector<std::size_t> c(perm.begin() + static_cast<std::ptrdiff_t>(cfg.n_train + cfg.n_cal),
                                   perm.begin() + static_cast<std::ptrdiff_t>(need));
        out.train = take_rows(*csv, a);
        out.cal = take_rows(*csv, b);
        out.test = take_rows(*csv, c);
        return out;
    }
    SyntheticConfig gen = cfg.data;
    gen.n_samples = cfg.n_train + cfg.n_cal;
    gen.seed = derive_seed(rep_seed, 0x1eafULL);
    const Dataset traincal = generate_synthetic(gen);
    std::vector<std::size_t> idx(traincal.n());
    std::iota(idx.begin(), idx.end(), 0);
    out.train =
        take_rows(traincal, {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cfg.n_train)});
    out.cal = take_rows(traincal, {idx.begin() + static_cast<std::ptrdiff_t>(cfg.n_train),
                                   idx.end()});
    // Separate stream for the test set, so runs that differ only in the
    // training sizes still score against identical test draws.
    gen.n_samples = cfg.n_test;
    gen.seed = derive_seed(rep_seed, 0x7e57ULL);
    out.test = generate_synthetic(gen);
    return out;
}

RepetitionRecord run_one(const ExperimentConfig& cfg, const Dataset* csv, int rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    const SplitData data = make_data(cfg, csv, rep_seed);
    const SyntheticConfig* law = csv ? nullptr : &cfg.data;

    std::vector<std::pair<double, double>> intervals;
    if (cfg.method == "chr") {
        ChrConfig pc{cfg.alpha, cfg.bins, cfg.resolution, cfg.start_index, cfg.randomize,
                     rep_seed};
        ChrPredictor pred(make_model(cfg.model, law), pc);
        pred.fit(data.train);
        pred.calibrate(data.cal);
        intervals = pred.predict_batch(data.test.x);
    } else if (cfg.method == "chr-cvplus") {
        // Algorithm uses all non-test data as one training pool.
        std::vector<std::size_t> all(data.train.n() + data.cal.n());
        std::iota(all.begin(), all.end(), 0);
        Dataset pool;
        pool.feature_names = data.train.feature_names;
        pool.x = Matrix(all.size(), data.train.p());
        pool.y.resize(all.size());
        for (std::size_t i = 0; i < data.train.n(); ++i) {
            std::copy(data.train.x.row(i).begin(), data.train.x.row(i).end(),
                      pool.x.row(i).begin());
            pool.y[i] = data.train.y[i];
        }
        for (std::size_t i = 0; i < data.cal.n(); ++i) {
            std::copy(data.cal.x.row(i).begin(), data.cal.x.row(i).end(),
                      pool.x.row(data.train.n() + i).begin());
            pool.y[data.train.n() + i] = data.cal.y[i];
        }
        CvPlusConfig cc{cfg.alpha, cfg.folds,     cfg.bins, cfg.resolution,
                        cfg.start_index, cfg.randomize, rep_seed};
        CvPlusPredictor pred(pool, cfg.model, law, cc);
        intervals = pred.predict_batch(data.test.x);
    } else {
        auto model = make_model(cfg.model, law);
        model->fit(data.train);
        BaselineResult res;
        if (cfg.method == "cqr")
            res = cqr(*model, data.cal, data.test.x, cfg.alpha);
        else if (cfg.method == "dcp")
            res = dcp(*model, data.cal, data.test.x, cfg.alpha);
        else if (cfg.method == "distsplit")
            res = distsplit(*model, data.cal, data.test.x, cfg.alpha);
        else if (cfg.method == "dcp-cqr")
            res = dcp_cqr(*model, data.cal, data.test.x, cfg.alpha);
        else
            throw std::invalid_argument("unknown method '" + cfg.method + "'");
        intervals = std::move(res.intervals);
    }

    RepetitionRecord rec;
    rec.rep = rep;
    rec.seed = rep_seed;
    rec.coverage = marginal_coverage(intervals, data.test.y);
    double wsum = 0.0;
    for (const auto& [lo, hi] : intervals) wsum += hi - lo;
    rec.mean_width = intervals.empty() ? 0.0 : wsum / static_cast<double>(intervals.size());
    if (cfg.compute_wsc) {
        std::vector<std::uint8_t> flags(data.test.n());
        for (std::size_t i = 0; i < data.test.n(); ++i)
            flags[i] = intervals[i].first <= data.test.y[i] &&
                       data.test.y[i] <= intervals[i].second;
        WscConfig wc = cfg.wsc;
        wc.seed = derive_seed(rep_seed, 0x75c5ULL);
        rec.wsc = worst_slab_coverage(data.test.x, flags, wc);
    }
    return rec;
}

}  // namespace

EvaluationReport run_experiment(const ExperimentConfig& cfg) {
    EvaluationReport report;
    report.config = cfg;
    report.records.resize(static_cast<std::size_t>(cfg.repetitions));

    Dataset csv_data;
    const Dataset* csv = nullptr;
    if (!cfg.csv_path.empty()) {
        csv_data = read_csv(cfg.csv_path, cfg.target_column);
        csv = &csv_data;
    }

    unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(cfg.repetitions));
    if (workers <= 1) {
        for (int rep = 0; rep < cfg.repetitions; ++rep)
            report.records[static_cast<std::size_t>(rep)] = run_one(cfg, csv, rep);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        std::exception_ptr error;
        std::mutex error_mu;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const int rep = next.fetch_add(1);
                    if (rep >= cfg.repetitions) return;
                    try {
                        report.records[static_cast<std::size_t>(rep)] = run_one(cfg, csv, rep);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mu);
                        if (!error) error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }
    report.aggregate();
    return report;
}

namespace {

nlohmann::json config_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["method"] = c.method;
    j["model"] = c.model.type;
    j["alpha"] = c.alpha;
    j["bins"] = c.bins;
    j["resolution"] = c.resolution;
    j["start_index"] = c.start_index;
    j["randomize"] = c.randomize;
    j["n_train"] = c.n_train;
    j["n_cal"] = c.n_cal;
    j["n_test"] = c.n_test;
    j["repetitions"] = c.repetitions;
    j["folds"] = c.folds;
    j["seed"] = c.seed;
    if (c.csv_path.empty()) {
        j["data"] = {{"source", "synthetic"},
                     {"flip_prob", c.data.flip_prob},
                     {"outlier_prob", c.data.outlier_prob},
                     {"outlier_lo", c.data.outlier_lo},
                     {"outlier_hi", c.data.outlier_hi},
                     {"scale_base", c.data.scale_base},
                     {"scale_slope", c.data.scale_slope}};
    } else {
        j["data"] = {{"source", "csv"}, {"path", c.csv_path}, {"target", c.target_column}};
    }
    j["wsc"] = {{"delta", c.wsc.delta}, {"n_directions", c.wsc.n_directions}};
    return j;
}

}  // namespace

void write_report_csv(const std::string& path, const std::vector<EvaluationReport>& reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "rep,method,model,alpha,bins,n_train,n_cal,n_test,flip_prob,seed,"
           "coverage,wsc,mean_width\n";
    out.precision(12);
    for (const auto& r : reports) {
        for (const auto& rec : r.records) {
            out << rec.rep << ',' << r.config.method << ',' << r.config.model.type << ','
                << r.config.alpha << ',' << r.config.bins << ',' << r.config.n_train << ','
                << r.config.n_cal << ',' << r.config.n_test << ','
                << (r.config.csv_path.empty() ? r.config.data.flip_prob : 0.0) << ','
                << rec.seed << ',' << rec.coverage << ',' << rec.wsc << ',' << rec.mean_width
                << '\n';
        }
    }
}

void write_report_json(const std::string& path, const std::vector<EvaluationReport>& reports) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json j;
        j["config"] = config_json(r.config);
        j["mean_coverage"] = r.mean_coverage;
        j["se_coverage"] = r.se_coverage;
        j["mean_wsc"] = r.mean_wsc;
        j["se_wsc"] = r.se_wsc;
        j["mean_width"] = r.mean_width;
        j["se_width"] = r.se_width;
        out.push_back(std::move(j));
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << out.dump(2) << "\n";
}

}  // namespace chr
