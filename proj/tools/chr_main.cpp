// Command-line front end: fit/predict/benchmark/selftest.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chr/rng.hpp"

#include "chr/experiments.hpp"
#include "chr/predictor.hpp"
#include "chr/selfcheck.hpp"

namespace {

using chr::ExperimentConfig;
using chr::SyntheticConfig;

// Flat key=value config file; '#' starts a comment. Flags override file
// values, so the file only seeds defaults.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

struct DataSpec {
    bool synthetic = false;
    SyntheticConfig law;
    std::string csv_path;
};

// "synthetic:flip=0.2,n=4000,seed=3,skew=2.0" or a CSV path.
DataSpec parse_data_spec(const std::string& spec) {
    DataSpec out;
    if (spec.rfind("synthetic", 0) != 0) {
        out.csv_path = spec;
        return out;
    }
    out.synthetic = true;
    const auto colon = spec.find(':');
    if (colon == std::string::npos) return out;
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("bad synthetic option '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        if (key == "flip")
            out.law.flip_prob = std::stod(val);
        else if (key == "skew")
            out.law.flip_prob = chr::flip_prob_for_skewness(out.law, std::stod(val));
        else if (key == "n")
            out.law.n_samples = std::stoul(val);
        else if (key == "seed")
            out.law.seed = std::stoull(val);
        else if (key == "outlier_prob")
            out.law.outlier_prob = std::stod(val);
        else if (key == "scale_base")
            out.law.scale_base = std::stod(val);
        else if (key == "scale_slope")
            out.law.scale_slope = std::stod(val);
        else
            throw std::runtime_error("unknown synthetic option '" + key + "'");
    }
    return out;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("CHR_SEED")) return std::stoull(env);
    return 1;
}

int run_selftest() {
    using chr::selfcheck::CheckResult;
    const std::vector<CheckResult> results = {
        chr::selfcheck::kernel_vs_bruteforce(300, 12345),
        chr::selfcheck::nesting_fuzz(2000, 23456),
        chr::selfcheck::density_fuzz(2000, 34567),
        chr::selfcheck::trim_mean_mass(20000, 45678),
    };
    int failures = 0;
    for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << " ("
                  << r.seconds << " s)\n";
        if (!r.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal histogram regression: calibrated prediction intervals from "
                 "black-box conditional quantile models"};
    app.require_subcommand(1);
    app.fallthrough();  // parent options (--config) may follow the subcommand

    std::string config_path;
    app.add_option("--config", config_path, "flat key=value config file");

    // Shared options, pre-seeded from the config file in a pre-parse pass.
    std::string data_spec = "synthetic";
    std::string target = "y";
    std::string model_type = "knn";
    std::string method = "chr";
    std::vector<std::string> methods;
    double alpha = 0.1;
    int bins = 100;
    bool config_sets_bins = false;
    int resolution = 0;
    int t_bar = -1;
    bool no_randomize = false;
    std::uint64_t seed = default_seed();
    std::size_t n_train = 1000, n_cal = 1000, n_test = 2000;
    double train_frac = 0.0, cal_frac = 0.0;
    int reps = 1;
    int folds = 10;
    int knn_k = 0;
    int threads = 0;
    std::string out_prefix = "chr_model";
    std::string out_csv = "benchmark.csv";
    std::string out_json = "benchmark.json";
    std::string out_intervals = "intervals.csv";
    std::string model_path;

    // Pre-scan for --config so file values become defaults before real parse.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            for (const auto& [k, v] : read_config_file(argv[i + 1])) {
                if (k == "data") data_spec = v;
                else if (k == "target") target = v;
                else if (k == "model") model_type = v;
                else if (k == "method") method = v;
                else if (k == "alpha") alpha = std::stod(v);
                else if (k == "bins") { bins = std::stoi(v); config_sets_bins = true; }
                else if (k == "resolution") resolution = std::stoi(v);
                else if (k == "t_bar") t_bar = std::stoi(v);
                else if (k == "randomize") no_randomize = (v == "false" || v == "0");
                else if (k == "seed") seed = std::stoull(v);
                else if (k == "n_train") n_train = std::stoul(v);
                else if (k == "n_cal") n_cal = std::stoul(v);
                else if (k == "n_test") n_test = std::stoul(v);
                else if (k == "train_frac") train_frac = std::stod(v);
                else if (k == "cal_frac") cal_frac = std::stod(v);
                else if (k == "reps") reps = std::stoi(v);
                else if (k == "folds") folds = std::stoi(v);
                else if (k == "knn_k") knn_k = std::stoi(v);
                else if (k == "threads") threads = std::stoi(v);
                else throw std::runtime_error("unknown config key '" + k + "'");
            }
        }
    }

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--data", data_spec,
                        "CSV path or synthetic:k=v,... (keys: flip, skew, n, seed, "
                        "outlier_prob, scale_base, scale_slope)");
        cmd->add_option("--target", target, "target column for CSV data");
        cmd->add_option("--model", model_type, "knn | linear | oracle");
        cmd->add_option("--alpha", alpha, "miscoverage level");
        cmd->add_option("--bins", bins, "partition bin count");
        cmd->add_option("--resolution", resolution, "score resolution T (0: calibration size)");
        cmd->add_option("--t-bar", t_bar, "starting index (-1: from alpha)");
        cmd->add_flag("--no-randomize", no_randomize, "skip randomized trimming");
        cmd->add_option("--seed", seed, "root seed (env CHR_SEED sets the default)");
        cmd->add_option("--knn-k", knn_k, "k-NN neighbor count (0: auto)");
        cmd->add_option("--threads", threads, "worker threads (0: hardware)");
    };

    auto* fit_cmd = app.add_subcommand("fit", "fit + calibrate a predictor and persist it");
    add_common(fit_cmd);
    fit_cmd->add_option("--method", method, "chr | chr-cvplus");
    fit_cmd->add_option("--folds", folds, "CV+ fold count");
    fit_cmd->add_option("--n-train", n_train, "training rows (synthetic data)");
    fit_cmd->add_option("--n-cal", n_cal, "calibration rows (synthetic data)");
    fit_cmd->add_option("--train-frac", train_frac, "training fraction for CSV data");
    fit_cmd->add_option("--cal-frac", cal_frac, "calibration fraction for CSV data");
    fit_cmd->add_option("--out", out_prefix, "artifact prefix (writes .json and .bin)");

    auto* predict_cmd = app.add_subcommand("predict", "emit intervals for new feature rows");
    predict_cmd->add_option("--model-artifact", model_path, "artifact prefix from fit")
        ->required();
    predict_cmd->add_option("--data", data_spec, "feature CSV (header row, numeric columns)");
    predict_cmd->add_option("--out", out_intervals, "output CSV path");
    predict_cmd->add_option("--bins", bins, "expected bin count (guard against stale configs)");

    auto* bench_cmd = app.add_subcommand("benchmark", "run repeated experiments, write CSV/JSON");
    add_common(bench_cmd);
    bench_cmd->add_option("--method", methods, "chr | chr-cvplus | cqr | dcp | distsplit | dcp-cqr (repeatable)");
    bench_cmd->add_option("--n-train", n_train, "training rows per repetition");
    bench_cmd->add_option("--n-cal", n_cal, "calibration rows per repetition");
    bench_cmd->add_option("--n-test", n_test, "test rows per repetition");
    bench_cmd->add_option("--reps", reps, "independent repetitions");
    bench_cmd->add_option("--folds", folds, "CV+ fold count");
    bench_cmd->add_option("--out-csv", out_csv, "per-repetition CSV output");
    bench_cmd->add_option("--out-json", out_json, "aggregate JSON output");

    auto* selftest_cmd =
        app.add_subcommand("selftest", "run the brute-force differential suites");

    CLI11_PARSE(app, argc, argv);

    try {
        if (selftest_cmd->parsed()) return run_selftest();

        if (fit_cmd->parsed()) {
            const DataSpec ds = parse_data_spec(data_spec);
            if (!ds.synthetic && !fit_cmd->count("--bins") && !config_sets_bins)
                bins = 1000;  // coarse default for synthetic, fine for real data
            chr::Dataset train, cal;
            const SyntheticConfig* law = ds.synthetic ? &ds.law : nullptr;
            if (ds.synthetic) {
                SyntheticConfig gen = ds.law;
                gen.n_samples = n_train + n_cal;
                gen.seed = seed;
                const chr::Dataset all = chr::generate_synthetic(gen);
                std::vector<std::size_t> idx(all.n());
                for (std::size_t i = 0; i < all.n(); ++i) idx[i] = i;
                train = chr::take_rows(all, {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train)});
                cal = chr::take_rows(all, {idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end()});
            } else {
                const chr::Dataset all = chr::read_csv(ds.csv_path, target);
                const double tf = train_frac > 0.0 ? train_frac : 0.5;
                const double cf = cal_frac > 0.0 ? cal_frac : 1.0 - tf;
                if (tf + cf > 1.0 + 1e-9)
                    throw std::runtime_error("train_frac + cal_frac exceed 1");
                const auto nt = static_cast<std::size_t>(tf * static_cast<double>(all.n()));
                const auto nc = static_cast<std::size_t>(cf * static_cast<double>(all.n()));
                std::vector<std::size_t> perm(all.n());
                for (std::size_t i = 0; i < all.n(); ++i) perm[i] = i;
                auto rng = chr::make_rng(chr::derive_seed(seed, 0xda7aULL));
                std::shuffle(perm.begin(), perm.end(), rng);
                train = chr::take_rows(all, {perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(nt)});
                cal = chr::take_rows(all, {perm.begin() + static_cast<std::ptrdiff_t>(nt),
                                           perm.begin() + static_cast<std::ptrdiff_t>(nt + nc)});
            }
            chr::ModelConfig mc;
            mc.type = model_type;
            mc.knn_k = knn_k;
            if (method == "chr-cvplus") {
                // CV+ uses every supplied row as one training pool.
                chr::Dataset pool = train;
                pool.x = chr::Matrix(train.n() + cal.n(), train.p());
                pool.y.resize(train.n() + cal.n());
                for (std::size_t i = 0; i < train.n(); ++i) {
                    std::copy(train.x.row(i).begin(), train.x.row(i).end(),
                              pool.x.row(i).begin());
                    pool.y[i] = train.y[i];
                }
                for (std::size_t i = 0; i < cal.n(); ++i) {
                    std::copy(cal.x.row(i).begin(), cal.x.row(i).end(),
                              pool.x.row(train.n() + i).begin());
                    pool.y[train.n() + i] = cal.y[i];
                }
                chr::CvPlusConfig cc{alpha, folds, bins, resolution, t_bar, !no_randomize,
                                     seed};
                const chr::CvPlusPredictor pred(pool, mc, law, cc);
                pred.save(out_prefix);
                std::cout << "saved " << out_prefix << ".json / .bin (cv+, K=" << folds
                          << ")\n";
                return 0;
            }
            if (method != "chr")
                throw std::runtime_error("fit persists 'chr' or 'chr-cvplus' predictors");
            chr::ChrConfig cc{alpha, bins, resolution, t_bar, !no_randomize, seed};
            chr::ChrPredictor pred(chr::make_model(mc, law), cc);
            pred.fit(train);
            if (const auto* lin =
                    dynamic_cast<const chr::LinearPinballModel*>(&pred.model());
                lin && !lin->converged()) {
                std::cerr << "warning: pinball optimizer still improving at the iteration "
                             "budget; using the best iterate\n";
            }
            pred.calibrate(cal);
            pred.save(out_prefix);
            std::cout << "saved " << out_prefix << ".json / .bin (t_hat="
                      << pred.calibration().t_hat << ", T="
                      << pred.sequence_config().resolution << ")\n";
            return 0;
        }

        if (predict_cmd->parsed()) {
            std::vector<std::string> names;
            const chr::Matrix x = chr::read_csv_features(data_spec, &names);
            std::vector<std::pair<double, double>> intervals;
            const std::string kind = chr::sniff_artifact_kind(model_path);
            if (kind == "chr-cvplus-predictor") {
                const chr::CvPlusPredictor pred = chr::CvPlusPredictor::load(model_path);
                if (predict_cmd->count("--bins") && bins != pred.partition().m())
                    throw chr::SchemaError("artifact was fit with " +
                                           std::to_string(pred.partition().m()) +
                                           " bins, config asks for " + std::to_string(bins));
                intervals = pred.predict_batch(x);
            } else {
                const chr::ChrPredictor pred = chr::ChrPredictor::load(model_path);
                if (predict_cmd->count("--bins") && bins != pred.config().bins)
                    throw chr::SchemaError("artifact was fit with " +
                                           std::to_string(pred.config().bins) +
                                           " bins, config asks for " + std::to_string(bins));
                if (!pred.feature_names().empty() && names != pred.feature_names())
                    throw chr::SchemaError("feature columns do not match the fitted artifact");
                intervals = pred.predict_batch(x);
            }
            chr::write_intervals_csv(out_intervals, intervals);
            std::cout << "wrote " << intervals.size() << " intervals to " << out_intervals
                      << "\n";
            return 0;
        }

        if (bench_cmd->parsed()) {
            if (methods.empty()) methods.push_back(method);
            const DataSpec ds = parse_data_spec(data_spec);
            if (!ds.synthetic && !bench_cmd->count("--bins") && !config_sets_bins) bins = 1000;
            std::vector<chr::EvaluationReport> reports;
            for (const std::string& mth : methods) {
                ExperimentConfig ec;
                ec.method = mth;
                ec.model.type = model_type;
                ec.model.knn_k = knn_k;
                if (ds.synthetic) {
                    ec.data = ds.law;
                } else {
                    ec.csv_path = ds.csv_path;
                    ec.target_column = target;
                }
                ec.alpha = alpha;
                ec.bins = bins;
                ec.resolution = resolution;
                ec.start_index = t_bar;
                ec.randomize = !no_randomize;
                ec.n_train = n_train;
                ec.n_cal = n_cal;
                ec.n_test = n_test;
                ec.repetitions = reps;
                ec.folds = folds;
                ec.seed = seed;
                ec.threads = threads;
                reports.push_back(chr::run_experiment(ec));
                const auto& r = reports.back();
                std::cout << mth << ": coverage " << r.mean_coverage << " (se "
                          << r.se_coverage << "), width " << r.mean_width << " (se "
                          << r.se_width << "), wsc " << r.mean_wsc << "\n";
            }
            chr::write_report_csv(out_csv, reports);
            chr::write_report_json(out_json, reports);
            std::cout << "wrote " << out_csv << " and " << out_json << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
