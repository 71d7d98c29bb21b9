// treetune command-line interface.
//
// Exit codes: 0 success, 1 usage error (bad flag or parameter value),
// 2 data error (unreadable or unsuitable input), 3 internal error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "treetune/bench.hpp"
#include "treetune/error.hpp"
#include "treetune/metalearn.hpp"
#include "treetune/rng.hpp"
#include "treetune/util.hpp"

namespace fs = std::filesystem;
using namespace treetune;

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

struct Common {
    std::uint64_t seed = kDefaultSeed;
    std::size_t threads = 1;
    std::string out_dir = "treetune-out";
};

/// Collects what a run read and wrote; written last as run_manifest.json.
/// The thread count is left out on purpose: outputs do not depend on it.
class Run {
public:
    Run(std::string command, const Common& common) : command_(std::move(command)), common_(common) {
        manifest_["tool"] = "treetune";
        manifest_["version"] = kVersion;
        manifest_["command"] = command_;
        manifest_["seed"] = common_.seed;
        manifest_["settings"] = json::object();
        manifest_["inputs"] = json::array();
    }

    void setting(const std::string& key, json value) { manifest_["settings"][key] = std::move(value); }

    void input(const std::string& path, const Dataset* d = nullptr) {
        json in{{"path", path}};
        if (d) {
            in["dataset"] = d->name();
            in["rows"] = d->n();
            in["features"] = d->p();
            in["fingerprint"] = hex64(fingerprint(*d));
        } else {
            in["fnv1a64"] = hex64(fnv1a64(read_text_file(path)));
        }
        manifest_["inputs"].push_back(std::move(in));
    }

    fs::path path(const std::string& name) const { return fs::path(common_.out_dir) / name; }

    void write(const std::string& name, const std::string& body) {
        write_text_file(path(name), body);
        outputs_.push_back(name);
    }

    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    void mark_written(const std::string& name) { outputs_.push_back(name); }

    void finish() {
        std::sort(outputs_.begin(), outputs_.end());
        manifest_["outputs"] = outputs_;
        write_text_file(path("run_manifest.json"), manifest_.dump(2) + "\n");
        std::cout << "wrote " << outputs_.size() + 1 << " file(s) to " << common_.out_dir << "\n";
    }

private:
    std::string command_;
    const Common& common_;
    json manifest_;
    std::vector<std::string> outputs_;
};

Dataset load_dense(const std::string& path, std::size_t response_col) {
    Dataset d = load_csv(path, response_col);
    if (!d.is_dense())
        throw DataError("'" + path + "' has missing cells; run `treetune clean` on it first");
    return d;
}

std::vector<Dataset> load_many(const std::vector<std::string>& paths, std::size_t response_col, Run& run) {
    std::vector<Dataset> out;
    for (const auto& p : paths) {
        out.push_back(load_dense(p, response_col));
        run.input(p, &out.back());
    }
    return out;
}

json read_json(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
}

std::string summary(const ScoreReport& s) {
    return "nse=" + format_double(s.nse) + " kge=" + format_double(s.kge);
}

/// Shared option registration.
void add_metric(CLI::App* cmd, std::string& metric) {
    cmd->add_option("--metric", metric, "Score to optimize or report: nse or kge")
        ->check(CLI::IsMember({"nse", "kge"}))
        ->capture_default_str();
}

void add_algo(CLI::App* cmd, std::string& algo) {
    cmd->add_option("--algo", algo, "Learning algorithm: rf or gbt")
        ->check(CLI::IsMember({"rf", "gbt"}))
        ->capture_default_str();
}

void add_response_col(CLI::App* cmd, std::size_t& col) {
    cmd->add_option("--response-col", col, "Zero-based index of the response column")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"treetune: tuned random forests and gradient boosted trees for tabular regression"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));

    Common common;
    app.add_option("--seed", common.seed, "Master random seed")->capture_default_str();
    app.add_option("--threads", common.threads, "Worker threads (results do not depend on it)")
        ->envname("TREETUNE_THREADS")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1024}))
        ->capture_default_str();
    app.add_option("--out-dir", common.out_dir, "Directory for output files")
        ->envname("TREETUNE_OUT_DIR")
        ->capture_default_str();

    // clean
    auto* clean_cmd = app.add_subcommand("clean", "Drop missing responses, filter sparse columns, impute medians");
    std::string clean_input;
    std::size_t clean_col = 0;
    double clean_threshold = 0.0;
    clean_cmd->add_option("input", clean_input, "Raw CSV file")->required()->check(CLI::ExistingFile);
    add_response_col(clean_cmd, clean_col);
    clean_cmd->add_option("--threshold", clean_threshold,
                          "Single column missingness threshold in (0, 1]; omit for the 50%/10% variants");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Cross-validate one configuration and score it on a held-out split");
    std::string eval_input, eval_algo = "rf", eval_strategy = "default", eval_metric = "kge", eval_meta;
    std::size_t eval_col = 0, eval_folds = 10, eval_iters = 100, eval_pool = 1000;
    double eval_test = 0.2;
    eval_cmd->add_option("input", eval_input, "Cleaned CSV file")->required()->check(CLI::ExistingFile);
    add_algo(eval_cmd, eval_algo);
    eval_cmd->add_option("--strategy", eval_strategy, "default, opt_default, random or meta")
        ->check(CLI::IsMember({"default", "opt_default", "random", "meta"}))
        ->capture_default_str();
    add_metric(eval_cmd, eval_metric);
    add_response_col(eval_cmd, eval_col);
    eval_cmd->add_option("--folds", eval_folds, "Cross-validation folds")->capture_default_str();
    eval_cmd->add_option("--test-fraction", eval_test, "Held-out test fraction")->capture_default_str();
    eval_cmd->add_option("--iters", eval_iters, "Random-search trials (strategy random)")->capture_default_str();
    eval_cmd->add_option("--meta", eval_meta, "Meta-model JSON (strategy meta)")->check(CLI::ExistingFile);
    eval_cmd->add_option("--pool", eval_pool, "Random candidates scored by the meta-model")->capture_default_str();

    // search
    auto* search_cmd = app.add_subcommand("search", "Random hyperparameter search with k-fold cross-validation");
    std::string search_input, search_algo = "rf", search_metric = "kge";
    std::size_t search_col = 0, search_iters = 100, search_folds = 10;
    bool search_wall = false;
    search_cmd->add_option("input", search_input, "Cleaned CSV file")->required()->check(CLI::ExistingFile);
    add_algo(search_cmd, search_algo);
    add_metric(search_cmd, search_metric);
    add_response_col(search_cmd, search_col);
    search_cmd->add_option("--iters", search_iters, "Random-search trials")->capture_default_str();
    search_cmd->add_option("--folds", search_folds, "Cross-validation folds")->capture_default_str();
    search_cmd->add_flag("--wall-time", search_wall, "Include per-trial wall time in the log (not reproducible)");

    // build-metadb
    auto* build_cmd = app.add_subcommand("build-metadb", "Run default, optimal default and random trials per dataset");
    std::vector<std::string> build_inputs;
    std::size_t build_col = 0, build_iters = 100;
    double build_test = 0.2;
    std::string build_algo = "both";
    build_cmd->add_option("inputs", build_inputs, "Cleaned CSV files (at least two)")
        ->required()
        ->check(CLI::ExistingFile);
    add_response_col(build_cmd, build_col);
    build_cmd->add_option("--iters", build_iters, "Random trials per dataset and algorithm")->capture_default_str();
    build_cmd->add_option("--test-fraction", build_test, "Held-out test fraction")->capture_default_str();
    build_cmd->add_option("--algo", build_algo, "rf, gbt or both")
        ->check(CLI::IsMember({"rf", "gbt", "both"}))
        ->capture_default_str();

    // train-meta
    auto* train_cmd = app.add_subcommand("train-meta", "Fit a meta-model on a meta-database");
    std::string train_db, train_algo = "rf", train_metric = "kge";
    bool train_no_meta = false;
    train_cmd->add_option("db", train_db, "Meta-database NDJSON from build-metadb")->required()->check(CLI::ExistingFile);
    add_algo(train_cmd, train_algo);
    add_metric(train_cmd, train_metric);
    train_cmd->add_flag("--no-metadata", train_no_meta, "Use hyperparameter columns only");

    // recommend
    auto* rec_cmd = app.add_subcommand("recommend", "Pick the candidate configuration the meta-model rates best");
    std::string rec_input, rec_meta;
    std::size_t rec_col = 0, rec_pool = 1000;
    rec_cmd->add_option("input", rec_input, "Cleaned CSV file")->required()->check(CLI::ExistingFile);
    rec_cmd->add_option("--meta", rec_meta, "Meta-model JSON")->required()->check(CLI::ExistingFile);
    add_response_col(rec_cmd, rec_col);
    rec_cmd->add_option("--pool", rec_pool, "Random candidates besides the two defaults")->capture_default_str();

    // optimal-defaults
    auto* opt_cmd = app.add_subcommand("optimal-defaults", "Derive dataset-independent defaults from a metadata-free meta-model");
    std::string opt_meta;
    std::size_t opt_pool = 1000;
    opt_cmd->add_option("--meta", opt_meta, "Meta-model JSON trained with --no-metadata")
        ->required()
        ->check(CLI::ExistingFile);
    opt_cmd->add_option("--pool", opt_pool, "Random candidates besides the two defaults")->capture_default_str();

    // bench-time
    auto* time_cmd = app.add_subcommand("bench-time", "Time model fits against tree count or sample size");
    std::string time_input, time_sweep = "trees";
    std::vector<std::string> time_engines{"rf", "gbt"};
    std::size_t time_col = 0, time_start = 50, time_stop = 5000, time_step = 100, time_reps = 10, time_trees = 500;
    std::size_t time_engine_threads = 1;
    time_cmd->add_option("input", time_input, "Cleaned CSV file")->required()->check(CLI::ExistingFile);
    add_response_col(time_cmd, time_col);
    time_cmd->add_option("--sweep", time_sweep, "trees or samples")
        ->check(CLI::IsMember({"trees", "samples"}))
        ->capture_default_str();
    time_cmd->add_option("--start", time_start, "First sweep point")->capture_default_str();
    time_cmd->add_option("--stop", time_stop, "Last sweep point (inclusive cap)")->capture_default_str();
    time_cmd->add_option("--step", time_step, "Sweep increment")->capture_default_str();
    time_cmd->add_option("--reps", time_reps, "Repetitions per sweep point")->capture_default_str();
    time_cmd->add_option("--trees", time_trees, "Trees or rounds held fixed in the samples sweep")
        ->capture_default_str();
    time_cmd->add_option("--engines", time_engines, "Engines to time")
        ->check(CLI::IsMember({"rf", "gbt"}))
        ->capture_default_str();
    time_cmd->add_option("--engine-threads", time_engine_threads, "Threads inside each fit (rf only)")
        ->capture_default_str();

    // bench-power
    auto* power_cmd = app.add_subcommand("bench-power", "Rank the six tuning methods per dataset");
    std::vector<std::string> power_inputs;
    std::string power_db, power_metric = "kge";
    std::size_t power_col = 0, power_pool = 1000;
    double power_test = 0.2;
    bool power_no_meta = false;
    power_cmd->add_option("inputs", power_inputs, "Cleaned CSV files")->required()->check(CLI::ExistingFile);
    power_cmd->add_option("--db", power_db, "Meta-database NDJSON (leave-one-dataset-out)")
        ->required()
        ->check(CLI::ExistingFile);
    add_metric(power_cmd, power_metric);
    add_response_col(power_cmd, power_col);
    power_cmd->add_option("--pool", power_pool, "Random candidates for the meta methods")->capture_default_str();
    power_cmd->add_option("--test-fraction", power_test, "Held-out test fraction")->capture_default_str();
    power_cmd->add_flag("--no-metadata", power_no_meta, "Meta-models use hyperparameter columns only");

    // report
    auto* report_cmd = app.add_subcommand("report", "Rebuild heatmap, tally, delta and timing exports from CSVs");
    std::string report_ranks, report_timings, report_metric = "kge";
    report_cmd->add_option("--ranks", report_ranks, "ranks.csv from bench-power")->check(CLI::ExistingFile);
    report_cmd->add_option("--timings", report_timings, "timings.csv from bench-time")->check(CLI::ExistingFile);
    add_metric(report_cmd, report_metric);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const std::size_t workers = common.threads;

        if (*clean_cmd) {
            Run run("clean", common);
            Dataset raw = load_csv(clean_input, clean_col);
            run.input(clean_input);
            run.setting("response_col", clean_col);
            std::vector<CleanResult> results;
            if (clean_cmd->count("--threshold")) {
                run.setting("threshold", clean_threshold);
                results.push_back(clean_with_report(raw, clean_threshold));
            } else {
                run.setting("threshold", "variants");
                results = make_variants(raw);
            }
            for (const auto& r : results) {
                run.write(r.data.name() + ".csv", to_csv(r.data));
                run.write(r.data.name() + ".clean.json", clean_report_json(r.report));
                std::cout << r.data.name() << ": " << r.data.n() << " rows, " << r.data.p() << " features ("
                          << r.report.rows_dropped << " rows and " << r.report.columns_dropped.size()
                          << " columns dropped)\n";
            }
            run.finish();
        } else if (*eval_cmd) {
            Run run("evaluate", common);
            const Dataset d = load_dense(eval_input, eval_col);
            run.input(eval_input, &d);
            const Algorithm alg = parse_algorithm(eval_algo);
            const Strategy strategy = parse_strategy(eval_strategy);
            const Metric metric = parse_metric(eval_metric);
            run.setting("algo", eval_algo);
            run.setting("strategy", eval_strategy);
            run.setting("metric", eval_metric);
            run.setting("folds", eval_folds);
            run.setting("test_fraction", eval_test);

            auto [train, test] = train_test_split(d, {eval_test, derive_seed(common.seed, 0x5e11)});
            HyperParams params;
            switch (strategy) {
                case Strategy::default_params: params = default_params(alg); break;
                case Strategy::opt_default: params = optimal_default_params(alg); break;
                case Strategy::random: {
                    run.setting("iters", eval_iters);
                    SearchOptions o{eval_iters, metric, eval_folds, derive_seed(common.seed, 0x5ea), workers};
                    params = run_random_search(train, alg, o).front().params;
                    break;
                }
                case Strategy::meta: {
                    if (eval_meta.empty()) throw ParamError("--strategy meta needs --meta <model.json>");
                    run.input(eval_meta);
                    run.setting("pool", eval_pool);
                    MetaModel mm = meta_model_from_json(read_json(eval_meta));
                    if (mm.algorithm != alg)
                        throw ParamError("meta-model scores " + std::string(to_string(mm.algorithm)) +
                                         " configurations but --algo is " + eval_algo);
                    params = recommend(mm, train, eval_pool, derive_seed(common.seed, 0xec)).params;
                    break;
                }
            }
            const FoldPlan folds = kfold_partition(train, eval_folds, derive_seed(common.seed, 0xf01d));
            TrialRecord t = evaluate_config(train, params, folds, {derive_seed(common.seed, 0x7a1), workers});
            t.strategy = strategy;
            t.test_score = fit_and_score(train, test, params, derive_seed(common.seed, 0x7e57), workers);
            json out = trial_to_json(t);
            out["dataset"] = d.name();
            out["train_rows"] = train.n();
            out["test_rows"] = test.n();
            run.write_json("evaluation.json", out);
            std::cout << d.name() << " " << eval_algo << "/" << eval_strategy << ": cv " << to_string(metric) << "="
                      << format_double(t.cv_mean(metric)) << ", test " << summary(*t.test_score) << "\n";
            run.finish();
        } else if (*search_cmd) {
            Run run("search", common);
            const Dataset d = load_dense(search_input, search_col);
            run.input(search_input, &d);
            const Algorithm alg = parse_algorithm(search_algo);
            const Metric metric = parse_metric(search_metric);
            run.setting("algo", search_algo);
            run.setting("metric", search_metric);
            run.setting("iters", search_iters);
            run.setting("folds", search_folds);
            SearchOptions o{search_iters, metric, search_folds, common.seed, workers};
            auto trials = run_random_search(d, alg, o);
            std::string log;
            for (const auto& t : trials) log += trial_to_json(t, search_wall).dump() + "\n";
            run.write("trials.ndjson", log);
            run.write("trials.csv", trials_to_csv(trials));
            json best = trial_to_json(trials.front());
            best["dataset"] = d.name();
            best["metric"] = search_metric;
            best["completed_trials"] = trials.size();
            best["rejected_trials"] = search_iters - trials.size();
            run.write_json("best.json", best);
            std::cout << trials.size() << " of " << search_iters << " trials completed; best cv "
                      << search_metric << "=" << format_double(trials.front().cv_mean(metric)) << " (trial "
                      << trials.front().trial_index << ")\n";
            run.finish();
        } else if (*build_cmd) {
            Run run("build-metadb", common);
            auto datasets = load_many(build_inputs, build_col, run);
            MetaBuildOptions o;
            o.iterations = build_iters;
            o.test_fraction = build_test;
            o.seed = common.seed;
            o.workers = workers;
            if (build_algo != "both") o.algorithms = {parse_algorithm(build_algo)};
            run.setting("iters", build_iters);
            run.setting("test_fraction", build_test);
            run.setting("algo", build_algo);
            MetaDatabase db = build_meta_database(datasets, o);
            run.write("metadb.ndjson", meta_database_to_ndjson(db.records));
            run.write("metadb.csv", meta_database_to_csv(db.records));
            run.setting("warnings", db.warnings);
            for (const auto& w : db.warnings) std::cerr << "warning: " << w << "\n";
            std::cout << db.records.size() << " meta-records from " << datasets.size() << " datasets\n";
            run.finish();
        } else if (*train_cmd) {
            Run run("train-meta", common);
            run.input(train_db);
            const Algorithm alg = parse_algorithm(train_algo);
            const Metric metric = parse_metric(train_metric);
            run.setting("algo", train_algo);
            run.setting("metric", train_metric);
            run.setting("metadata", !train_no_meta);
            auto records = meta_database_from_ndjson(read_text_file(train_db));
            MetaModel m = train_meta_model(records, metric, alg, !train_no_meta, common.seed, workers);
            const std::string name =
                "meta_" + train_algo + "_" + train_metric + (train_no_meta ? "_nometa" : "") + ".json";
            run.write_json(name, meta_model_to_json(m));
            std::cout << "meta-model on " << m.trial_count << " records from " << m.datasets.size()
                      << " datasets -> " << name << "\n";
            run.finish();
        } else if (*rec_cmd) {
            Run run("recommend", common);
            const Dataset d = load_dense(rec_input, rec_col);
            run.input(rec_input, &d);
            run.input(rec_meta);
            run.setting("pool", rec_pool);
            MetaModel m = meta_model_from_json(read_json(rec_meta));
            Recommendation r = recommend(m, d, rec_pool, common.seed);
            json out{{"dataset", d.name()},
                     {"target", to_string(m.target)},
                     {"predicted_standardized_score", r.predicted},
                     {"candidate_index", r.index},
                     {"params", params_to_json(r.params)}};
            run.write_json("recommendation.json", out);
            std::cout << "recommended " << params_to_json(r.params).dump() << "\n";
            run.finish();
        } else if (*opt_cmd) {
            Run run("optimal-defaults", common);
            run.input(opt_meta);
            run.setting("pool", opt_pool);
            MetaModel m = meta_model_from_json(read_json(opt_meta));
            Recommendation r = compute_new_optimal_defaults(m, opt_pool, common.seed);
            json out{{"algorithm", to_string(m.algorithm)},
                     {"target", to_string(m.target)},
                     {"predicted_standardized_score", r.predicted},
                     {"candidate_index", r.index},
                     {"params", params_to_json(r.params)}};
            run.write_json("optimal_defaults.json", out);
            std::cout << "new defaults " << params_to_json(r.params).dump() << "\n";
            run.finish();
        } else if (*time_cmd) {
            Run run("bench-time", common);
            const Dataset d = load_dense(time_input, time_col);
            run.input(time_input, &d);
            const SweepRange range{time_start, time_stop, time_step};
            if (time_step < 1 || time_start < 1 || time_start > time_stop)
                throw ParamError("sweep needs 1 <= start <= stop and step >= 1");
            if (time_reps < 1) throw ParamError("--reps must be at least 1");
            auto all = builtin_engines(time_engine_threads);
            std::map<std::string, TimedFit> engines;
            for (const auto& e : time_engines) engines[e] = all.at(e);
            run.setting("sweep", time_sweep);
            run.setting("start", time_start);
            run.setting("stop", time_stop);
            run.setting("step", time_step);
            run.setting("reps", time_reps);
            run.setting("engines", time_engines);
            run.setting("engine_threads", time_engine_threads);
            TimingResult res;
            if (time_sweep == "trees") {
                res = time_vs_trees(d, range, time_reps, engines, common.seed);
            } else {
                run.setting("trees", time_trees);
                res = time_vs_samples(d, range, time_trees, time_reps, engines, common.seed);
            }
            std::vector<std::size_t> points;
            for (const auto& r : res.records)
                if (std::find(points.begin(), points.end(), r.value) == points.end()) points.push_back(r.value);
            run.setting("points", points);
            run.setting("aborted", res.aborted);
            run.write("timings.csv", timings_to_csv(res.records));
            for (const auto& e : res.aborted) std::cerr << "warning: engine " << e << " stopped early\n";
            std::cout << res.records.size() << " timing records\n";
            run.finish();
        } else if (*power_cmd) {
            Run run("bench-power", common);
            auto datasets = load_many(power_inputs, power_col, run);
            run.input(power_db);
            const Metric metric = parse_metric(power_metric);
            auto records = meta_database_from_ndjson(read_text_file(power_db));
            auto provider = leave_one_out_provider(records, metric, !power_no_meta, common.seed);
            CompareOptions o{metric, power_test, power_pool, common.seed, workers};
            RankTable table = compare_methods(datasets, provider, o);
            ReportManifest m;
            m.command = "bench-power";
            m.seed = common.seed;
            m.settings = {{"metric", power_metric},
                          {"pool", std::to_string(power_pool)},
                          {"test_fraction", format_double(power_test)},
                          {"metadata", power_no_meta ? "false" : "true"}};
            for (const auto& d : datasets) m.dataset_hashes.emplace_back(d.name(), fingerprint(d));
            for (const auto& p : export_reports(table, {}, common.out_dir, m)) run.mark_written(p.filename().string());
            for (const auto& s : table.skipped) std::cerr << "warning: skipped " << s << "\n";
            std::cout << "ranked " << table.rows.size() << " datasets on " << power_metric << "\n";
            run.finish();
        } else if (*report_cmd) {
            Run run("report", common);
            if (report_ranks.empty() && report_timings.empty())
                throw ParamError("report needs --ranks and/or --timings");
            const Metric metric = parse_metric(report_metric);
            RankTable table;
            table.metric = metric;
            std::vector<TimingRecord> timings;
            if (!report_ranks.empty()) {
                run.input(report_ranks);
                table = ranks_from_csv(read_text_file(report_ranks), metric);
            }
            if (!report_timings.empty()) {
                run.input(report_timings);
                timings = timings_from_csv(read_text_file(report_timings));
            }
            ReportManifest m;
            m.command = "report";
            m.seed = common.seed;
            m.settings = {{"metric", report_metric}};
            for (const auto& p : export_reports(table, timings, common.out_dir, m)) run.mark_written(p.filename().string());
            std::cout << "reported " << table.rows.size() << " datasets and " << timings.size()
                      << " timing records\n";
            run.finish();
        }
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
