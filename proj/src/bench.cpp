#include "treetune/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

#include "treetune/error.hpp"
#include "treetune/parallel.hpp"
#include "treetune/rng.hpp"
#include "treetune/util.hpp"

namespace treetune {

const char* const kVersion = "0.1.0";

std::map<std::string, TimedFit> builtin_engines(std::size_t workers) {
    std::map<std::string, TimedFit> engines;
    engines["rf"] = [workers](const Dataset& d, std::size_t trees, std::uint64_t seed) {
        auto p = std::get<RfHyperParams>(default_params(Algorithm::rf));
        p.num_trees = static_cast<int>(trees);
        (void)fit_forest(d, p, seed, workers);
    };
    engines["gbt"] = [](const Dataset& d, std::size_t trees, std::uint64_t seed) {
        auto p = std::get<GbtHyperParams>(default_params(Algorithm::gbt));
        p.nrounds = static_cast<int>(trees);
        (void)fit_gbt(d, p, seed);
    };
    return engines;
}

std::vector<std::size_t> SweepRange::points() const {
    if (step == 0) throw ParamError("sweep step must be positive");
    if (start == 0) throw ParamError("sweep start must be positive");
    std::vector<std::size_t> out;
    for (std::size_t v = start; v <= stop; v += step) out.push_back(v);
    return out;
}

namespace {

double time_once(const TimedFit& fn, const Dataset& d, std::size_t trees, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    fn(d, trees, seed);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

TimingRecord make_record(const std::string& engine, const std::string& sweep, std::size_t value,
                         std::vector<double> seconds) {
    TimingRecord r;
    r.engine = engine;
    r.sweep = sweep;
    r.value = value;
    r.mean_seconds = std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
    r.seconds = std::move(seconds);
    return r;
}

}  // namespace

TimingResult time_vs_trees(const Dataset& d, const SweepRange& range, std::size_t reps,
                           const std::map<std::string, TimedFit>& engines, std::uint64_t seed) {
    if (reps < 1) throw ParamError("timing needs at least 1 repetition");
    const auto points = range.points();
    TimingResult result;
    for (const auto& [name, fn] : engines) {
        try {
            for (std::size_t trees : points) {
                std::vector<double> secs;
                for (std::size_t rep = 0; rep < reps; ++rep) secs.push_back(time_once(fn, d, trees, seed));
                result.records.push_back(make_record(name, "trees", trees, std::move(secs)));
            }
        } catch (const Error&) {
            result.aborted.push_back(name);
        }
    }
    return result;
}

TimingResult time_vs_samples(const Dataset& d, const SweepRange& range, std::size_t trees, std::size_t reps,
                             const std::map<std::string, TimedFit>& engines, std::uint64_t seed) {
    if (reps < 1) throw ParamError("timing needs at least 1 repetition");
    if (d.n() < range.start)
        throw DataError("dataset has " + std::to_string(d.n()) + " rows, fewer than the sweep start " +
                        std::to_string(range.start));
    SweepRange capped = range;
    capped.stop = std::min(range.stop, d.n());
    const auto points = capped.points();

    // One subsample per sweep point, shared by every engine and repetition.
    std::vector<Dataset> samples;
    for (std::size_t i = 0; i < points.size(); ++i) {
        Rng rng = Rng::stream(seed, 0x5a3b, points[i]);
        auto rows = rng.sample_without_replacement(d.n(), points[i]);
        std::sort(rows.begin(), rows.end());
        samples.push_back(d.subset(rows));
    }

    TimingResult result;
    for (const auto& [name, fn] : engines) {
        try {
            for (std::size_t i = 0; i < points.size(); ++i) {
                std::vector<double> secs;
                for (std::size_t rep = 0; rep < reps; ++rep) secs.push_back(time_once(fn, samples[i], trees, seed));
                result.records.push_back(make_record(name, "samples", points[i], std::move(secs)));
            }
        } catch (const Error&) {
            result.aborted.push_back(name);
        }
    }
    return result;
}

const std::array<std::string, kMethodCount>& method_names() {
    static const std::array<std::string, kMethodCount> names{"rf-default",  "rf-optdefault",  "rf-meta",
                                                             "gbt-default", "gbt-optdefault", "gbt-meta"};
    return names;
}

std::vector<double> rank_descending(std::span<const double> scores) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        // Positions i..j (0-based) share rank mean(i+1..j+1).
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

MetaModelProvider leave_one_out_provider(std::vector<MetaRecord> db, Metric target, bool uses_metadata,
                                         std::uint64_t seed, std::size_t workers) {
    auto shared = std::make_shared<const std::vector<MetaRecord>>(std::move(db));
    return [shared, target, uses_metadata, seed, workers](const std::string& dataset, Algorithm algorithm) {
        std::vector<MetaRecord> rest;
        for (const auto& r : *shared)
            if (r.dataset != dataset && r.algorithm == algorithm) rest.push_back(r);
        return train_meta_model(rest, target, algorithm, uses_metadata, seed, workers);
    };
}

RankTable compare_methods(const std::vector<Dataset>& datasets, const MetaModelProvider& meta_models,
                          const CompareOptions& options) {
    RankTable table;
    table.metric = options.metric;
    std::vector<std::optional<RankRow>> rows(datasets.size());
    std::vector<std::string> failures(datasets.size());

    parallel_for(datasets.size(), options.workers, [&](std::size_t di) {
        const Dataset& d = datasets[di];
        try {
            auto [train, test] = train_test_split(d, {options.test_fraction, derive_seed(options.seed, 0xd5, di)});
            RankRow row;
            row.dataset = d.name();
            for (std::size_t m = 0; m < kMethodCount; ++m) {
                const Algorithm alg = m < 3 ? Algorithm::rf : Algorithm::gbt;
                HyperParams params;
                switch (m % 3) {
                    case 0: params = default_params(alg); break;
                    case 1: params = optimal_default_params(alg); break;
                    default: {
                        MetaModel model = meta_models(d.name(), alg);
                        if (std::find(model.datasets.begin(), model.datasets.end(), d.name()) != model.datasets.end())
                            throw ParamError("meta-model for '" + d.name() + "' was trained on that dataset");
                        params = recommend(model, train, options.pool_size, derive_seed(options.seed, 0xec, di)).params;
                    }
                }
                const ScoreReport s = fit_and_score(train, test, params, derive_seed(options.seed, di, m));
                row.scores[m] = s.value(options.metric);
            }
            auto ranks = rank_descending(row.scores);
            std::copy(ranks.begin(), ranks.end(), row.ranks.begin());
            rows[di] = std::move(row);
        } catch (const DataError& e) {
            failures[di] = e.what();
        }
    });

    for (std::size_t di = 0; di < datasets.size(); ++di) {
        if (rows[di])
            table.rows.push_back(std::move(*rows[di]));
        else
            table.skipped.push_back(datasets[di].name() + ": " + failures[di]);
    }
    return table;
}

std::string timings_to_csv(const std::vector<TimingRecord>& timings) {
    std::string out = "engine,sweep,value,rep,seconds\n";
    for (const auto& t : timings)
        for (std::size_t rep = 0; rep < t.seconds.size(); ++rep)
            out += t.engine + "," + t.sweep + "," + std::to_string(t.value) + "," + std::to_string(rep) + "," +
                   format_double(t.seconds[rep]) + "\n";
    return out;
}

namespace {

std::vector<std::vector<std::string>> split_csv_lines(std::string_view text) {
    std::vector<std::vector<std::string>> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t s = 0;
        while (true) {
            std::size_t c = line.find(',', s);
            cells.emplace_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
            if (c == std::string_view::npos) break;
            s = c + 1;
        }
        out.push_back(std::move(cells));
    }
    return out;
}

double to_double(const std::string& s) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw DataError("bad number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        throw DataError("bad number '" + s + "'");
    }
}

}  // namespace

std::vector<TimingRecord> timings_from_csv(std::string_view text) {
    auto lines = split_csv_lines(text);
    if (lines.empty() || lines[0] != std::vector<std::string>{"engine", "sweep", "value", "rep", "seconds"})
        throw DataError("timings CSV must start with header engine,sweep,value,rep,seconds");
    std::vector<TimingRecord> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& c = lines[i];
        if (c.size() != 5) throw DataError("timings CSV line " + std::to_string(i + 1) + " has wrong width");
        const auto value = static_cast<std::size_t>(to_double(c[2]));
        if (out.empty() || out.back().engine != c[0] || out.back().sweep != c[1] || out.back().value != value) {
            TimingRecord r;
            r.engine = c[0];
            r.sweep = c[1];
            r.value = value;
            out.push_back(r);
        }
        out.back().seconds.push_back(to_double(c[4]));
    }
    for (auto& r : out)
        r.mean_seconds = std::accumulate(r.seconds.begin(), r.seconds.end(), 0.0) / static_cast<double>(r.seconds.size());
    return out;
}

std::string ranks_to_csv(const RankTable& ranks) {
    std::string out = "dataset,method,score,rank\n";
    for (const auto& row : ranks.rows)
        for (std::size_t m = 0; m < kMethodCount; ++m)
            out += row.dataset + "," + method_names()[m] + "," + format_double(row.scores[m]) + "," +
                   format_double(row.ranks[m]) + "\n";
    return out;
}

RankTable ranks_from_csv(std::string_view text, Metric metric) {
    auto lines = split_csv_lines(text);
    if (lines.empty() || lines[0] != std::vector<std::string>{"dataset", "method", "score", "rank"})
        throw DataError("ranks CSV must start with header dataset,method,score,rank");
    RankTable table;
    table.metric = metric;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& c = lines[i];
        if (c.size() != 4) throw DataError("ranks CSV line " + std::to_string(i + 1) + " has wrong width");
        const auto& names = method_names();
        auto it = std::find(names.begin(), names.end(), c[1]);
        if (it == names.end()) throw DataError("unknown method '" + c[1] + "'");
        const auto m = static_cast<std::size_t>(it - names.begin());
        if (table.rows.empty() || table.rows.back().dataset != c[0]) {
            table.rows.push_back(RankRow{});
            table.rows.back().dataset = c[0];
        }
        table.rows.back().scores[m] = to_double(c[2]);
        table.rows.back().ranks[m] = to_double(c[3]);
    }
    return table;
}

std::string rank_heatmap_csv(const RankTable& ranks) {
    std::string out = "method";
    for (const auto& row : ranks.rows) out += "," + row.dataset;
    out += "\n";
    for (std::size_t m = 0; m < kMethodCount; ++m) {
        out += method_names()[m];
        for (const auto& row : ranks.rows) out += "," + format_double(row.ranks[m]);
        out += "\n";
    }
    return out;
}

std::string rank_tally_csv(const RankTable& ranks) {
    std::array<std::size_t, kMethodCount> best{}, worst{};
    for (const auto& row : ranks.rows) {
        const double hi = *std::max_element(row.scores.begin(), row.scores.end());
        const double lo = *std::min_element(row.scores.begin(), row.scores.end());
        for (std::size_t m = 0; m < kMethodCount; ++m) {
            if (row.scores[m] == hi) ++best[m];
            if (row.scores[m] == lo) ++worst[m];
        }
    }
    std::string out = "method,best_count,worst_count\n";
    for (std::size_t m = 0; m < kMethodCount; ++m)
        out += method_names()[m] + "," + std::to_string(best[m]) + "," + std::to_string(worst[m]) + "\n";
    return out;
}

std::string deltas_csv(const RankTable& ranks) {
    std::string out = "dataset,method,delta\n";
    for (const auto& row : ranks.rows)
        for (std::size_t m = 1; m < kMethodCount; ++m)
            out += row.dataset + "," + method_names()[m] + "," + format_double(row.scores[m] - row.scores[0]) + "\n";
    return out;
}

std::vector<std::filesystem::path> export_reports(const RankTable& ranks, const std::vector<TimingRecord>& timings,
                                                  const std::filesystem::path& out_dir,
                                                  const ReportManifest& manifest) {
    if (ranks.rows.empty() && timings.empty()) throw ParamError("nothing to report: no ranks and no timings");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw DataError("cannot create output directory '" + out_dir.string() + "'");

    std::vector<std::filesystem::path> written;
    auto emit = [&](const char* name, const std::string& body) {
        auto path = out_dir / name;
        write_text_file(path, body);
        written.push_back(path);
    };
    if (!ranks.rows.empty()) {
        emit("ranks.csv", ranks_to_csv(ranks));
        emit("ranks_heatmap.csv", rank_heatmap_csv(ranks));
        emit("rank_tally.csv", rank_tally_csv(ranks));
        emit("deltas.csv", deltas_csv(ranks));
    }
    if (!timings.empty()) emit("timings.csv", timings_to_csv(timings));

    json j;
    j["tool"] = "treetune";
    j["version"] = kVersion;
    j["command"] = manifest.command;
    j["seed"] = manifest.seed;
    j["metric"] = to_string(ranks.metric);
    json settings = json::object();
    for (const auto& [k, v] : manifest.settings) settings[k] = v;
    j["settings"] = settings;
    json hashes = json::object();
    for (const auto& [name, h] : manifest.dataset_hashes) hashes[name] = hex64(h);
    j["dataset_hashes"] = hashes;
    j["skipped"] = ranks.skipped;
    emit("manifest.json", j.dump(2) + "\n");
    return written;
}

}  // namespace treetune
