#include "treetune/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "treetune/error.hpp"

namespace treetune {

namespace {

void check_pair(std::span<const double> observed, std::span<const double> predicted) {
    if (observed.size() != predicted.size())
        throw MetricError("observed and predicted lengths differ (" + std::to_string(observed.size()) +
                          " vs " + std::to_string(predicted.size()) + ")");
    if (observed.size() < 2) throw MetricError("need at least 2 observations");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(observed.begin(), observed.end(), finite) ||
        !std::all_of(predicted.begin(), predicted.end(), finite))
        throw MetricError("non-finite value in scored vectors");
}

bool constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double sum_sq_dev(std::span<const double> v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
}

}  // namespace

std::string_view to_string(Metric m) { return m == Metric::nse ? "nse" : "kge"; }

Metric parse_metric(std::string_view s) {
    if (s == "nse") return Metric::nse;
    if (s == "kge") return Metric::kge;
    throw ParamError("unknown metric '" + std::string(s) + "' (expected nse or kge)");
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    return std::sqrt(sum_sq_dev(v, mean(v)) / static_cast<double>(v.size() - 1));
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const double ma = mean(a);
    const double mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

double nse(std::span<const double> observed, std::span<const double> predicted) {
    check_pair(observed, predicted);
    if (constant(observed)) throw MetricError("NSE undefined: observed values have zero variance");
    const double ybar = mean(observed);
    double err = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = observed[i] - predicted[i];
        err += d * d;
    }
    return 1.0 - err / sum_sq_dev(observed, ybar);
}

ScoreReport kge(std::span<const double> observed, std::span<const double> predicted) {
    check_pair(observed, predicted);
    if (constant(observed)) throw MetricError("KGE undefined: observed values have zero variance");
    const double mo = mean(observed);
    const double mp = mean(predicted);
    if (mo == 0.0) throw MetricError("KGE undefined: observed mean is zero");
    if (mp == 0.0) throw MetricError("KGE undefined: predicted mean is zero");

    // A constant prediction carries no correlation: r = 0 and beta = 0.
    ScoreReport s;
    s.r = pearson(predicted, observed);
    s.alpha = mp / mo;
    s.beta = (sample_sd(predicted) / mp) / (sample_sd(observed) / mo);
    s.kge = 1.0 - std::sqrt((s.r - 1.0) * (s.r - 1.0) + (s.alpha - 1.0) * (s.alpha - 1.0) +
                            (s.beta - 1.0) * (s.beta - 1.0));
    return s;
}

ScoreReport score(std::span<const double> observed, std::span<const double> predicted) {
    ScoreReport s = kge(observed, predicted);
    s.nse = nse(observed, predicted);
    return s;
}

std::vector<double> standardize_scores(std::span<const double> scores) {
    if (scores.size() < 2) throw MetricError("standardization needs at least 2 scores");
    if (!std::all_of(scores.begin(), scores.end(), [](double v) { return std::isfinite(v); }))
        throw MetricError("non-finite score in standardization input");
    std::vector<double> out(scores.size(), 0.0);
    if (constant(scores)) return out;
    const double m = mean(scores);
    const double sd = sample_sd(scores);
    if (sd == 0.0) return out;
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - m) / sd;
    return out;
}

}  // namespace treetune
