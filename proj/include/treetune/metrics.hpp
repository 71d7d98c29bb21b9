#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace treetune {

enum class Metric { nse, kge };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// NSE and modified KGE of one prediction vector, with the KGE components:
/// r (Pearson correlation), alpha (ratio of means, predicted / observed) and
/// beta (ratio of coefficients of variation, predicted / observed).
struct ScoreReport {
    double nse = 0.0;
    double kge = 0.0;
    double r = 0.0;
    double alpha = 0.0;
    double beta = 0.0;

    double value(Metric m) const { return m == Metric::nse ? nse : kge; }
    bool operator==(const ScoreReport&) const = default;
};

/// 1 - sum (y - yhat)^2 / sum (y - ybar)^2.
double nse(std::span<const double> observed, std::span<const double> predicted);

/// Modified KGE. Only the kge/r/alpha/beta fields are filled; nse is left 0.
/// Constant predictions score r = 0 and beta = 0 rather than failing; a
/// constant observation vector or a zero mean throws MetricError.
ScoreReport kge(std::span<const double> observed, std::span<const double> predicted);

/// Both metrics at once. Throws MetricError if either is undefined.
ScoreReport score(std::span<const double> observed, std::span<const double> predicted);

/// (s - mean) / sample sd. A constant vector maps to all zeros.
std::vector<double> standardize_scores(std::span<const double> scores);

double mean(std::span<const double> v);
/// Sample (n - 1) standard deviation.
double sample_sd(std::span<const double> v);
double pearson(std::span<const double> a, std::span<const double> b);

}  // namespace treetune
