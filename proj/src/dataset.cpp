#include "treetune/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "treetune/error.hpp"
#include "treetune/rng.hpp"
#include "treetune/util.hpp"

namespace treetune {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

// Splits one CSV record. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    out.push_back(std::move(cell));
    return out;
}

double parse_cell(std::string_view raw, std::size_t line_no, std::size_t col) {
    if (is_missing_marker(raw)) return kMissing;
    std::string_view s = trim(raw);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value))
        throw DataError("line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
                        ": non-numeric cell '" + std::string(raw) + "'");
    return value;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::size_t m = values.size() / 2;
    if (values.size() % 2 == 1) return values[m];
    return 0.5 * (values[m - 1] + values[m]);
}

}  // namespace

Dataset::Dataset(std::string name,
                 std::string response_name,
                 std::vector<std::string> feature_names,
                 std::vector<double> response,
                 Matrix features,
                 std::size_t imputed_cells)
    : name_(std::move(name)),
      response_name_(std::move(response_name)),
      feature_names_(std::move(feature_names)),
      response_(std::move(response)),
      features_(std::move(features)),
      imputed_cells_(imputed_cells) {
    if (features_.cols() < 1) throw DataError("dataset '" + name_ + "' has no feature columns");
    if (response_.empty()) throw DataError("dataset '" + name_ + "' has no rows");
    if (features_.rows() != response_.size())
        throw DataError("dataset '" + name_ + "': feature rows do not match response length");
    if (feature_names_.size() != features_.cols())
        throw DataError("dataset '" + name_ + "': feature name count does not match column count");
}

bool Dataset::has_missing_response() const {
    return std::any_of(response_.begin(), response_.end(), [](double v) { return std::isnan(v); });
}

bool Dataset::has_missing_features() const {
    auto v = features_.values();
    return std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
}

double Dataset::missing_fraction(std::size_t col) const {
    std::size_t missing = 0;
    for (std::size_t r = 0; r < n(); ++r)
        if (std::isnan(features_(r, col))) ++missing;
    return static_cast<double>(missing) / static_cast<double>(n());
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    std::vector<double> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = response_[rows[i]];
    return Dataset(name_, response_name_, feature_names_, std::move(y), features_.select_rows(rows),
                   imputed_cells_);
}

Dataset Dataset::renamed(std::string name) const {
    Dataset out = *this;
    out.name_ = std::move(name);
    return out;
}

bool is_missing_marker(std::string_view cell) {
    std::string_view s = trim(cell);
    return s.empty() || iequals(s, "NA") || iequals(s, "NaN");
}

Dataset parse_csv(std::string_view text, std::string name, std::size_t response_col) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) continue;

        auto cells = split_record(line);
        if (header.empty()) {
            for (auto& c : cells) header.emplace_back(trim(c));
            if (header.size() < 2) throw DataError("CSV needs at least 2 columns, found " +
                                                   std::to_string(header.size()));
            if (response_col >= header.size())
                throw DataError("response column " + std::to_string(response_col + 1) +
                                " is beyond the " + std::to_string(header.size()) + " header columns");
            continue;
        }
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " cells, found " +
                            std::to_string(cells.size()));
        std::vector<double> values(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) values[c] = parse_cell(cells[c], line_no, c);
        rows.push_back(std::move(values));
    }
    if (header.empty()) throw DataError("CSV is empty");
    if (rows.empty()) throw DataError("CSV has a header but no data rows");

    const std::size_t p = header.size() - 1;
    std::vector<std::string> feature_names;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != response_col) feature_names.push_back(header[c]);

    std::vector<double> y(rows.size());
    Matrix x(rows.size(), p);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::size_t j = 0;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == response_col)
                y[r] = rows[r][c];
            else
                x(r, j++) = rows[r][c];
        }
    }
    return Dataset(std::move(name), header[response_col], std::move(feature_names), std::move(y),
                   std::move(x));
}

Dataset load_csv(const std::filesystem::path& path, std::size_t response_col) {
    std::string text = read_text_file(path);
    return parse_csv(text, path.stem().string(), response_col);
}

std::string to_csv(const Dataset& d) {
    std::string out = quote_if_needed(d.response_name());
    for (const auto& f : d.feature_names()) out += "," + quote_if_needed(f);
    out += "\n";
    auto cell = [](double v) { return std::isnan(v) ? std::string("NA") : format_double(v); };
    for (std::size_t r = 0; r < d.n(); ++r) {
        out += cell(d.response()[r]);
        for (double v : d.features().row(r)) out += "," + cell(v);
        out += "\n";
    }
    return out;
}

CleanResult clean_with_report(const Dataset& raw, double column_threshold) {
    if (!(column_threshold > 0.0 && column_threshold <= 1.0))
        throw ParamError("column threshold must lie in (0, 1], got " + format_double(column_threshold));

    CleanReport report;
    report.dataset = raw.name();
    report.column_threshold = column_threshold;
    report.rows_in = raw.n();
    report.cols_in = raw.p();

    std::vector<std::size_t> keep_rows;
    for (std::size_t r = 0; r < raw.n(); ++r)
        if (!std::isnan(raw.response()[r])) keep_rows.push_back(r);
    report.rows_dropped = raw.n() - keep_rows.size();
    if (keep_rows.empty())
        throw DataError("cleaning '" + raw.name() + "' removed every row (response all missing)");

    const Matrix& x = raw.features();
    const double n_kept = static_cast<double>(keep_rows.size());
    std::vector<std::size_t> keep_cols;
    for (std::size_t c = 0; c < raw.p(); ++c) {
        std::size_t missing = 0;
        for (std::size_t r : keep_rows)
            if (std::isnan(x(r, c))) ++missing;
        double fraction = static_cast<double>(missing) / n_kept;
        if (fraction > column_threshold || missing == keep_rows.size())
            report.columns_dropped.push_back(raw.feature_names()[c]);
        else
            keep_cols.push_back(c);
    }
    if (keep_cols.empty())
        throw DataError("cleaning '" + raw.name() + "' removed every feature column at threshold " +
                        format_double(column_threshold));

    std::vector<double> y(keep_rows.size());
    for (std::size_t i = 0; i < keep_rows.size(); ++i) y[i] = raw.response()[keep_rows[i]];

    Matrix out(keep_rows.size(), keep_cols.size());
    std::vector<std::string> names;
    std::size_t imputed_total = 0;
    for (std::size_t j = 0; j < keep_cols.size(); ++j) {
        const std::size_t c = keep_cols[j];
        names.push_back(raw.feature_names()[c]);
        std::vector<double> observed;
        for (std::size_t r : keep_rows)
            if (!std::isnan(x(r, c))) observed.push_back(x(r, c));
        const double fill = observed.size() < keep_rows.size() ? median_of(observed) : 0.0;
        std::size_t imputed = 0;
        for (std::size_t i = 0; i < keep_rows.size(); ++i) {
            double v = x(keep_rows[i], c);
            if (std::isnan(v)) {
                v = fill;
                ++imputed;
            }
            out(i, j) = v;
        }
        imputed_total += imputed;
        report.imputed.emplace_back(names.back(), imputed);
    }

    Dataset cleaned(raw.name(), raw.response_name(), std::move(names), std::move(y), std::move(out),
                    raw.imputed_cells() + imputed_total);
    return CleanResult{std::move(cleaned), std::move(report)};
}

Dataset clean(const Dataset& raw, double column_threshold) {
    return clean_with_report(raw, column_threshold).data;
}

std::vector<CleanResult> make_variants(const Dataset& raw) {
    std::vector<std::size_t> keep_rows;
    for (std::size_t r = 0; r < raw.n(); ++r)
        if (!std::isnan(raw.response()[r])) keep_rows.push_back(r);
    if (keep_rows.empty())
        throw DataError("cleaning '" + raw.name() + "' removed every row (response all missing)");

    bool over_ten = false;
    for (std::size_t c = 0; c < raw.p() && !over_ten; ++c) {
        std::size_t missing = 0;
        for (std::size_t r : keep_rows)
            if (std::isnan(raw.features()(r, c))) ++missing;
        over_ten = static_cast<double>(missing) / static_cast<double>(keep_rows.size()) > 0.1;
    }

    std::vector<CleanResult> out;
    if (!over_ten) {
        out.push_back(clean_with_report(raw, 0.1));
        return out;
    }
    for (auto [threshold, suffix] : {std::pair{0.5, "_miss50"}, std::pair{0.1, "_miss10"}}) {
        auto result = clean_with_report(raw, threshold);
        result.data = result.data.renamed(raw.name() + suffix);
        result.report.dataset = result.data.name();
        out.push_back(std::move(result));
    }
    return out;
}

std::string clean_report_json(const CleanReport& report) {
    nlohmann::ordered_json j;
    j["dataset"] = report.dataset;
    j["column_threshold"] = report.column_threshold;
    j["rows_in"] = report.rows_in;
    j["columns_in"] = report.cols_in;
    j["rows_dropped"] = report.rows_dropped;
    j["columns_dropped"] = report.columns_dropped;
    nlohmann::ordered_json imputed = nlohmann::ordered_json::object();
    std::size_t total = 0;
    for (const auto& [name, count] : report.imputed) {
        imputed[name] = count;
        total += count;
    }
    j["imputed_cells"] = imputed;
    j["imputed_total"] = total;
    return j.dump(2) + "\n";
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        throw ParamError("test fraction must lie in (0, 1), got " + format_double(spec.test_fraction));
    const auto test_size = static_cast<std::size_t>(
        std::max<std::int64_t>(0, round_half_up(static_cast<double>(n) * spec.test_fraction)));
    if (test_size == 0 || test_size >= n)
        throw DataError("a " + format_double(spec.test_fraction) + " test split of " +
                        std::to_string(n) + " rows leaves one side empty");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(spec.seed, 0x5e11);
    rng.shuffle(std::span(order));

    SplitIndices out;
    out.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
    out.train.assign(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
    std::sort(out.test.begin(), out.test.end());
    std::sort(out.train.begin(), out.train.end());
    return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, const SplitSpec& spec) {
    auto idx = split_indices(d.n(), spec);
    return {d.subset(idx.train), d.subset(idx.test)};
}

std::vector<std::size_t> FoldPlan::fold_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldPlan::out_of_fold_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : assignments) ++sizes[f];
    return sizes;
}

FoldPlan kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ParamError("fold count must be at least 2, got " + std::to_string(k));
    if (k > n)
        throw ParamError("fold count " + std::to_string(k) + " exceeds the " + std::to_string(n) +
                         " available rows");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::stream(seed, 0xf01d);
    rng.shuffle(std::span(order));

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.resize(n);
    // Position i in the shuffled order goes to fold i mod k.
    for (std::size_t i = 0; i < n; ++i) plan.assignments[order[i]] = i % k;
    return plan;
}

std::uint64_t fingerprint(const Dataset& d) {
    std::uint64_t h = fnv1a64(d.name());
    h = fnv1a64(d.response_name(), h);
    for (const auto& f : d.feature_names()) h = fnv1a64(f, h);
    auto bytes = [](std::span<const double> v) {
        return std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    };
    h = fnv1a64(bytes(d.response()), h);
    h = fnv1a64(bytes(d.features().values()), h);
    return h;
}

}  // namespace treetune
