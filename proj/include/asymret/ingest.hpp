#pragma once

// Daily price series: loading, validation and re-serialisation.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "asymret/core/error.hpp"

namespace asymret {

using Date = std::chrono::sys_days;

/// Dated closing prices. Invariants (checked on construction): prices > 0,
/// dates strictly increasing, at least two rows.
class PriceSeries {
public:
    PriceSeries(std::vector<Date> dates, std::vector<double> prices, std::string label = {})
        : dates_(std::move(dates)), prices_(std::move(prices)), label_(std::move(label))
    {
        if (dates_.size() != prices_.size())
            throw Error(ErrorCode::invalid_argument, "dates and prices differ in length");
        if (prices_.size() < 2)
            throw Error(ErrorCode::insufficient_points, "a price series needs at least two rows");
        for (std::size_t i = 0; i < prices_.size(); ++i) {
            if (!(prices_[i] > 0.0) || !std::isfinite(prices_[i]))
                throw Error(ErrorCode::invalid_argument, "price at row " + std::to_string(i) + " is not positive");
            if (i > 0 && !(dates_[i - 1] < dates_[i]))
                throw Error(dates_[i - 1] == dates_[i] ? ErrorCode::duplicate_date : ErrorCode::invalid_argument,
                            "dates not strictly increasing at row " + std::to_string(i));
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return prices_.size(); }
    [[nodiscard]] const std::vector<Date>& dates() const noexcept { return dates_; }
    [[nodiscard]] const std::vector<double>& prices() const noexcept { return prices_; }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }

    friend bool operator==(const PriceSeries&, const PriceSeries&) = default;

private:
    std::vector<Date> dates_;
    std::vector<double> prices_;
    std::string label_;
};

struct DroppedRow {
    std::size_t row_index; // 0-based data row (header excluded)
    std::string reason;
};

struct ValidationReport {
    std::size_t row_count = 0;
    std::vector<DroppedRow> dropped_rows;
    std::vector<std::string> warnings;
};

struct LoadOptions {
    std::string date_col = "Date";   // header name, or 0-based index
    std::string price_col = "Close"; // header name, or 0-based index
    char delimiter = ',';
    std::string date_format = "%Y-%m-%d";
    bool strict = false; // fail on the first malformed row instead of dropping it
    std::string label;
};

struct LoadResult {
    PriceSeries series;
    ValidationReport report;
};

namespace detail {

inline std::string trim(std::string s)
{
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split_fields(const std::string& line, char delim)
{
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            field.push_back(c);
        } else if (c == delim && !quoted) {
            out.push_back(trim(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(trim(field));
    return out;
}

inline std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline std::size_t resolve_column(const std::vector<std::string>& header, const std::string& spec)
{
    if (!spec.empty() && std::all_of(spec.begin(), spec.end(), [](unsigned char c) { return std::isdigit(c); })) {
        const auto idx = static_cast<std::size_t>(std::stoul(spec));
        if (idx < header.size()) return idx;
    }
    for (std::size_t i = 0; i < header.size(); ++i)
        if (lower(header[i]) == lower(spec)) return i;
    throw Error(ErrorCode::config_invalid, "column '" + spec + "' not found in header");
}

inline std::optional<Date> parse_date(const std::string& text, const std::string& format)
{
    std::tm tm{};
    std::istringstream in(text);
    in >> std::get_time(&tm, format.c_str());
    if (in.fail()) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{tm.tm_year + 1900},
                                          std::chrono::month{static_cast<unsigned>(tm.tm_mon + 1)},
                                          std::chrono::day{static_cast<unsigned>(tm.tm_mday)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

inline std::optional<double> parse_price(const std::string& text)
{
    if (text.empty()) return std::nullopt;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    if (used != text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace detail

inline std::string format_date(Date d)
{
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

/// Gaps longer than 7 calendar days become warnings; the input is untouched.
inline ValidationReport validate_series(const PriceSeries& series)
{
    ValidationReport report;
    report.row_count = series.size();
    const auto& d = series.dates();
    for (std::size_t i = 1; i < d.size(); ++i) {
        const auto gap = (d[i] - d[i - 1]).count();
        if (gap > 7)
            report.warnings.push_back("gap of " + std::to_string(gap) + " calendar days between "
                                      + format_date(d[i - 1]) + " and " + format_date(d[i]));
    }
    return report;
}

inline LoadResult load_price_series(const std::filesystem::path& path, const LoadOptions& opt = {})
{
    std::ifstream in(path);
    if (!std::filesystem::exists(path) || !in)
        throw Error(ErrorCode::file_not_found, path.string());

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        header = detail::split_fields(line, opt.delimiter);
        break;
    }
    if (header.empty()) throw Error(ErrorCode::no_parsable_rows, path.string() + " has no header");
    const std::size_t date_idx = detail::resolve_column(header, opt.date_col);
    const std::size_t price_idx = detail::resolve_column(header, opt.price_col);

    ValidationReport report;
    std::vector<std::pair<Date, double>> rows;
    std::size_t row = 0;
    auto drop = [&](std::size_t r, std::string reason) {
        if (opt.strict)
            throw Error(ErrorCode::malformed_row, "row " + std::to_string(r) + ": " + reason);
        report.dropped_rows.push_back({r, std::move(reason)});
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const std::size_t r = row++;
        const auto fields = detail::split_fields(line, opt.delimiter);
        if (fields.size() <= std::max(date_idx, price_idx)) {
            drop(r, "missing columns");
            continue;
        }
        const auto date = detail::parse_date(fields[date_idx], opt.date_format);
        if (!date) {
            drop(r, "unparsable date '" + fields[date_idx] + "'");
            continue;
        }
        const auto price = detail::parse_price(fields[price_idx]);
        if (!price) {
            drop(r, "non-numeric price '" + fields[price_idx] + "'");
            continue;
        }
        if (!(*price > 0.0)) {
            drop(r, "non-positive price " + fields[price_idx]);
            continue;
        }
        rows.emplace_back(*date, *price);
    }
    if (rows.empty()) throw Error(ErrorCode::no_parsable_rows, path.string());

    if (!std::is_sorted(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.first < b.first; })) {
        std::stable_sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.first < b.first; });
        report.warnings.push_back("rows were not in date order and have been sorted");
    }
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first == rows[i - 1].first)
            throw Error(ErrorCode::duplicate_date, "duplicate date " + format_date(rows[i].first));
    if (rows.size() < 2)
        throw Error(ErrorCode::no_parsable_rows, "only one parsable row in " + path.string());

    std::vector<Date> dates;
    std::vector<double> prices;
    dates.reserve(rows.size());
    prices.reserve(rows.size());
    for (const auto& [d, p] : rows) {
        dates.push_back(d);
        prices.push_back(p);
    }
    PriceSeries series(std::move(dates), std::move(prices),
                       opt.label.empty() ? path.stem().string() : opt.label);
    auto gaps = validate_series(series);
    report.row_count = series.size();
    report.warnings.insert(report.warnings.end(), gaps.warnings.begin(), gaps.warnings.end());
    return {std::move(series), std::move(report)};
}

/// Writes an ISO-dated "Date,Close" file that load_price_series reads back unchanged.
inline void write_price_series(const std::filesystem::path& path, const PriceSeries& series)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::input_unreadable, "cannot write " + path.string());
    out << "Date,Close\n";
    char buf[40];
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", series.prices()[i]);
        out << format_date(series.dates()[i]) << ',' << buf << '\n';
    }
}

} // namespace asymret
