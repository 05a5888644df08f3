#pragma once

// Empirical CCDFs of gain/loss magnitudes, histogram densities, central
// moments, mode/median and the three skewness coefficients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "asymret/core/error.hpp"
#include "asymret/core/parallel.hpp"
#include "asymret/numeric/ols.hpp"
#include "asymret/returns.hpp"

namespace asymret {

enum class Side { gain, loss };

constexpr const char* to_string(Side s) noexcept { return s == Side::gain ? "gain" : "loss"; }

struct CcdfPoint {
    double x;                // magnitude
    double survival;         // count_at_or_above / n
    std::size_t count_ge;    // number of sample values >= x
};

/// Distinct magnitudes in increasing order with survival (count >= x) / n.
struct EmpiricalCCDF {
    Side side = Side::gain;
    std::size_t n = 0;
    std::vector<CcdfPoint> points;
};

inline EmpiricalCCDF empirical_ccdf(std::span<const double> values, Side side)
{
    if (values.empty()) throw Error(ErrorCode::empty_sample, "empirical_ccdf of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    for (double x : v)
        if (!(x > 0.0) || !std::isfinite(x))
            throw Error(ErrorCode::invalid_argument, "CCDF magnitudes must be finite and > 0");
    std::sort(v.begin(), v.end());
    EmpiricalCCDF ccdf;
    ccdf.side = side;
    ccdf.n = v.size();
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size();) {
        std::size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        const std::size_t ge = v.size() - i;
        ccdf.points.push_back({v[i], static_cast<double>(ge) / n, ge});
        i = j;
    }
    return ccdf;
}

// ---------------------------------------------------------------------------
// Histogram density

struct Binning {
    enum class Policy { freedman_diaconis, fixed_count, fixed_width };
    Policy policy = Policy::freedman_diaconis;
    std::size_t bins = 50;  // fixed_count
    double width = 0.0;     // fixed_width

    static Binning freedman_diaconis() { return {}; }
    static Binning fixed_count(std::size_t n) { return {Policy::fixed_count, n, 0.0}; }
    static Binning fixed_width(double h) { return {Policy::fixed_width, 0, h}; }
};

struct EmpiricalPDF {
    std::vector<double> bin_edges; // size = densities.size() + 1
    std::vector<double> densities;
    std::size_t n = 0;

    [[nodiscard]] std::size_t bins() const noexcept { return densities.size(); }
    [[nodiscard]] double midpoint(std::size_t i) const noexcept { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
};

/// Linear-interpolation quantile of sorted data (type 7).
inline double quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) throw Error(ErrorCode::empty_sample, "quantile of an empty sample");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Midpoint of the two central order statistics for even n.
inline double median(std::span<const double> values)
{
    if (values.empty()) throw Error(ErrorCode::empty_sample, "median of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// Normalised histogram with equal-width bins spanning [min, max] exactly.
/// Freedman-Diaconis picks the bin count ceil(range / (2 IQR n^-1/3)); the
/// width is then re-spread over the range. Falls back to Sturges when IQR = 0.
inline EmpiricalPDF empirical_pdf(std::span<const double> values, const Binning& binning = {})
{
    if (values.size() < 10)
        throw Error(ErrorCode::insufficient_points, "empirical_pdf needs at least 10 values");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double lo = v.front(), hi = v.back();
    const double range = hi - lo;
    if (!(range > 0.0)) throw Error(ErrorCode::degenerate_sample, "all values are identical");

    const double n = static_cast<double>(v.size());
    std::size_t nbins = 1;
    switch (binning.policy) {
    case Binning::Policy::freedman_diaconis: {
        const double iqr = quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
        if (iqr > 0.0) {
            const double h = 2.0 * iqr * std::cbrt(1.0 / n);
            nbins = static_cast<std::size_t>(std::ceil(range / h));
        } else {
            nbins = static_cast<std::size_t>(std::ceil(std::log2(n) + 1.0));
        }
        break;
    }
    case Binning::Policy::fixed_count:
        nbins = binning.bins;
        break;
    case Binning::Policy::fixed_width:
        if (!(binning.width > 0.0)) throw Error(ErrorCode::invalid_argument, "bin width must be > 0");
        nbins = static_cast<std::size_t>(std::ceil(range / binning.width));
        break;
    }
    nbins = std::max<std::size_t>(nbins, 1);

    EmpiricalPDF pdf;
    pdf.n = v.size();
    pdf.bin_edges.resize(nbins + 1);
    const double width = range / static_cast<double>(nbins);
    for (std::size_t i = 0; i <= nbins; ++i) pdf.bin_edges[i] = lo + width * static_cast<double>(i);
    pdf.bin_edges.back() = hi;

    std::vector<std::size_t> counts(nbins, 0);
    for (double x : v) {
        auto idx = static_cast<std::size_t>((x - lo) / width);
        if (idx >= nbins) idx = nbins - 1;
        // guard the floating-point boundary so every value lands in [edge_i, edge_i+1)
        while (idx > 0 && x < pdf.bin_edges[idx]) --idx;
        while (idx + 1 < nbins && x >= pdf.bin_edges[idx + 1]) ++idx;
        ++counts[idx];
    }
    pdf.densities.resize(nbins);
    for (std::size_t i = 0; i < nbins; ++i) {
        const double w = pdf.bin_edges[i + 1] - pdf.bin_edges[i];
        pdf.densities[i] = static_cast<double>(counts[i]) / (n * w);
    }
    return pdf;
}

// ---------------------------------------------------------------------------
// Moments and skewness

struct CentralMoments {
    double m1 = 0.0; // mean
    double m2 = 0.0; // 1/n central second moment
    double m3 = 0.0; // 1/n central third moment
};

inline CentralMoments central_moments(std::span<const double> values)
{
    if (values.size() < 2) throw Error(ErrorCode::insufficient_points, "central_moments needs n >= 2");
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double x : values) sum += x;
    CentralMoments m;
    m.m1 = sum / n;
    double s2 = 0.0, s3 = 0.0;
    for (double x : values) {
        const double d = x - m.m1;
        s2 += d * d;
        s3 += d * d * d;
    }
    m.m2 = s2 / n;
    m.m3 = s3 / n;
    return m;
}

/// Midpoint of the highest-density bin; ties go to the bin whose midpoint is
/// nearest `median_hint`, then to the lower bin.
inline double mode_estimate(const EmpiricalPDF& pdf, double median_hint)
{
    if (pdf.densities.empty()) throw Error(ErrorCode::degenerate_sample, "empty histogram");
    const double peak = *std::max_element(pdf.densities.begin(), pdf.densities.end());
    std::size_t best = pdf.bins();
    for (std::size_t i = 0; i < pdf.bins(); ++i) {
        if (pdf.densities[i] != peak) continue;
        if (best == pdf.bins()
            || std::abs(pdf.midpoint(i) - median_hint) < std::abs(pdf.midpoint(best) - median_hint))
            best = i;
    }
    return pdf.midpoint(best);
}

struct Skewness {
    double zeta = 0.0;  // m3 / m2^(3/2)
    double zeta1 = 0.0; // (m1 - mode) / sqrt(m2)
    double zeta2 = 0.0; // 3 (m1 - median) / sqrt(m2)
    double mode = 0.0;
    double median = 0.0;
};

inline Skewness skewness_coefficients(std::span<const double> values, const EmpiricalPDF& pdf)
{
    const auto m = central_moments(values);
    if (!(m.m2 > 0.0)) throw Error(ErrorCode::zero_variance, "skewness of a zero-variance sample");
    Skewness s;
    s.median = median(values);
    s.mode = mode_estimate(pdf, s.median);
    const double sd = std::sqrt(m.m2);
    s.zeta = m.m3 / (m.m2 * sd);
    s.zeta1 = (m.m1 - s.mode) / sd;
    s.zeta2 = 3.0 * (m.m1 - s.median) / sd;
    return s;
}

/// One row of the moments table for a single accumulation window.
struct MomentsReport {
    std::size_t tau = 1;
    double m1 = 0.0, m2 = 0.0, m3 = 0.0;
    double mode = 0.0, median = 0.0;
    double zeta = 0.0, zeta1 = 0.0, zeta2 = 0.0;
    std::size_t n = 0;
    std::vector<std::string> warnings;
};

inline MomentsReport moments_report(std::span<const double> values, std::size_t tau,
                                    const Binning& binning = {})
{
    const auto pdf = empirical_pdf(values, binning);
    const auto m = central_moments(values);
    const auto s = skewness_coefficients(values, pdf);
    MomentsReport r;
    r.tau = tau;
    r.n = values.size();
    r.m1 = m.m1;
    r.m2 = m.m2;
    r.m3 = m.m3;
    r.mode = s.mode;
    r.median = s.median;
    r.zeta = s.zeta;
    r.zeta1 = s.zeta1;
    r.zeta2 = s.zeta2;
    return r;
}

struct ScalingTable {
    std::vector<MomentsReport> rows; // in the order of the requested taus
    numeric::LinearFit m1_fit;       // m1(tau) against tau
    numeric::LinearFit m2_fit;       // m2(tau) against tau
    std::vector<double> m1_over_tau;
    std::vector<double> m2_over_tau;
    double mu = 0.0; // de-trending slope used for every row
};

/// Moments for each tau on the de-trended series; rows may be computed in
/// parallel but are always stored in tau order. The linear fits need at
/// least two distinct taus and are left default-initialised otherwise.
inline ScalingTable scaling_table(const LogReturnCurve& curve, std::span<const std::size_t> taus,
                                  const Binning& binning = {}, unsigned threads = 1)
{
    if (taus.empty()) throw Error(ErrorCode::invalid_argument, "scaling_table needs at least one tau");
    for (auto t : taus)
        if (t < 1) throw Error(ErrorCode::invalid_argument, "tau must be >= 1");
    ScalingTable table;
    table.mu = fit_trend(curve, 1).slope;
    table.rows.resize(taus.size());
    parallel_for(taus.size(), threads, [&](std::size_t i) {
        const auto sample = accumulated_returns(curve, taus[i], table.mu);
        table.rows[i] = moments_report(sample.values, taus[i], binning);
    });

    std::vector<double> t, m1, m2;
    for (const auto& row : table.rows) {
        const double tau = static_cast<double>(row.tau);
        t.push_back(tau);
        m1.push_back(row.m1);
        m2.push_back(row.m2);
        table.m1_over_tau.push_back(row.m1 / tau);
        table.m2_over_tau.push_back(row.m2 / tau);
    }
    if (std::adjacent_find(t.begin(), t.end(), std::not_equal_to<>{}) != t.end()) {
        table.m1_fit = numeric::fit_line(t, m1);
        table.m2_fit = numeric::fit_line(t, m2);
    }
    return table;
}

inline ScalingTable scaling_table(const PriceSeries& series, std::span<const std::size_t> taus,
                                  const Binning& binning = {}, unsigned threads = 1)
{
    return scaling_table(log_return_curve(series), taus, binning, threads);
}

} // namespace asymret
