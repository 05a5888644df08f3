#pragma once

// Power-law tails of gain/loss CCDFs: region selection, log-log OLS fit,
// parametric-bootstrap confidence band and the order-statistics outlier test
// for dragon kings (pDK, too large) and negative dragon kings (nDK, too small).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "asymret/core/error.hpp"
#include "asymret/core/parallel.hpp"
#include "asymret/core/rng.hpp"
#include "asymret/diststats.hpp"
#include "asymret/numeric/ols.hpp"

namespace asymret {

struct TailPolicy {
    enum class Kind { fraction, threshold };
    Kind kind = Kind::fraction;
    double fraction = 0.1;  // share of distinct CCDF points, largest first
    double threshold = 0.0; // keep points with x >= threshold

    static TailPolicy top_fraction(double f) { return {Kind::fraction, f, 0.0}; }
    static TailPolicy at_threshold(double u) { return {Kind::threshold, 0.1, u}; }
};

/// Tail part of a CCDF; points keep the full-sample survival values.
struct TailRegion {
    Side side = Side::gain;
    double threshold = 0.0;
    std::vector<CcdfPoint> points; // increasing x
    std::size_t k = 0;             // number of distinct tail points
    std::size_t n = 0;             // full sample size

    /// Observations at or above the threshold, counting ties.
    [[nodiscard]] std::size_t observations() const noexcept { return points.empty() ? 0 : points.front().count_ge; }

    /// Tail observations in decreasing order, ties expanded.
    [[nodiscard]] std::vector<double> values_descending() const
    {
        std::vector<double> out;
        out.reserve(observations());
        for (std::size_t j = points.size(); j-- > 0;) {
            const std::size_t above = j + 1 < points.size() ? points[j + 1].count_ge : 0;
            out.insert(out.end(), points[j].count_ge - above, points[j].x);
        }
        return out;
    }
};

inline constexpr std::size_t min_tail_points = 10;

inline TailRegion select_tail(const EmpiricalCCDF& ccdf, const TailPolicy& policy = {})
{
    const std::size_t total = ccdf.points.size();
    std::size_t first = total;
    if (policy.kind == TailPolicy::Kind::fraction) {
        if (!(policy.fraction > 0.0 && policy.fraction <= 1.0))
            throw Error(ErrorCode::invalid_argument, "tail fraction must lie in (0, 1]");
        const auto k = static_cast<std::size_t>(std::floor(policy.fraction * static_cast<double>(total)));
        first = total - std::min(k, total);
    } else {
        if (!(policy.threshold > 0.0)) throw Error(ErrorCode::invalid_argument, "tail threshold must be > 0");
        first = static_cast<std::size_t>(
            std::lower_bound(ccdf.points.begin(), ccdf.points.end(), policy.threshold,
                             [](const CcdfPoint& p, double u) { return p.x < u; })
            - ccdf.points.begin());
    }
    const std::size_t k = total - first;
    if (k < min_tail_points)
        throw Error(ErrorCode::tail_too_small,
                    "tail region has " + std::to_string(k) + " points, need " + std::to_string(min_tail_points));
    TailRegion region;
    region.side = ccdf.side;
    region.n = ccdf.n;
    region.points.assign(ccdf.points.begin() + static_cast<std::ptrdiff_t>(first), ccdf.points.end());
    region.k = k;
    region.threshold = region.points.front().x;
    if (policy.kind == TailPolicy::Kind::threshold) region.threshold = policy.threshold;
    return region;
}

// ---------------------------------------------------------------------------

struct BandPoint {
    double x = 0.0;
    double survival = 0.0;
    double fitted = 0.0;      // survival on the fitted line at x
    double x_lo = 0.0;        // magnitude bounds at this survival level
    double x_hi = 0.0;
    double survival_lo = 0.0; // survival bounds read vertically at x
    double survival_hi = 0.0;

    [[nodiscard]] bool covers() const noexcept { return x >= x_lo && x <= x_hi; }
};

struct ConfidenceBand {
    double level = 0.95;
    std::size_t n_boot = 0;
    std::uint64_t seed = 0;
    std::vector<BandPoint> points; // matches region.points order

    [[nodiscard]] double coverage() const noexcept
    {
        if (points.empty()) return 0.0;
        std::size_t in = 0;
        for (const auto& p : points) in += p.covers() ? 1 : 0;
        return static_cast<double>(in) / static_cast<double>(points.size());
    }
};

enum class OutlierClass { pDK, nDK };

constexpr const char* to_string(OutlierClass c) noexcept { return c == OutlierClass::pDK ? "pDK" : "nDK"; }

struct RankTest {
    std::size_t rank = 0;   // 1 = largest exceedance
    double x = 0.0;
    double share = 0.0;     // log-excess of this rank over the total log-excess
    double cdf = 0.0;       // null P(share <= observed)
    double p_value = 1.0;   // two-sided
    OutlierClass direction = OutlierClass::pDK;
};

struct Outlier {
    std::size_t rank = 0;
    double x = 0.0;
    OutlierClass kind = OutlierClass::pDK;
    double p_value = 1.0;
};

struct TailFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    double ks_distance = 0.0;   // tail observations vs the fitted Pareto law
    double hill_exponent = 0.0; // diagnostic only
    std::size_t k = 0;
    double threshold = 0.0;
    double ci_level = 0.95;
    ConfidenceBand band;
    std::vector<Outlier> outliers;

    [[nodiscard]] double survival_at(double x) const { return std::pow(10.0, intercept + slope * std::log10(x)); }
    /// Magnitude at which the fitted line reaches survival s.
    [[nodiscard]] double magnitude_at(double s) const { return std::pow(10.0, (std::log10(s) - intercept) / slope); }
};

/// OLS of log10(survival) on log10(x) over the region points.
inline TailFit fit_tail_loglog(const TailRegion& region)
{
    if (region.points.size() < 2) throw Error(ErrorCode::tail_too_small, "tail region is empty");
    std::vector<double> lx, ly;
    lx.reserve(region.points.size());
    ly.reserve(region.points.size());
    for (const auto& p : region.points) {
        lx.push_back(std::log10(p.x));
        ly.push_back(std::log10(p.survival));
    }
    const auto line = numeric::fit_line(lx, ly);
    TailFit fit;
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    fit.slope_stderr = line.slope_stderr;
    fit.r_squared = line.r_squared;
    fit.k = region.k;
    fit.threshold = region.threshold;

    // KS distance and Hill estimate over the observations above the threshold.
    const auto desc = region.values_descending();
    const double u = region.threshold;
    const double a = -fit.slope;
    const double m = static_cast<double>(desc.size());
    double ks = 0.0, log_sum = 0.0;
    std::size_t exceed = 0;
    for (std::size_t i = 0; i < desc.size(); ++i) {
        // desc[i] has i larger observations; empirical CDF jumps across it
        const double model = a > 0.0 ? 1.0 - std::pow(desc[i] / u, -a) : 0.0;
        const double above = static_cast<double>(i) / m;
        ks = std::max({ks, std::abs((1.0 - above) - model), std::abs((1.0 - above - 1.0 / m) - model)});
        if (desc[i] > u) {
            log_sum += std::log(desc[i] / u);
            ++exceed;
        }
    }
    fit.ks_distance = ks;
    fit.hill_exponent = log_sum > 0.0 ? static_cast<double>(exceed) / log_sum
                                      : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

// ---------------------------------------------------------------------------
// Confidence band

namespace detail {

inline void check_level(double level, double lo = 0.5)
{
    if (!(level > lo && level < 1.0))
        throw Error(ErrorCode::invalid_level, "level must lie in (" + std::to_string(lo) + ", 1)");
}

/// Type-7 quantile of an unsorted buffer (reordered in place).
inline double quantile_inplace(std::vector<double>& v, double p)
{
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
    const double a = v[lo];
    if (lo + 1 >= v.size()) return a;
    const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
    return a + (h - static_cast<double>(lo)) * (b - a);
}

/// Reads the band vertically: survival bounds at each data x, interpolating
/// the band curves (log10 x_lo, log10 s) and (log10 x_hi, log10 s)
/// piecewise-linearly and extending them beyond the ends with the fitted slope.
inline void vertical_bounds(ConfidenceBand& band, const TailFit& fit)
{
    const std::size_t n = band.points.size();
    std::vector<double> ls(n), c_lo(n), c_hi(n);
    for (std::size_t j = 0; j < n; ++j) {
        ls[j] = std::log10(band.points[j].survival);
        c_lo[j] = std::log10(band.points[j].x_lo);
        c_hi[j] = std::log10(band.points[j].x_hi);
    }
    // both curves must increase in x along the region; monotone repair only
    // ever moves them away from the fitted line
    for (std::size_t j = 1; j < n; ++j) c_hi[j] = std::max(c_hi[j], c_hi[j - 1]);
    for (std::size_t j = n - 1; j-- > 0;) c_lo[j] = std::min(c_lo[j], c_lo[j + 1]);
    auto read = [&](const std::vector<double>& c, double lx) {
        if (lx <= c.front()) return ls.front() + fit.slope * (lx - c.front());
        if (lx >= c.back()) return ls.back() + fit.slope * (lx - c.back());
        const auto it = std::upper_bound(c.begin(), c.end(), lx);
        const std::size_t j = static_cast<std::size_t>(it - c.begin());
        const double w = c[j] > c[j - 1] ? (lx - c[j - 1]) / (c[j] - c[j - 1]) : 0.0;
        return ls[j - 1] + w * (ls[j] - ls[j - 1]);
    };
    for (auto& p : band.points) {
        const double lx = std::log10(p.x);
        p.survival_lo = std::pow(10.0, read(c_lo, lx));
        p.survival_hi = std::pow(10.0, read(c_hi, lx));
    }
}

} // namespace detail

struct BandOptions {
    unsigned threads = 1;
};

/// Parametric-bootstrap band. Each replicate draws the region's observation
/// count from Pareto(-slope, threshold), keeps the data's survival levels
/// i/n, refits the same OLS line and records each rank's log10-magnitude
/// residual against its own fit. Per-rank residual quantiles at (1 +- level)/2
/// are added to the data's fitted magnitude at that survival level.
inline ConfidenceBand ccdf_confidence_band(const TailRegion& region, const TailFit& fit, double level,
                                           std::size_t n_boot, std::uint64_t seed,
                                           const BandOptions& opt = {})
{
    detail::check_level(level);
    if (n_boot < 1000) throw Error(ErrorCode::invalid_argument, "n_boot must be >= 1000");
    if (!(fit.slope < 0.0)) throw Error(ErrorCode::invalid_argument, "band needs a negative tail slope");

    const std::size_t kr = region.observations();
    const double n = static_cast<double>(region.n);
    const double a = -fit.slope;
    const double log10_u = std::log10(region.threshold);
    const double inv_a_ln10 = 1.0 / (a * std::log(10.0));

    // rank i (1-based, largest first) sits at survival i/n
    std::vector<double> ly(kr);
    for (std::size_t i = 0; i < kr; ++i) ly[i] = std::log10(static_cast<double>(i + 1) / n);
    double ly_mean = 0.0;
    for (double v : ly) ly_mean += v;
    ly_mean /= static_cast<double>(kr);

    std::vector<double> residuals(n_boot * kr); // replicate-major
    parallel_for(n_boot, opt.threads, [&](std::size_t b) {
        Rng rng(derive_seed(seed, "bootstrap", b));
        double* res = residuals.data() + b * kr;
        // Renyi representation: ascending exponential order statistics, so
        // the largest Pareto draw ends up at rank 1 without sorting.
        double e = 0.0;
        for (std::size_t j = 0; j < kr; ++j) {
            e += rng.exponential() / static_cast<double>(kr - j);
            res[kr - 1 - j] = log10_u + e * inv_a_ln10;
        }
        double x_mean = 0.0;
        for (std::size_t i = 0; i < kr; ++i) x_mean += res[i];
        x_mean /= static_cast<double>(kr);
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < kr; ++i) {
            const double dx = res[i] - x_mean;
            sxx += dx * dx;
            sxy += dx * (ly[i] - ly_mean);
        }
        const double slope = sxy / sxx;
        const double icpt = ly_mean - slope * x_mean;
        for (std::size_t i = 0; i < kr; ++i) res[i] -= (ly[i] - icpt) / slope;
    });

    ConfidenceBand band;
    band.level = level;
    band.n_boot = n_boot;
    band.seed = seed;
    band.points.resize(region.points.size());
    std::vector<double> column(n_boot);
    for (std::size_t j = 0; j < region.points.size(); ++j) {
        const auto& p = region.points[j];
        const std::size_t rank = p.count_ge; // 1-based
        for (std::size_t b = 0; b < n_boot; ++b) column[b] = residuals[b * kr + rank - 1];
        const double q_lo = detail::quantile_inplace(column, 0.5 * (1.0 - level));
        const double q_hi = detail::quantile_inplace(column, 0.5 * (1.0 + level));
        const double x_fit = (std::log10(p.survival) - fit.intercept) / fit.slope;
        BandPoint& bp = band.points[j];
        bp.x = p.x;
        bp.survival = p.survival;
        bp.fitted = fit.survival_at(p.x);
        bp.x_lo = std::pow(10.0, x_fit + q_lo);
        bp.x_hi = std::pow(10.0, x_fit + q_hi);
    }
    detail::vertical_bounds(band, fit);
    return band;
}

// ---------------------------------------------------------------------------
// U-test

namespace detail {

using mp_float = boost::multiprecision::cpp_bin_float_100;

/// P(G_(r) <= x) where G_(r) is the r-th largest of m uniform spacings, i.e.
/// the r-th largest of m i.i.d. exponentials divided by their sum:
///   P(G_(r) > x) = sum_{j=r}^{min(m, floor(1/x))} (-1)^(j-r) C(j-1, r-1) C(m, j) (1 - j x)^(m-1).
/// The alternating sum is evaluated in 100-digit arithmetic. When its largest
/// term exceeds ~1e85 the sum cannot be resolved; that only happens deep in
/// the lower tail (x m of order 1 or less), where the CDF is returned as 0.
inline double spacing_order_cdf(std::size_t r, std::size_t m, double x)
{
    if (!(x > 0.0)) return 0.0;
    if (x >= 1.0) return 1.0;
    const double md = static_cast<double>(m);
    double max_log10 = -std::numeric_limits<double>::infinity();
    std::size_t j_end = r;
    for (std::size_t j = r; j <= m; ++j) {
        const double jd = static_cast<double>(j);
        if (jd * x >= 1.0) break;
        const double lt = std::lgamma(jd) - std::lgamma(static_cast<double>(r)) - std::lgamma(jd - r + 1.0)
                          + std::lgamma(md + 1.0) - std::lgamma(jd + 1.0) - std::lgamma(md - jd + 1.0)
                          + (md - 1.0) * std::log1p(-jd * x);
        max_log10 = std::max(max_log10, lt / std::log(10.0));
        j_end = j + 1;
    }
    if (j_end == r) return 1.0; // r x >= 1: survival is zero
    if (max_log10 > 85.0) return 0.0;

    const mp_float xm(x);
    mp_float c1(1); // C(j-1, r-1)
    mp_float c2(1); // C(m, j)
    for (std::size_t i = 0; i < r; ++i) c2 = c2 * mp_float(m - i) / mp_float(i + 1);
    mp_float surv(0);
    for (std::size_t j = r; j < j_end; ++j) {
        const mp_float base = mp_float(1) - mp_float(j) * xm;
        mp_float term = c1 * c2 * boost::multiprecision::pow(base, static_cast<int>(m - 1));
        if ((j - r) % 2 == 1) term = -term;
        surv += term;
        c1 = c1 * mp_float(j) / mp_float(j - r + 1);
        c2 = c2 * mp_float(m - j) / mp_float(j + 1);
    }
    const double s = std::clamp(static_cast<double>(surv), 0.0, 1.0);
    return 1.0 - s;
}

} // namespace detail

struct UTestOptions {
    bool bonferroni = false; // divide the threshold 1 - level by max_rank
};

/// Per-rank statistics for ranks 1..max_rank. Exceedances above the
/// threshold become y = log(x / u), exponential under a Pareto tail whatever
/// the exponent. The r-th largest y divided by the sum of all y is compared
/// with its exact null law; two-sided p-value.
inline std::vector<RankTest> u_test_ranks(const TailRegion& region, std::size_t max_rank)
{
    std::vector<double> y;
    for (double x : region.values_descending())
        if (x > region.threshold) y.push_back(std::log(x / region.threshold));
    const std::size_t m = y.size();
    if (max_rank < 1 || max_rank >= m)
        throw Error(ErrorCode::rank_out_of_range,
                    "max_rank " + std::to_string(max_rank) + " needs more than that many exceedances (have "
                        + std::to_string(m) + ")");
    double total = 0.0;
    for (double v : y) total += v;
    std::vector<RankTest> out;
    const auto desc = region.values_descending();
    for (std::size_t r = 1; r <= max_rank; ++r) {
        RankTest t;
        t.rank = r;
        t.x = desc[r - 1];
        t.share = y[r - 1] / total;
        t.cdf = detail::spacing_order_cdf(r, m, t.share);
        const double surv = 1.0 - t.cdf;
        t.p_value = std::min(1.0, 2.0 * std::min(t.cdf, surv));
        t.direction = surv < 0.5 ? OutlierClass::pDK : OutlierClass::nDK;
        out.push_back(t);
    }
    return out;
}

inline std::vector<Outlier> u_test_outliers(const TailRegion& region, double level, std::size_t max_rank = 10,
                                            const UTestOptions& opt = {})
{
    detail::check_level(level, 0.0);
    double alpha = 1.0 - level;
    if (opt.bonferroni) alpha /= static_cast<double>(max_rank);
    std::vector<Outlier> flagged;
    for (const auto& t : u_test_ranks(region, max_rank))
        if (t.p_value < alpha) flagged.push_back({t.rank, t.x, t.direction, t.p_value});
    return flagged;
}

} // namespace asymret
