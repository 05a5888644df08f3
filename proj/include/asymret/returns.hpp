#pragma once

// Cumulative log returns, linear trend fits and de-trended tau-day
// accumulated returns (windows slide by one trading day).

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "asymret/core/error.hpp"
#include "asymret/ingest.hpp"
#include "asymret/numeric/ols.hpp"

namespace asymret {

/// r[t] = log(S_t / S_0) on trading-day indices t = 0..N-1.
struct LogReturnCurve {
    std::vector<double> r;

    [[nodiscard]] std::size_t size() const noexcept { return r.size(); }
    /// Number of daily returns, one less than the number of prices.
    [[nodiscard]] std::size_t daily_count() const noexcept { return r.empty() ? 0 : r.size() - 1; }
};

struct TrendFit {
    std::size_t tau = 1;
    double slope = 0.0; // per trading day
    double intercept = 0.0;
    double residual_rms = 0.0;
};

struct ReturnSample {
    std::size_t tau = 1;
    std::vector<double> values;
    double mu_used = 0.0;
    std::vector<std::size_t> start_indices;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

struct GainLossSplit {
    std::vector<double> gains;  // strictly positive values
    std::vector<double> losses; // magnitudes of strictly negative values
    std::size_t zeros = 0;

    [[nodiscard]] std::size_t total() const noexcept { return gains.size() + losses.size() + zeros; }
};

inline LogReturnCurve log_return_curve(const PriceSeries& series)
{
    LogReturnCurve curve;
    const auto& p = series.prices();
    curve.r.resize(p.size());
    const double log_p0 = std::log(p.front());
    curve.r[0] = 0.0;
    for (std::size_t i = 1; i < p.size(); ++i) curve.r[i] = std::log(p[i]) - log_p0;
    return curve;
}

/// Cumulative curve from a sequence of per-day increments (r[0] = 0).
inline LogReturnCurve curve_from_increments(std::span<const double> increments)
{
    LogReturnCurve curve;
    curve.r.resize(increments.size() + 1);
    double acc = 0.0;
    curve.r[0] = 0.0;
    for (std::size_t i = 0; i < increments.size(); ++i) {
        acc += increments[i];
        curve.r[i + 1] = acc;
    }
    return curve;
}

/// OLS of r[t] on t over the subsampled days t = n * tau. The slope is per
/// day, so fits at different strides are directly comparable.
inline TrendFit fit_trend(const LogReturnCurve& curve, std::size_t tau)
{
    if (tau < 1) throw Error(ErrorCode::invalid_argument, "tau must be >= 1");
    if (curve.size() <= 2 * tau)
        throw Error(ErrorCode::insufficient_points,
                    "curve of length " + std::to_string(curve.size()) + " too short for tau=" + std::to_string(tau));
    std::vector<double> t, r;
    for (std::size_t i = 0; i < curve.size(); i += tau) {
        t.push_back(static_cast<double>(i));
        r.push_back(curve.r[i]);
    }
    const auto fit = numeric::fit_line(t, r);
    return {tau, fit.slope, fit.intercept, fit.residual_rms};
}

/// values[t] = r[t+tau] - r[t] - mu*tau for every start day t.
inline ReturnSample accumulated_returns(const LogReturnCurve& curve, std::size_t tau, double mu)
{
    if (tau < 1) throw Error(ErrorCode::invalid_argument, "tau must be >= 1");
    if (!std::isfinite(mu)) throw Error(ErrorCode::invalid_argument, "mu must be finite");
    if (curve.size() < tau + 1)
        throw Error(ErrorCode::window_too_large,
                    "tau=" + std::to_string(tau) + " exceeds " + std::to_string(curve.daily_count()) + " daily returns");
    ReturnSample sample;
    sample.tau = tau;
    sample.mu_used = mu;
    const std::size_t count = curve.size() - tau;
    sample.values.resize(count);
    sample.start_indices.resize(count);
    const double shift = mu * static_cast<double>(tau);
    for (std::size_t t = 0; t < count; ++t) {
        sample.values[t] = (curve.r[t + tau] - curve.r[t]) - shift;
        sample.start_indices[t] = t;
    }
    return sample;
}

inline GainLossSplit partition_gains_losses(const ReturnSample& sample)
{
    GainLossSplit split;
    for (double v : sample.values) {
        if (v > 0.0)
            split.gains.push_back(v);
        else if (v < 0.0)
            split.losses.push_back(-v);
        else
            ++split.zeros;
    }
    return split;
}

} // namespace asymret
