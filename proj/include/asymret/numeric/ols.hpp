#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include "asymret/core/error.hpp"

namespace asymret::numeric {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0; // NaN when fewer than three points
    double r_squared = 1.0;
    double residual_rms = 0.0;
    std::size_t n = 0;

    [[nodiscard]] double operator()(double x) const noexcept { return intercept + slope * x; }
};

/// Ordinary least squares y = intercept + slope * x, two-pass (centred) sums.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw Error(ErrorCode::invalid_argument, "fit_line: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw Error(ErrorCode::insufficient_points, "fit_line needs at least two points");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::degenerate_x, "all abscissae are equal");

    LinearFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;

    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - fit(x[i]);
        sse += r * r;
    }
    fit.residual_rms = std::sqrt(sse / static_cast<double>(n));
    fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    fit.slope_stderr = n > 2 ? std::sqrt(sse / static_cast<double>(n - 2) / sxx)
                             : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

} // namespace asymret::numeric
