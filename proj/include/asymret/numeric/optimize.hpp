#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace asymret::numeric {

struct Box {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct NelderMeadOptions {
    double initial_step = 0.25; // per coordinate, in the search space's units
    double f_tol = 1e-10;       // spread of simplex values, relative
    double x_tol = 1e-8;        // simplex diameter
    int max_evaluations = 4000;
};

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> trace; // best value after each iteration
};

/// Nelder-Mead simplex minimiser; candidate points are clamped into `box`.
/// Non-finite objective values are treated as +inf.
inline MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                                  std::vector<double> start, const Box& box,
                                  const NelderMeadOptions& opt = {})
{
    const std::size_t dim = start.size();
    auto clamp = [&](std::vector<double>& p) {
        for (std::size_t i = 0; i < dim; ++i) p[i] = std::clamp(p[i], box.lower[i], box.upper[i]);
    };
    MinimizeResult res;
    auto eval = [&](const std::vector<double>& p) {
        ++res.evaluations;
        const double v = objective(p);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    clamp(start);
    std::vector<std::vector<double>> simplex(dim + 1, start);
    for (std::size_t i = 0; i < dim; ++i) {
        simplex[i + 1][i] += opt.initial_step;
        if (simplex[i + 1][i] > box.upper[i]) simplex[i + 1][i] = start[i] - opt.initial_step;
        clamp(simplex[i + 1]);
    }
    std::vector<double> values(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(dim + 1);
    while (res.evaluations < opt.max_evaluations) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[dim - 1];
        res.trace.push_back(values[best]);

        double diameter = 0.0;
        for (std::size_t i = 0; i <= dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[best][j]));
        const double spread = std::abs(values[worst] - values[best]);
        if (std::isfinite(values[worst])
            && spread <= opt.f_tol * (std::abs(values[best]) + opt.f_tol) && diameter <= opt.x_tol) {
            res.converged = true;
            break;
        }
        if (diameter <= opt.x_tol * 1e-3) {
            res.converged = std::isfinite(values[best]);
            break;
        }

        std::vector<double> centroid(dim, 0.0);
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j] / static_cast<double>(dim);
        }
        auto along = [&](double t) {
            std::vector<double> p(dim);
            for (std::size_t j = 0; j < dim; ++j) p[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
            clamp(p);
            return p;
        };

        auto reflected = along(-1.0);
        const double fr = eval(reflected);
        if (fr < values[best]) {
            auto expanded = along(-2.0);
            const double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = std::move(expanded);
                values[worst] = fe;
            } else {
                simplex[worst] = std::move(reflected);
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = std::move(reflected);
            values[worst] = fr;
            continue;
        }
        auto contracted = fr < values[worst] ? along(-0.5) : along(0.5);
        const double fc = eval(contracted);
        if (fc < std::min(fr, values[worst])) {
            simplex[worst] = std::move(contracted);
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= dim; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < dim; ++j)
                simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            clamp(simplex[i]);
            values[i] = eval(simplex[i]);
        }
    }
    const auto best = static_cast<std::size_t>(
        std::min_element(values.begin(), values.end()) - values.begin());
    res.x = simplex[best];
    res.value = values[best];
    return res;
}

} // namespace asymret::numeric
