#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace asymret::numeric {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
};

namespace detail {

// QUADPACK 15-point Kronrod nodes with the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kronrod_x{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_w{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_w{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const noexcept { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double k = fc * kronrod_w[7];
    double g = fc * gauss_w[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kronrod_x[j];
        const double s = f(c - dx) + f(c + dx);
        k += kronrod_w[j] * s;
        if (j % 2 == 1) g += gauss_w[j / 2] * s;
    }
    return {a, b, k * h, std::abs((k - g) * h)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod (G7/K15) on a finite interval.
template <class F>
QuadResult integrate(F&& f, double a, double b, double rel_tol = 1e-12, double abs_tol = 0.0,
                     int max_segments = 4000)
{
    if (a == b) return {};
    std::priority_queue<detail::Segment> heap;
    heap.push(detail::gk15(f, a, b));
    double value = heap.top().value;
    double error = heap.top().error;
    int segments = 1;
    while (error > std::max(abs_tol, rel_tol * std::abs(value))) {
        if (segments >= max_segments) return {value, error, false};
        const detail::Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) return {value, error, false};
        const detail::Segment left = detail::gk15(f, worst.a, mid);
        const detail::Segment right = detail::gk15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        segments += 1;
    }
    // Re-sum to shed drift from the incremental updates.
    double total = 0.0, err = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {total, err, true};
}

/// Integral over [a, inf) on geometrically growing segments of initial width
/// `scale`; stops once successive segments stop contributing. Suits integrands
/// with polynomial or exponential decay.
template <class F>
QuadResult integrate_to_infinity(F&& f, double a, double scale, double rel_tol = 1e-12,
                                 int max_outer = 400)
{
    QuadResult total;
    double lo = a;
    double width = scale;
    int quiet = 0;
    for (int i = 0; i < max_outer; ++i) {
        const double hi = lo + width;
        const double seg_abs = std::abs(total.value) * rel_tol * 1e-2;
        const QuadResult seg = integrate(f, lo, hi, rel_tol, seg_abs);
        total.value += seg.value;
        total.error += seg.error;
        total.converged = total.converged && seg.converged;
        if (!std::isfinite(total.value)) return {total.value, total.error, false};
        if (std::abs(seg.value) <= 1e-17 * std::abs(total.value)) {
            if (++quiet >= 3) return total;
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
        if (!std::isfinite(lo)) break;
    }
    total.converged = false;
    return total;
}

/// Integral over the real line, split at `centre`, each half on geometric segments.
template <class F>
QuadResult integrate_real_line(F&& f, double centre, double scale, double rel_tol = 1e-12)
{
    auto mirrored = [&](double t) { return f(2.0 * centre - t); };
    const QuadResult right = integrate_to_infinity(f, centre, scale, rel_tol);
    const QuadResult left = integrate_to_infinity(mirrored, centre, scale, rel_tol);
    return {right.value + left.value, right.error + left.error,
            right.converged && left.converged};
}

} // namespace asymret::numeric
