#pragma once

// Modified Bessel function of the second kind K_nu(x) for real order and the
// confluent hypergeometric function of the second kind U(a, b, x) (Tricomi).
// Both have log-domain entry points so the return densities can combine
// enormous Bessel values with tiny prefactors without overflow.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "asymret/core/error.hpp"
#include "asymret/numeric/quadrature.hpp"

namespace asymret::numeric {

namespace detail {

// Coefficients of 1/Gamma(1+z) = sum_k c_k z^(k-1) (Abramowitz & Stegun 6.1.34).
inline constexpr double inv_gamma_c[] = {
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
};

struct TemmeGammas {
    double gam1;  // (1/G(1-mu) - 1/G(1+mu)) / (2 mu)
    double gam2;  // (1/G(1-mu) + 1/G(1+mu)) / 2
    double gampl; // 1/G(1+mu)
    double gammi; // 1/G(1-mu)
};

inline TemmeGammas temme_gammas(double mu)
{
    TemmeGammas g{};
    g.gampl = 1.0 / std::tgamma(1.0 + mu);
    g.gammi = 1.0 / std::tgamma(1.0 - mu);
    g.gam2 = 0.5 * (g.gammi + g.gampl);
    if (std::abs(mu) < 1e-3) {
        const double m2 = mu * mu;
        g.gam1 = -(inv_gamma_c[1] + m2 * (inv_gamma_c[3] + m2 * (inv_gamma_c[5] + m2 * (inv_gamma_c[7] + m2 * inv_gamma_c[9]))));
    } else {
        g.gam1 = (g.gammi - g.gampl) / (2.0 * mu);
    }
    return g;
}

} // namespace detail

/// log K_nu(x), x > 0. Temme's series for x < 2, Steed's continued fraction
/// otherwise, then forward recurrence in the order (stable for K).
inline double log_bessel_k(double nu, double x)
{
    if (!(x > 0.0) || !std::isfinite(x))
        throw Error(ErrorCode::non_positive_argument, "bessel_k requires x > 0");
    nu = std::abs(nu);
    constexpr double eps = 1e-16;
    constexpr int max_iter = 100000;
    const int nl = static_cast<int>(nu + 0.5);
    const double mu = nu - nl;
    const double mu2 = mu * mu;
    const double xi = 1.0 / x;
    const double xi2 = 2.0 * xi;

    double k_mu = 0.0, k_mu1 = 0.0;
    double log_scale = 0.0;
    if (x < 2.0) {
        const double x2 = 0.5 * x;
        const double pimu = std::numbers::pi * mu;
        const double fact = std::abs(pimu) < eps ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = mu * d;
        const double fact2 = std::abs(e) < eps ? 1.0 : std::sinh(e) / e;
        const auto g = detail::temme_gammas(mu);
        double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / g.gampl;
        double q = 0.5 / (e * g.gammi);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        int i = 1;
        for (; i <= max_iter; ++i) {
            ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
            c *= d / i;
            p /= (i - mu);
            q /= (i + mu);
            const double del = c * ff;
            sum += del;
            sum1 += c * (p - i * ff);
            if (std::abs(del) < std::abs(sum) * eps) break;
        }
        if (i > max_iter) throw Error(ErrorCode::nonconvergence, "bessel_k: Temme series");
        k_mu = sum;
        k_mu1 = sum1 * xi2;
    } else {
        double b = 2.0 * (1.0 + x);
        double d = 1.0 / b;
        double h = d, delh = d;
        double q1 = 0.0, q2 = 1.0;
        const double a1 = 0.25 - mu2;
        double q = a1, c = a1;
        double a = -a1;
        double s = 1.0 + q * delh;
        int i = 2;
        for (; i <= max_iter; ++i) {
            a -= 2 * (i - 1);
            c = -a * c / i;
            const double qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            const double dels = q * delh;
            s += dels;
            if (std::abs(dels / s) < eps) break;
        }
        if (i > max_iter) throw Error(ErrorCode::nonconvergence, "bessel_k: continued fraction");
        h = a1 * h;
        // Carry exp(-x) in the log scale so large x does not underflow.
        log_scale = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x - std::log(s);
        k_mu = 1.0;
        k_mu1 = (mu + x + 0.5 - h) * xi;
    }

    constexpr double big = 1e280;
    for (int i = 1; i <= nl; ++i) {
        const double next = (mu + i) * xi2 * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
        if (std::abs(k_mu1) > big) {
            k_mu /= big;
            k_mu1 /= big;
            log_scale += std::log(big);
        }
    }
    return log_scale + std::log(k_mu);
}

/// K_nu(x); throws numeric_overflow when the value leaves the double range.
inline double bessel_k(double nu, double x)
{
    const double lk = log_bessel_k(nu, x);
    if (lk > std::log(std::numeric_limits<double>::max()))
        throw Error(ErrorCode::numeric_overflow, "bessel_k overflows double");
    if (lk < std::log(std::numeric_limits<double>::min()))
        throw Error(ErrorCode::numeric_overflow, "bessel_k underflows double");
    return std::exp(lk);
}

namespace detail {

// Asymptotic series x^-a * sum (a)_n (a-b+1)_n / n! (-x)^-n. Returns false if
// the terms start growing before reaching double precision.
inline bool hyper_u_asymptotic(double a, double b, double x, double& log_value)
{
    double term = 1.0, sum = 1.0;
    for (int n = 1; n < 500; ++n) {
        const double next = term * (a + n - 1) * (a - b + n) / (n * -x);
        if (std::abs(next) > std::abs(term) && n > 1) return false;
        term = next;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) {
            if (!(sum > 0.0)) return false;
            log_value = -a * std::log(x) + std::log(sum);
            return true;
        }
    }
    return false;
}

inline double hyper_u_log_integral(double a, double b, double x)
{
    constexpr double tol = 1e-13;
    const double lg = std::lgamma(a);
    QuadResult r;
    double log_prefactor = 0.0;
    if (x >= 1.0) {
        // t = s/x : U = x^-a / G(a) * int e^-s s^(a-1) (1 + s/x)^(b-a-1) ds
        log_prefactor = -a * std::log(x);
        if (a >= 1.0) {
            auto f = [&](double s) {
                if (s <= 0.0) return a == 1.0 ? 1.0 : 0.0;
                return std::exp(-s + (a - 1.0) * std::log(s) - lg + (b - a - 1.0) * std::log1p(s / x));
            };
            r = integrate_to_infinity(f, 0.0, std::max(1.0, 0.5 * a), tol);
        } else {
            const double lga1 = std::lgamma(a + 1.0);
            auto f = [&](double w) {
                const double s = std::pow(w, 1.0 / a);
                return std::exp(-s - lga1 + (b - a - 1.0) * std::log1p(s / x));
            };
            r = integrate_to_infinity(f, 0.0, 1.0, tol);
        }
    } else {
        if (a >= 1.0) {
            auto f = [&](double t) {
                if (t <= 0.0) return a == 1.0 ? std::exp(-lg) : 0.0;
                return std::exp(-x * t + (a - 1.0) * std::log(t) + (b - a - 1.0) * std::log1p(t) - lg);
            };
            r = integrate_to_infinity(f, 0.0, std::max(1.0, 0.5 * a), tol);
        } else {
            const double lga1 = std::lgamma(a + 1.0);
            auto f = [&](double w) {
                const double t = std::pow(w, 1.0 / a);
                return std::exp(-x * t + (b - a - 1.0) * std::log1p(t) - lga1);
            };
            r = integrate_to_infinity(f, 0.0, 1.0, tol);
        }
    }
    if (!r.converged || !(r.value > 0.0) || !std::isfinite(r.value))
        throw Error(ErrorCode::nonconvergence,
                    "hyper_u quadrature failed at a=" + std::to_string(a) + " b=" + std::to_string(b)
                        + " x=" + std::to_string(x));
    return log_prefactor + std::log(r.value);
}

} // namespace detail

/// log U(a, b, x) for x > 0. Requires a > 0, or a - b + 1 > 0 (via Kummer's
/// transformation U(a,b,x) = x^(1-b) U(a-b+1, 2-b, x)).
inline double log_hyper_u(double a, double b, double x)
{
    if (!(x > 0.0) || !std::isfinite(x))
        throw Error(ErrorCode::non_positive_argument, "hyper_u requires x > 0");
    if (!(a > 0.0)) {
        if (a - b + 1.0 > 0.0) return (1.0 - b) * std::log(x) + log_hyper_u(a - b + 1.0, 2.0 - b, x);
        throw Error(ErrorCode::invalid_params, "hyper_u: need a > 0 or a - b + 1 > 0");
    }
    if (x > 25.0) {
        double lv = 0.0;
        if (detail::hyper_u_asymptotic(a, b, x, lv)) return lv;
    }
    return detail::hyper_u_log_integral(a, b, x);
}

inline double hyper_u(double a, double b, double x)
{
    const double lu = log_hyper_u(a, b, x);
    if (lu > std::log(std::numeric_limits<double>::max()))
        throw Error(ErrorCode::numeric_overflow, "hyper_u overflows double");
    if (lu < std::log(std::numeric_limits<double>::min()))
        throw Error(ErrorCode::numeric_overflow, "hyper_u underflows double");
    return std::exp(lu);
}

/// U(a, b, 0+) for b < 1: G(1-b) / G(a-b+1).
inline double log_hyper_u_at_zero(double a, double b)
{
    if (!(b < 1.0)) return std::numeric_limits<double>::infinity();
    return std::lgamma(1.0 - b) - std::lgamma(a - b + 1.0);
}

} // namespace asymret::numeric
