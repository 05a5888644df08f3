#pragma once

// Stochastic-variance models (multiplicative MM, Heston HM, combined MHM):
// Euler-Maruyama simulators, stationary variance laws, product-distribution
// return densities and maximum-likelihood fits. Time unit is one trading day.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "asymret/core/error.hpp"
#include "asymret/core/rng.hpp"
#include "asymret/diststats.hpp"
#include "asymret/numeric/optimize.hpp"
#include "asymret/numeric/quadrature.hpp"
#include "asymret/numeric/special.hpp"
#include "asymret/returns.hpp"

namespace asymret {

enum class VarianceModel { MM, HM, MHM };

constexpr const char* to_string(VarianceModel m) noexcept
{
    switch (m) {
    case VarianceModel::MM: return "MM";
    case VarianceModel::HM: return "HM";
    case VarianceModel::MHM: return "MHM";
    }
    return "?";
}

/// dv = gamma (theta - v) dt + sqrt(kappa_m^2 v^2 + kappa_h^2 v) dW.
struct SvModelParams {
    double gamma = 1.0;
    double theta = 1.0;
    double kappa_m = 0.0;
    double kappa_h = 0.0;

    [[nodiscard]] double alpha() const noexcept { return 2.0 * gamma * theta / (kappa_m * kappa_m); }
    [[nodiscard]] double p() const noexcept { return 2.0 * gamma * theta / (kappa_h * kappa_h); }
    [[nodiscard]] double q() const noexcept { return 1.0 + 2.0 * gamma / (kappa_m * kappa_m); }
    [[nodiscard]] double beta() const noexcept { return (kappa_h * kappa_h) / (kappa_m * kappa_m); }

    void validate() const
    {
        if (!(gamma > 0.0) || !(theta > 0.0) || !std::isfinite(gamma) || !std::isfinite(theta))
            throw Error(ErrorCode::invalid_params, "gamma and theta must be finite and > 0");
        if (!(kappa_m >= 0.0) || !(kappa_h >= 0.0))
            throw Error(ErrorCode::invalid_params, "kappa_m and kappa_h must be >= 0");
        if (kappa_m == 0.0 && kappa_h == 0.0)
            throw Error(ErrorCode::invalid_params, "kappa_m and kappa_h cannot both be zero");
    }

    /// MM parameters from (theta, alpha); gamma only sets the time scale.
    static SvModelParams mm(double theta, double alpha, double gamma = 1.0)
    {
        if (!(theta > 0.0) || !(alpha > 0.0)) throw Error(ErrorCode::invalid_params, "theta, alpha must be > 0");
        return {gamma, theta, std::sqrt(2.0 * gamma * theta / alpha), 0.0};
    }

    /// MHM parameters from (theta, p, q); beta follows as theta (q - 1) / p.
    static SvModelParams mhm(double theta, double p, double q, double gamma = 1.0)
    {
        if (!(theta > 0.0) || !(p > 0.0) || !(q > 1.0))
            throw Error(ErrorCode::invalid_params, "need theta > 0, p > 0, q > 1");
        return {gamma, theta, std::sqrt(2.0 * gamma / (q - 1.0)), std::sqrt(2.0 * gamma * theta / p)};
    }

    /// HM parameters from (theta, p); stationary law Gamma(p, theta / p).
    static SvModelParams hm(double theta, double kappa_h, double gamma)
    {
        return {gamma, theta, 0.0, kappa_h};
    }
};

/// Day count at which the Ito drift -theta tau / 2 of the mean competes with
/// the return scale, tau ~ 4 / theta.
constexpr double ito_crossover_tau(double theta) noexcept { return 4.0 / theta; }

// ---------------------------------------------------------------------------
// Simulation

struct VariancePath {
    double dt = 0.01;           // integration step (days)
    std::size_t stride = 1;     // integration steps per stored value
    std::vector<double> values; // values[0] = v0
    VarianceModel model = VarianceModel::MM;
    std::uint64_t seed = 0;
    std::size_t clamp_events = 0; // steps whose raw update went negative

    [[nodiscard]] double sample_dt() const noexcept { return dt * static_cast<double>(stride); }
};

/// Euler-Maruyama with full truncation: v+ = max(v, 0) inside drift and
/// diffusion, stored values clamped at zero. `n_steps` integration steps;
/// every `record_stride`-th state is stored.
inline VariancePath simulate_variance(const SvModelParams& params, VarianceModel model, double dt,
                                      std::size_t n_steps, double v0, std::uint64_t seed,
                                      std::size_t record_stride = 1)
{
    params.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::invalid_params, "dt must be > 0");
    if (!(v0 > 0.0)) throw Error(ErrorCode::invalid_params, "v0 must be > 0");
    if (record_stride < 1) throw Error(ErrorCode::invalid_params, "record_stride must be >= 1");

    const double km2 = params.kappa_m * params.kappa_m;
    const double kh2 = params.kappa_h * params.kappa_h;
    const double sdt = std::sqrt(dt);
    auto diffusion2 = [&](double v) {
        switch (model) {
        case VarianceModel::MM: return km2 * v * v;
        case VarianceModel::HM: return kh2 * v;
        case VarianceModel::MHM: return km2 * v * v + kh2 * v;
        }
        return 0.0;
    };

    VariancePath path;
    path.dt = dt;
    path.stride = record_stride;
    path.model = model;
    path.seed = seed;
    path.values.reserve(n_steps / record_stride + 1);
    path.values.push_back(v0);

    Rng rng(seed);
    double v = v0;
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double vp = std::max(v, 0.0);
        v = v + params.gamma * (params.theta - vp) * dt + std::sqrt(diffusion2(vp)) * sdt * rng.normal();
        if (v < 0.0) ++path.clamp_events;
        if (i % record_stride == 0) path.values.push_back(std::max(v, 0.0));
    }
    return path;
}

enum class DriftMode { none, ito_half };

struct ReturnSimOptions {
    double drift_offset = 0.0; // additive drift per day, the phenomenological re-centring
};

/// One return per stored interval of length h = path.sample_dt(), using the
/// variance at the start of the interval:
///   dx = offset h - [ito_half] v h / 2 + sqrt(v h) Z,  Z independent of the variance noise.
inline ReturnSample simulate_returns(const VariancePath& path, DriftMode drift_mode, std::uint64_t seed,
                                     const ReturnSimOptions& opt = {})
{
    if (path.values.size() < 2) throw Error(ErrorCode::invalid_argument, "variance path too short");
    const double h = path.sample_dt();
    ReturnSample out;
    out.tau = 1;
    out.values.resize(path.values.size() - 1);
    out.start_indices.resize(out.values.size());
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < path.values.size(); ++i) {
        const double v = path.values[i];
        double dx = opt.drift_offset * h + std::sqrt(v * h) * rng.normal();
        if (drift_mode == DriftMode::ito_half) dx -= 0.5 * v * h;
        out.values[i] = dx;
        out.start_indices[i] = i;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stationary variance laws

namespace detail {

inline void check_positive_v(double v)
{
    if (!(v > 0.0)) throw Error(ErrorCode::non_positive_argument, "variance argument must be > 0");
}

inline void check_mm(const SvModelParams& p)
{
    p.validate();
    if (!(p.kappa_m > 0.0)) throw Error(ErrorCode::invalid_params, "MM law needs kappa_m > 0");
}

inline void check_mhm(const SvModelParams& p)
{
    p.validate();
    if (!(p.kappa_m > 0.0) || !(p.kappa_h > 0.0))
        throw Error(ErrorCode::invalid_params, "MHM law needs kappa_m > 0 and kappa_h > 0");
}

inline void check_tau(double tau)
{
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::invalid_tau, "tau must be > 0");
}

} // namespace detail

/// Inverse-Gamma, shape alpha/theta + 1 and scale alpha (MM stationary law).
inline double iga_log_density(double v, const SvModelParams& params)
{
    detail::check_positive_v(v);
    detail::check_mm(params);
    const double alpha = params.alpha();
    const double a = alpha / params.theta + 1.0;
    return a * std::log(alpha) - std::lgamma(a) - (a + 1.0) * std::log(v) - alpha / v;
}

inline double iga_density(double v, const SvModelParams& params) { return std::exp(iga_log_density(v, params)); }

inline double iga_cdf(double v, const SvModelParams& params)
{
    if (!(v > 0.0)) return 0.0;
    detail::check_mm(params);
    const double alpha = params.alpha();
    return boost::math::gamma_q(alpha / params.theta + 1.0, alpha / v);
}

/// Beta prime BP(v; p, q, beta) = v^(p-1) (1 + v/beta)^(-p-q) / (beta^p B(p, q)),
/// the MHM stationary law.
inline double betaprime_log_density(double v, const SvModelParams& params)
{
    detail::check_positive_v(v);
    detail::check_mhm(params);
    const double p = params.p(), q = params.q(), b = params.beta();
    const double lbeta = std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
    return (p - 1.0) * std::log(v) - (p + q) * std::log1p(v / b) - p * std::log(b) - lbeta;
}

inline double betaprime_density(double v, const SvModelParams& params)
{
    return std::exp(betaprime_log_density(v, params));
}

inline double betaprime_cdf(double v, const SvModelParams& params)
{
    if (!(v > 0.0)) return 0.0;
    detail::check_mhm(params);
    const double b = params.beta();
    return boost::math::ibeta(params.p(), params.q(), v / (b + v));
}

// ---------------------------------------------------------------------------
// Return densities over a window tau

/// Student density of the MM product distribution.
inline double student_log_density(double z, const SvModelParams& params, double tau)
{
    detail::check_tau(tau);
    detail::check_mm(params);
    const double alpha = params.alpha();
    const double a = alpha / params.theta + 1.0;
    const double s2 = 2.0 * alpha * tau;
    return std::lgamma(a + 0.5) - 0.5 * std::log(std::numbers::pi) - std::lgamma(a) - 0.5 * std::log(s2)
           - (a + 0.5) * std::log1p(z * z / s2);
}

inline double student_return_density(double z, const SvModelParams& params, double tau)
{
    return std::exp(student_log_density(z, params, tau));
}

inline double student_cdf(double z, const SvModelParams& params, double tau)
{
    detail::check_tau(tau);
    detail::check_mm(params);
    const double alpha = params.alpha();
    const double a = alpha / params.theta + 1.0;
    const double s2 = 2.0 * alpha * tau;
    // |t|-tail of the Student law with 2a degrees of freedom
    const double tail = 0.5 * boost::math::ibeta(a, 0.5, s2 / (s2 + z * z));
    return z < 0.0 ? tail : 1.0 - tail;
}

/// MHM product distribution via the confluent hypergeometric U:
///   G(q+1/2) U(q+1/2, 3/2-p, z^2/(2 beta tau)) / (B(p,q) sqrt(2 pi beta tau)).
/// Finite at z = 0 only when p > 1/2.
inline double mhm_log_density(double z, const SvModelParams& params, double tau)
{
    detail::check_tau(tau);
    detail::check_mhm(params);
    const double p = params.p(), q = params.q();
    const double bt = params.beta() * tau;
    const double x = z * z / (2.0 * bt);
    const double a = q + 0.5, b = 1.5 - p;
    double lu = 0.0;
    if (x == 0.0) {
        if (!(b < 1.0)) return std::numeric_limits<double>::infinity();
        lu = numeric::log_hyper_u_at_zero(a, b);
    } else {
        lu = numeric::log_hyper_u(a, b, x);
    }
    const double lbeta = std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
    return std::lgamma(a) + lu - 0.5 * std::log(2.0 * std::numbers::pi * bt) - lbeta;
}

inline double mhm_return_density(double z, const SvModelParams& params, double tau)
{
    return std::exp(mhm_log_density(z, params, tau));
}

/// MM product distribution with the Ito drift -v/2: a Bessel-K law tilted by e^(-z/2).
inline double skewed_mm_log_density(double z, const SvModelParams& params, double tau)
{
    detail::check_tau(tau);
    detail::check_mm(params);
    const double alpha = params.alpha();
    const double a = alpha / params.theta + 1.0;
    const double s2 = 2.0 * alpha * tau;
    return -2.0 * a * std::numbers::ln2 - 0.5 * std::log(std::numbers::pi) - std::lgamma(a)
           + 0.5 * (a - 0.5) * std::log(s2) - 0.5 * (a + 0.5) * std::log1p(z * z / s2)
           + numeric::log_bessel_k(a + 0.5, 0.5 * std::sqrt(s2 + z * z)) - 0.5 * z;
}

inline double skewed_mm_density(double z, const SvModelParams& params, double tau)
{
    return std::exp(skewed_mm_log_density(z, params, tau));
}

enum class DensityFamily { student_mm, mhm, skewed_mm };

constexpr const char* to_string(DensityFamily f) noexcept
{
    switch (f) {
    case DensityFamily::student_mm: return "student";
    case DensityFamily::mhm: return "mhm";
    case DensityFamily::skewed_mm: return "skewed";
    }
    return "?";
}

class ReturnDensity {
public:
    ReturnDensity(DensityFamily family, const SvModelParams& params, double tau)
        : family_(family), params_(params), tau_(tau)
    {
        detail::check_tau(tau);
        if (family == DensityFamily::mhm)
            detail::check_mhm(params);
        else
            detail::check_mm(params);
    }

    [[nodiscard]] DensityFamily family() const noexcept { return family_; }
    [[nodiscard]] const SvModelParams& params() const noexcept { return params_; }
    [[nodiscard]] double tau() const noexcept { return tau_; }
    [[nodiscard]] bool symmetric() const noexcept { return family_ != DensityFamily::skewed_mm; }
    /// Typical return scale sqrt(theta tau).
    [[nodiscard]] double scale() const noexcept { return std::sqrt(params_.theta * tau_); }

    [[nodiscard]] double log_pdf(double z) const
    {
        switch (family_) {
        case DensityFamily::student_mm: return student_log_density(z, params_, tau_);
        case DensityFamily::mhm: return mhm_log_density(z, params_, tau_);
        case DensityFamily::skewed_mm: return skewed_mm_log_density(z, params_, tau_);
        }
        return 0.0;
    }

    [[nodiscard]] double operator()(double z) const { return std::exp(log_pdf(z)); }

private:
    DensityFamily family_;
    SvModelParams params_;
    double tau_;
};

struct DensityMoments {
    double mass = 0.0;
    double mean = 0.0;
    double m2 = 0.0; // central
    double m3 = 0.0; // central
    double zeta = 0.0;
};

/// Moments by adaptive quadrature. The integrals are split at zero and
/// mirrored, so odd moments of a symmetric density cancel exactly.
inline DensityMoments density_moments(const ReturnDensity& density, double rel_tol = 1e-11)
{
    const double s = density.scale();
    auto moment = [&](int k) {
        auto f = [&](double z) { return density(z) * std::pow(z, k); };
        const auto r = numeric::integrate_real_line(f, 0.0, s, rel_tol);
        if (!r.converged) throw Error(ErrorCode::nonconvergence, "moment quadrature did not converge");
        return r.value;
    };
    DensityMoments m;
    m.mass = moment(0);
    const double e1 = moment(1) / m.mass;
    const double e2 = moment(2) / m.mass;
    const double e3 = moment(3) / m.mass;
    m.mean = e1;
    m.m2 = e2 - e1 * e1;
    m.m3 = e3 - 3.0 * e1 * e2 + 2.0 * e1 * e1 * e1;
    m.zeta = m.m3 / std::pow(m.m2, 1.5);
    return m;
}

/// Tabulated density: ln f on a uniform grid in s, z = w sinh(s), held as a
/// cubic B-spline, with node-to-node cumulative mass for the CDF. Beyond the
/// grid ln f continues linearly in ln|z| (power-law tails).
class DensityTable {
public:
    explicit DensityTable(const ReturnDensity& density, std::size_t nodes = 1201)
    {
        const double sd = density.scale();
        w_ = 0.25 * sd;
        const double lf0 = density.log_pdf(0.0);
        auto reach = [&](double sign) {
            double z = 4.0 * sd;
            for (int i = 0; i < 60 && density.log_pdf(sign * z) - lf0 > -46.0; ++i) z *= 1.5;
            return z;
        };
        const double zmax = std::max(reach(1.0), reach(-1.0));
        s_max_ = std::asinh(zmax / w_);
        nodes = std::max<std::size_t>(nodes | 1, 101);
        h_ = 2.0 * s_max_ / static_cast<double>(nodes - 1);
        std::vector<double> lf(nodes);
        for (std::size_t i = 0; i < nodes; ++i) lf[i] = density.log_pdf(w_ * std::sinh(s_of(i)));
        spline_ = boost::math::interpolators::cardinal_cubic_b_spline<double>(lf.data(), lf.size(), -s_max_, h_);
        for (int side = 0; side < 2; ++side) {
            const std::size_t i0 = side == 0 ? 0 : nodes - 1;
            const std::size_t i1 = side == 0 ? 1 : nodes - 2;
            const double z0 = std::abs(z_of(i0)), z1 = std::abs(z_of(i1));
            tail_slope_[side] = (lf[i0] - lf[i1]) / (std::log(z0) - std::log(z1));
            tail_lf_[side] = lf[i0];
            tail_z_[side] = z0;
        }
        cum_.assign(nodes, 0.0);
        cum_[0] = tail_mass(0);
        for (std::size_t i = 1; i < nodes; ++i) cum_[i] = cum_[i - 1] + panel(s_of(i - 1), s_of(i));
        total_ = cum_.back() + tail_mass(1);
    }

    [[nodiscard]] double log_pdf(double z) const
    {
        const double s = std::asinh(z / w_);
        if (s <= -s_max_) return tail_log_pdf(0, z);
        if (s >= s_max_) return tail_log_pdf(1, z);
        return spline_(s);
    }

    [[nodiscard]] double pdf(double z) const { return std::exp(log_pdf(z)); }

    [[nodiscard]] double cdf(double z) const
    {
        const double s = std::asinh(z / w_);
        if (s <= -s_max_) {
            const double k = -tail_slope_[0];
            return std::exp(tail_log_pdf(0, z)) * std::abs(z) / (k - 1.0) / total_;
        }
        if (s >= s_max_) {
            const double k = -tail_slope_[1];
            return 1.0 - std::exp(tail_log_pdf(1, z)) * z / (k - 1.0) / total_;
        }
        auto i = static_cast<std::size_t>((s + s_max_) / h_);
        i = std::min(i, cum_.size() - 2);
        return std::clamp((cum_[i] + panel(s_of(i), s)) / total_, 0.0, 1.0);
    }

    /// Quadrature mass of the table before normalisation (should be ~1).
    [[nodiscard]] double raw_mass() const noexcept { return total_; }

private:
    [[nodiscard]] double s_of(std::size_t i) const noexcept { return -s_max_ + h_ * static_cast<double>(i); }
    [[nodiscard]] double z_of(std::size_t i) const noexcept { return w_ * std::sinh(s_of(i)); }

    [[nodiscard]] double tail_log_pdf(int side, double z) const
    {
        return tail_lf_[side] + tail_slope_[side] * (std::log(std::abs(z)) - std::log(tail_z_[side]));
    }

    [[nodiscard]] double tail_mass(int side) const
    {
        const double k = -tail_slope_[side];
        if (!(k > 1.0)) return 0.0;
        return std::exp(tail_lf_[side]) * tail_z_[side] / (k - 1.0);
    }

    // Gauss-Legendre 8-point rule in s; panels are at most one grid step wide.
    [[nodiscard]] double panel(double a, double b) const
    {
        static constexpr double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                        0.9602898564975363};
        static constexpr double wt[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                         0.1012285362903763};
        const double c = 0.5 * (a + b), r = 0.5 * (b - a);
        double sum = 0.0;
        for (int j = 0; j < 4; ++j)
            for (double sg : {-1.0, 1.0}) {
                const double s = c + sg * r * x[j];
                sum += wt[j] * std::exp(spline_(s)) * w_ * std::cosh(s);
            }
        return sum * r;
    }

    boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
    double w_ = 1.0, s_max_ = 1.0, h_ = 1.0;
    double tail_slope_[2] = {0.0, 0.0}, tail_lf_[2] = {0.0, 0.0}, tail_z_[2] = {1.0, 1.0};
    std::vector<double> cum_;
    double total_ = 1.0;
};

/// Draws from the MM product distribution: w ~ IGa(a, alpha tau), z = sqrt(w) N.
inline std::vector<double> sample_student_returns(const SvModelParams& params, double tau, std::size_t n,
                                                  std::uint64_t seed)
{
    detail::check_tau(tau);
    detail::check_mm(params);
    const double alpha = params.alpha();
    const double a = alpha / params.theta + 1.0;
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& z : out) {
        const double w = alpha * tau / rng.gamma(a);
        z = std::sqrt(w) * rng.normal();
    }
    return out;
}

/// sup |F_n - F| over a sample; cdf must be non-decreasing.
template <class Cdf>
double ks_statistic(std::span<const double> sample, Cdf&& cdf)
{
    if (sample.empty()) throw Error(ErrorCode::empty_sample, "ks_statistic of an empty sample");
    std::vector<double> v(sample.begin(), sample.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = cdf(v[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

// ---------------------------------------------------------------------------
// Fitting

struct FitOptions {
    numeric::NelderMeadOptions optimizer{0.3, 1e-10, 1e-7, 3000};
    std::size_t table_nodes = 801; // MHM likelihood table
};

struct FitReport {
    DensityFamily family = DensityFamily::student_mm;
    SvModelParams params; // gamma fixed at 1: not identified by the return law
    double tau = 1.0;
    double theta = 0.0;
    double alpha = 0.0;                  // MM
    double p = 0.0, q = 0.0, beta = 0.0; // MHM
    double log_likelihood = 0.0;
    double ks_distance = 0.0;
    double theta_start = 0.0;
    bool converged = false;
    int evaluations = 0;
    std::vector<double> trace; // best negative log-likelihood per iteration
};

/// Maximum likelihood over (theta, alpha) for the Student family or
/// (p, q, beta) for MHM, searched in log coordinates by a bounded simplex
/// from theta0 = m2 / tau. Raises nonconvergence, trace in the message, if
/// the simplex does not settle.
inline FitReport fit_return_density(const ReturnSample& sample, DensityFamily family, const FitOptions& opt = {})
{
    if (sample.size() < 1000) throw Error(ErrorCode::insufficient_points, "fit needs at least 1000 returns");
    if (family == DensityFamily::skewed_mm)
        throw Error(ErrorCode::invalid_argument, "fitting supports the student and mhm families");
    const double tau = static_cast<double>(sample.tau);
    const auto mom = central_moments(sample.values);
    if (!(mom.m2 > 0.0)) throw Error(ErrorCode::zero_variance, "fit of a zero-variance sample");
    const double theta0 = mom.m2 / tau;
    // centre on the sample mean; the symmetric families have zero mean
    std::vector<double> z(sample.values.begin(), sample.values.end());
    for (double& v : z) v -= mom.m1;

    FitReport rep;
    rep.family = family;
    rep.tau = tau;
    rep.theta_start = theta0;
    numeric::MinimizeResult res;

    if (family == DensityFamily::student_mm) {
        // x = (ln theta, ln(alpha/theta))
        auto nll = [&](const std::vector<double>& x) {
            const auto prm = SvModelParams::mm(std::exp(x[0]), std::exp(x[0] + x[1]));
            double s = 0.0;
            for (double v : z) s -= student_log_density(v, prm, tau);
            return s;
        };
        const numeric::Box box{{std::log(theta0) - 5.0, std::log(0.05)}, {std::log(theta0) + 5.0, std::log(1e5)}};
        res = numeric::nelder_mead(nll, {std::log(theta0), std::log(10.0)}, box, opt.optimizer);
        rep.theta = std::exp(res.x[0]);
        rep.alpha = rep.theta * std::exp(res.x[1]);
        rep.params = SvModelParams::mm(rep.theta, rep.alpha);
    } else {
        // x = (ln theta, ln p, ln(q - 1)); beta = theta (q - 1) / p
        auto nll = [&](const std::vector<double>& x) {
            const auto prm = SvModelParams::mhm(std::exp(x[0]), std::exp(x[1]), 1.0 + std::exp(x[2]));
            const DensityTable table(ReturnDensity(DensityFamily::mhm, prm, tau), opt.table_nodes);
            double s = 0.0;
            for (double v : z) s -= table.log_pdf(v) - std::log(table.raw_mass());
            return s;
        };
        const numeric::Box box{{std::log(theta0) - 5.0, std::log(0.55), std::log(0.05)},
                               {std::log(theta0) + 5.0, std::log(1e3), std::log(1e4)}};
        res = numeric::nelder_mead(nll, {std::log(theta0), std::log(2.0), std::log(10.0)}, box, opt.optimizer);
        rep.theta = std::exp(res.x[0]);
        rep.p = std::exp(res.x[1]);
        rep.q = 1.0 + std::exp(res.x[2]);
        rep.params = SvModelParams::mhm(rep.theta, rep.p, rep.q);
        rep.beta = rep.params.beta();
        rep.alpha = rep.params.alpha();
    }
    rep.log_likelihood = -res.value;
    rep.converged = res.converged;
    rep.evaluations = res.evaluations;
    rep.trace = res.trace;
    if (!res.converged) {
        std::string msg = "density fit did not converge after " + std::to_string(res.evaluations)
                          + " evaluations; trace tail:";
        const std::size_t from = res.trace.size() > 5 ? res.trace.size() - 5 : 0;
        for (std::size_t i = from; i < res.trace.size(); ++i) msg += " " + std::to_string(res.trace[i]);
        throw Error(ErrorCode::nonconvergence, msg);
    }

    if (family == DensityFamily::student_mm) {
        rep.ks_distance = ks_statistic(z, [&](double v) { return student_cdf(v, rep.params, tau); });
    } else {
        const DensityTable table(ReturnDensity(DensityFamily::mhm, rep.params, tau), opt.table_nodes);
        rep.ks_distance = ks_statistic(z, [&](double v) { return table.cdf(v); });
    }
    return rep;
}

} // namespace asymret
