#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "asymret/core/rng.hpp"
#include "asymret/tailfit.hpp"

using namespace asymret;

namespace {

std::vector<double> pareto_sample(std::size_t n, double a, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.pareto(a);
    return v;
}

/// Quantile points x_i = (i/n)^(-1/a): the CCDF lies exactly on x^-a.
std::vector<double> exact_power_law(std::size_t n, double a)
{
    std::vector<double> v;
    for (std::size_t i = 1; i <= n; ++i) v.push_back(std::pow(static_cast<double>(i) / n, -1.0 / a));
    return v;
}

TailRegion whole_sample(const std::vector<double>& v, double u = 1.0)
{
    return select_tail(empirical_ccdf(v, Side::gain), TailPolicy::at_threshold(u));
}

} // namespace

TEST(SelectTail, FractionPolicy)
{
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    const auto r = select_tail(empirical_ccdf(v, Side::loss));
    EXPECT_EQ(r.k, 10u);
    EXPECT_DOUBLE_EQ(r.points.front().x, 91.0);
    EXPECT_DOUBLE_EQ(r.threshold, 91.0);
    EXPECT_EQ(r.side, Side::loss);
    EXPECT_EQ(r.n, 100u);
}

TEST(SelectTail, ThresholdPolicy)
{
    std::vector<double> v;
    for (int i = 1; i <= 200; ++i) v.push_back(0.001 * i);
    const auto r = select_tail(empirical_ccdf(v, Side::loss), TailPolicy::at_threshold(0.05));
    EXPECT_EQ(r.k, 151u);
    for (const auto& p : r.points) EXPECT_GE(p.x, 0.05 - 1e-15);
}

TEST(SelectTail, TooSmall)
{
    std::vector<double> v;
    for (int i = 1; i <= 10; ++i) v.push_back(i);
    try {
        select_tail(empirical_ccdf(v, Side::gain), TailPolicy::top_fraction(0.5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::tail_too_small);
    }
}

TEST(FitTail, ExactPowerLaw)
{
    const auto r = whole_sample(exact_power_law(500, 3.0));
    const auto f = fit_tail_loglog(r);
    EXPECT_NEAR(f.slope, -3.0, 1e-9);
    EXPECT_NEAR(f.intercept, 0.0, 1e-9);
    EXPECT_NEAR(f.slope_stderr, 0.0, 1e-9);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(FitTail, ParetoSlopeAndDiagnostics)
{
    const auto v = pareto_sample(10000, 3.0, 42);
    const auto f = fit_tail_loglog(select_tail(empirical_ccdf(v, Side::gain)));
    EXPECT_NEAR(f.slope, -3.0, 0.3);
    EXPECT_NEAR(f.hill_exponent, 3.0, 0.5);
    EXPECT_LT(f.ks_distance, 0.1);
    EXPECT_GT(f.r_squared, 0.95);
    EXPECT_GT(f.slope_stderr, 0.0);
}

TEST(FitTail, ScaleEquivariance)
{
    const auto v = pareto_sample(5000, 2.5, 7);
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = 0.01 * v[i];
    const auto a = select_tail(empirical_ccdf(v, Side::gain));
    const auto b = select_tail(empirical_ccdf(w, Side::gain));
    const auto fa = fit_tail_loglog(a), fb = fit_tail_loglog(b);
    EXPECT_NEAR(fa.slope, fb.slope, 1e-9);
    EXPECT_NEAR(fb.intercept, fa.intercept - fa.slope * std::log10(0.01), 1e-9);
    const auto ua = u_test_ranks(a, 10), ub = u_test_ranks(b, 10);
    for (std::size_t i = 0; i < ua.size(); ++i) EXPECT_NEAR(ua[i].p_value, ub[i].p_value, 1e-9);
}

TEST(FitTail, DegenerateX)
{
    TailRegion r;
    r.threshold = 1.0;
    r.n = 20;
    for (int i = 0; i < 12; ++i) r.points.push_back({2.0, 0.5, 10});
    r.k = r.points.size();
    EXPECT_THROW(fit_tail_loglog(r), Error);
}

TEST(Band, DeterministicAndContainsFit)
{
    const auto v = pareto_sample(2000, 3.0, 3);
    const auto r = select_tail(empirical_ccdf(v, Side::gain));
    const auto f = fit_tail_loglog(r);
    const auto a = ccdf_confidence_band(r, f, 0.95, 1000, 99);
    const auto b = ccdf_confidence_band(r, f, 0.95, 1000, 99);
    const auto c = ccdf_confidence_band(r, f, 0.95, 1000, 99, {4});
    ASSERT_EQ(a.points.size(), r.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(a.points[i].x_lo, b.points[i].x_lo);
        EXPECT_EQ(a.points[i].x_hi, c.points[i].x_hi);
        EXPECT_LT(a.points[i].survival_lo, a.points[i].fitted);
        EXPECT_GT(a.points[i].survival_hi, a.points[i].fitted);
    }
}

TEST(Band, WiderAtHigherLevel)
{
    const auto v = pareto_sample(3000, 3.0, 12);
    const auto r = select_tail(empirical_ccdf(v, Side::gain));
    const auto f = fit_tail_loglog(r);
    const auto lo = ccdf_confidence_band(r, f, 0.8, 1000, 5);
    const auto hi = ccdf_confidence_band(r, f, 0.99, 1000, 5);
    for (std::size_t i = 0; i < lo.points.size(); ++i) {
        EXPECT_LE(hi.points[i].x_lo, lo.points[i].x_lo);
        EXPECT_GE(hi.points[i].x_hi, lo.points[i].x_hi);
    }
}

TEST(Band, ExtremeRankIsWidest)
{
    // slope -3, k = 100 tail points
    const auto v = pareto_sample(1000, 3.0, 17);
    auto r = select_tail(empirical_ccdf(v, Side::gain), TailPolicy::top_fraction(0.1));
    ASSERT_EQ(r.k, 100u);
    const auto f = fit_tail_loglog(r);
    const auto band = ccdf_confidence_band(r, f, 0.95, 2000, 1);
    const auto width = [&](std::size_t i) {
        return std::log10(band.points[i].x_hi) - std::log10(band.points[i].x_lo);
    };
    EXPECT_GT(width(band.points.size() - 1), width(0));
}

TEST(Band, CoverageNearLevel)
{
    // small version of the acceptance oracle: mean coverage over 40 samples
    double sum = 0.0;
    const int reps = 40;
    for (int s = 0; s < reps; ++s) {
        const auto v = pareto_sample(5000, 3.0, 1000 + s);
        const auto r = select_tail(empirical_ccdf(v, Side::gain));
        const auto f = fit_tail_loglog(r);
        sum += ccdf_confidence_band(r, f, 0.95, 1000, derive_seed(1, "cov", s)).coverage();
    }
    EXPECT_NEAR(sum / reps, 0.95, 0.04);
}

TEST(Band, Errors)
{
    const auto v = pareto_sample(500, 3.0, 1);
    const auto r = select_tail(empirical_ccdf(v, Side::gain));
    const auto f = fit_tail_loglog(r);
    try {
        ccdf_confidence_band(r, f, 0.4, 1000, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_level);
    }
    EXPECT_THROW(ccdf_confidence_band(r, f, 0.95, 10, 1), Error);
}

TEST(UTest, NullDistributionFrozenValues)
{
    // 600-digit evaluations of the same alternating sum
    struct Case {
        std::size_t r, m;
        double x, cdf;
    };
    const Case cases[] = {
        {1, 100, 0.03, 0.00078304822606827265},   {1, 100, 0.05, 0.50719973967190315},
        {3, 50, 0.05, 0.10940703669894081},       {5, 1000, 0.004, 5.9053560811528905e-6},
        {10, 1000, 0.003, 1.4839642353284193e-19}, {2, 20, 0.2, 0.98848483634053121},
        {1, 1000, 0.0075, 0.57680848260106574},
    };
    for (const auto& c : cases) {
        const double got = detail::spacing_order_cdf(c.r, c.m, c.x);
        if (c.cdf < 1e-12)
            EXPECT_LT(got, 1e-12);
        else
            EXPECT_NEAR(got, c.cdf, 1e-12 * std::max(1.0, 1.0 / c.cdf) * c.cdf + 1e-14) << c.r << " " << c.m;
    }
}

TEST(UTest, NullDistributionMatchesMonteCarlo)
{
    const std::size_t m = 40;
    Rng rng(8);
    std::vector<double> g2;
    for (int s = 0; s < 40000; ++s) {
        std::vector<double> e(m);
        double sum = 0.0;
        for (auto& x : e) sum += (x = rng.exponential());
        std::nth_element(e.begin(), e.begin() + 1, e.end(), std::greater<>());
        g2.push_back(e[1] / sum);
    }
    std::sort(g2.begin(), g2.end());
    for (double q : {0.1, 0.5, 0.9}) {
        const double x = g2[static_cast<std::size_t>(q * g2.size())];
        EXPECT_NEAR(detail::spacing_order_cdf(2, m, x), q, 0.01);
    }
}

TEST(UTest, ExactPowerLawHasNoOutliers)
{
    const auto r = whole_sample(exact_power_law(1000, 3.0));
    EXPECT_TRUE(u_test_outliers(r, 0.999, 10).empty());
    for (const auto& t : u_test_ranks(r, 10)) EXPECT_GT(t.p_value, 0.001);
}

TEST(UTest, PlantedDragonKing)
{
    int hits = 0;
    for (int s = 0; s < 20; ++s) {
        auto v = pareto_sample(1000, 3.0, 100 + s);
        *std::max_element(v.begin(), v.end()) *= 10.0;
        for (const auto& o : u_test_outliers(whole_sample(v), 0.99, 10))
            if (o.rank == 1 && o.kind == OutlierClass::pDK && o.p_value < 0.01) ++hits;
    }
    EXPECT_GE(hits, 18);
}

TEST(UTest, TruncatedTailGivesNegativeDragonKing)
{
    int hits = 0;
    for (int s = 0; s < 20; ++s) {
        auto v = pareto_sample(1000, 3.0, 500 + s);
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::partial_sort(idx.begin(), idx.begin() + 5, idx.end(), [&](auto a, auto b) { return v[a] > v[b]; });
        for (int i = 0; i < 5; ++i) v[idx[i]] /= 3.0;
        bool flagged = false;
        for (const auto& o : u_test_outliers(whole_sample(v), 0.95, 10))
            flagged = flagged || (o.rank <= 5 && o.kind == OutlierClass::nDK);
        hits += flagged;
    }
    EXPECT_GE(hits, 13);
}

TEST(UTest, BonferroniIsStricter)
{
    auto v = pareto_sample(1000, 3.0, 2);
    *std::max_element(v.begin(), v.end()) *= 3.0;
    const auto r = whole_sample(v);
    const auto plain = u_test_outliers(r, 0.9, 10);
    const auto corrected = u_test_outliers(r, 0.9, 10, {true});
    EXPECT_LE(corrected.size(), plain.size());
    for (const auto& o : corrected) EXPECT_LT(o.p_value, 0.1 / 10);
    for (const auto& o : plain) EXPECT_LT(o.p_value, 0.1);
}

TEST(UTest, Errors)
{
    const auto r = whole_sample(pareto_sample(30, 3.0, 4), 0.5);
    try {
        u_test_outliers(r, 0.95, 30);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::rank_out_of_range);
    }
    EXPECT_THROW(u_test_outliers(r, 0.95, 0), Error);
    EXPECT_THROW(u_test_outliers(r, 1.0, 5), Error);
}
