#include <cmath>

#include <gtest/gtest.h>

#include "asymret/core/rng.hpp"
#include "asymret/diststats.hpp"

using namespace asymret;

TEST(Ccdf, DirectCount)
{
    const std::vector<double> v{3, 1, 2};
    const auto c = empirical_ccdf(v, Side::gain);
    ASSERT_EQ(c.points.size(), 3u);
    EXPECT_DOUBLE_EQ(c.points[0].survival, 1.0);
    EXPECT_DOUBLE_EQ(c.points[1].survival, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(c.points[2].survival, 1.0 / 3.0);
    EXPECT_EQ(c.n, 3u);
}

TEST(Ccdf, TiesCollapse)
{
    const auto c = empirical_ccdf(std::vector<double>{5, 5, 5}, Side::loss);
    ASSERT_EQ(c.points.size(), 1u);
    EXPECT_DOUBLE_EQ(c.points[0].x, 5.0);
    EXPECT_DOUBLE_EQ(c.points[0].survival, 1.0);
    EXPECT_EQ(c.side, Side::loss);
}

TEST(Ccdf, Errors)
{
    EXPECT_THROW(empirical_ccdf(std::vector<double>{}, Side::gain), Error);
    EXPECT_THROW(empirical_ccdf(std::vector<double>{1.0, -2.0}, Side::gain), Error);
}

TEST(Ccdf, OrderStatisticsAndMonotone)
{
    Rng rng(5);
    std::vector<double> v(2000);
    for (auto& x : v) x = std::ceil(rng.exponential() * 20.0) / 20.0; // plenty of ties
    const auto c = empirical_ccdf(v, Side::gain);
    EXPECT_DOUBLE_EQ(c.points.front().survival, 1.0);
    EXPECT_DOUBLE_EQ(c.points.back().survival, static_cast<double>(c.points.back().count_ge) / 2000.0);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        EXPECT_LT(c.points[i].survival, c.points[i - 1].survival);
        const auto ge = std::count_if(v.begin(), v.end(), [&](double x) { return x >= c.points[i].x; });
        EXPECT_EQ(static_cast<std::size_t>(ge), c.points[i].count_ge);
    }
}

TEST(Ccdf, ParetoWithinDkwBand)
{
    Rng rng(2024);
    std::vector<double> v(10000);
    for (auto& x : v) x = rng.pareto(1.0);
    const auto c = empirical_ccdf(v, Side::gain);
    const double eps = std::sqrt(std::log(2.0 / 0.01) / (2.0 * 10000.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const double above = i + 1 < c.points.size() ? c.points[i + 1].survival : 0.0;
        // survival just above x_i vs 1/x_i; both sides of the jump
        worst = std::max({worst, std::abs(above - 1.0 / c.points[i].x), std::abs(c.points[i].survival - 1.0 / c.points[i].x)});
    }
    EXPECT_LT(worst, eps);
}

TEST(Pdf, UniformDensity)
{
    Rng rng(9);
    std::vector<double> v(100000);
    for (auto& x : v) x = rng.uniform();
    const auto pdf = empirical_pdf(v, Binning::fixed_count(20));
    for (double d : pdf.densities) EXPECT_NEAR(d, 1.0, 0.05);
}

TEST(Pdf, NormalisedAndNonNegative)
{
    Rng rng(3);
    std::vector<double> v(5000);
    for (auto& x : v) x = rng.normal() * 0.01;
    for (const auto& b : {Binning::freedman_diaconis(), Binning::fixed_count(37), Binning::fixed_width(0.0013)}) {
        const auto pdf = empirical_pdf(v, b);
        double mass = 0.0;
        for (std::size_t i = 0; i < pdf.bins(); ++i) {
            EXPECT_GE(pdf.densities[i], 0.0);
            mass += pdf.densities[i] * (pdf.bin_edges[i + 1] - pdf.bin_edges[i]);
        }
        EXPECT_NEAR(mass, 1.0, 1e-12);
        EXPECT_DOUBLE_EQ(pdf.bin_edges.front(), *std::min_element(v.begin(), v.end()));
        EXPECT_DOUBLE_EQ(pdf.bin_edges.back(), *std::max_element(v.begin(), v.end()));
    }
}

TEST(Pdf, SymmetricSampleGivesSymmetricHistogram)
{
    Rng rng(4);
    std::vector<double> v;
    for (int i = 0; i < 3000; ++i) {
        const double x = rng.normal();
        v.push_back(x);
        v.push_back(-x);
    }
    const auto pdf = empirical_pdf(v, Binning::fixed_count(40));
    // a value sitting exactly on an edge may round into the neighbouring bin
    const double one_count = 1.0 / (static_cast<double>(v.size()) * (pdf.bin_edges[1] - pdf.bin_edges[0]));
    for (std::size_t i = 0; i < pdf.bins(); ++i)
        EXPECT_LE(std::abs(pdf.densities[i] - pdf.densities[pdf.bins() - 1 - i]), 1.01 * one_count) << i;
}

TEST(Pdf, Errors)
{
    EXPECT_THROW(empirical_pdf(std::vector<double>(5, 1.0)), Error);
    try {
        empirical_pdf(std::vector<double>(20, 1.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate_sample);
    }
}

TEST(Moments, SymmetricThreePoints)
{
    const auto m = central_moments(std::vector<double>{-1, 0, 1});
    EXPECT_DOUBLE_EQ(m.m1, 0.0);
    EXPECT_DOUBLE_EQ(m.m2, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.m3, 0.0);
    EXPECT_THROW(central_moments(std::vector<double>{1.0}), Error);
}

TEST(Median, EvenAndOdd)
{
    EXPECT_DOUBLE_EQ(median(std::vector<double>{3, 1, 2}), 2.0);
    EXPECT_DOUBLE_EQ(median(std::vector<double>{4, 1, 3, 2}), 2.5);
}

TEST(Mode, UniquePeakAndTieRule)
{
    EmpiricalPDF pdf;
    pdf.bin_edges = {0.0, 0.1, 0.2, 0.3};
    pdf.densities = {1.0, 5.0, 2.0};
    EXPECT_DOUBLE_EQ(mode_estimate(pdf, 0.0), 0.15);

    EmpiricalPDF bi;
    bi.bin_edges = {-1.5, -0.5, 0.5, 1.5};
    bi.densities = {0.4, 0.2, 0.4};
    EXPECT_DOUBLE_EQ(mode_estimate(bi, 0.9), 1.0);
    EXPECT_DOUBLE_EQ(mode_estimate(bi, -0.9), -1.0);
}

TEST(Skewness, DefinitionsAndSymmetry)
{
    Rng rng(8);
    std::vector<double> v;
    for (int i = 0; i < 2000; ++i) {
        const double x = rng.exponential();
        v.push_back(x);
        v.push_back(-x);
    }
    const auto pdf = empirical_pdf(v);
    const auto s = skewness_coefficients(v, pdf);
    EXPECT_NEAR(s.zeta, 0.0, 1e-12);
    EXPECT_NEAR(s.zeta2, 0.0, 1e-12);

    const auto r = moments_report(v, 1);
    EXPECT_NEAR(r.zeta1, (r.m1 - r.mode) / std::sqrt(r.m2), 1e-15);
    EXPECT_NEAR(r.zeta2, 3.0 * (r.m1 - r.median) / std::sqrt(r.m2), 1e-15);
    EXPECT_THROW(skewness_coefficients(std::vector<double>(20, 2.0), pdf), Error);
}

TEST(Skewness, NegationAndScale)
{
    Rng rng(21);
    std::vector<double> v(5000);
    for (auto& x : v) x = rng.gamma(2.0) - 2.0;
    std::vector<double> neg(v.size()), scaled(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        neg[i] = -v[i];
        scaled[i] = 7.5 * v[i];
    }
    const auto a = moments_report(v, 1), b = moments_report(neg, 1), c = moments_report(scaled, 1);
    EXPECT_NEAR(b.zeta, -a.zeta, 1e-12);
    EXPECT_NEAR(b.zeta2, -a.zeta2, 1e-12);
    EXPECT_NEAR(c.zeta, a.zeta, 1e-12);
    EXPECT_NEAR(c.zeta2, a.zeta2, 1e-12);
    EXPECT_NEAR(c.zeta1, a.zeta1, 1e-9);
    EXPECT_NEAR(c.m2, 7.5 * 7.5 * a.m2, 1e-12 * c.m2);
    EXPECT_GT(a.zeta, 1.0); // gamma(2) has skewness sqrt(2)
}

TEST(Skewness, GaussianLargeSample)
{
    Rng rng(77);
    std::vector<double> v(1000000);
    for (auto& x : v) x = rng.normal();
    const auto m = central_moments(v);
    EXPECT_LT(std::abs(m.m3 / std::pow(m.m2, 1.5)), 0.02);
}

TEST(ScalingTable, IidGaussianVarianceAdditivity)
{
    const double theta = 1e-4;
    Rng rng(31);
    // the tau = 100 estimate has relative sd sqrt(2 tau / n), about 0.8% here
    std::vector<double> inc(3000000);
    for (auto& x : inc) x = std::sqrt(theta) * rng.normal();
    const auto curve = curve_from_increments(inc);
    const std::vector<std::size_t> taus{1, 5, 20, 50, 100};
    const auto table = scaling_table(curve, taus);
    ASSERT_EQ(table.rows.size(), taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        EXPECT_EQ(table.rows[i].tau, taus[i]);
        EXPECT_NEAR(table.m2_over_tau[i] / theta, 1.0, 0.03) << taus[i];
    }
    EXPECT_NEAR(table.m2_fit.slope / theta, 1.0, 0.03);
}

TEST(ScalingTable, ParallelMatchesSerial)
{
    Rng rng(1);
    std::vector<double> inc(20000);
    for (auto& x : inc) x = 0.01 * rng.normal();
    const auto curve = curve_from_increments(inc);
    const std::vector<std::size_t> taus{1, 2, 3, 5, 8, 13, 21};
    const auto a = scaling_table(curve, taus, {}, 1);
    const auto b = scaling_table(curve, taus, {}, 4);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        EXPECT_EQ(a.rows[i].m2, b.rows[i].m2);
        EXPECT_EQ(a.rows[i].mode, b.rows[i].mode);
        EXPECT_EQ(a.rows[i].zeta, b.rows[i].zeta);
    }
    EXPECT_THROW(scaling_table(curve, std::vector<std::size_t>{}), Error);
}
