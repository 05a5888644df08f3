#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "asymret/core/rng.hpp"
#include "asymret/returns.hpp"

using namespace asymret;

namespace {

PriceSeries series_of(const std::vector<double>& prices)
{
    std::vector<Date> d;
    Date start = std::chrono::sys_days{std::chrono::year{2000} / 1 / 3};
    for (std::size_t i = 0; i < prices.size(); ++i) d.push_back(start + std::chrono::days{static_cast<int>(i)});
    return PriceSeries(d, prices);
}

LogReturnCurve line_curve(double mu, std::size_t n)
{
    LogReturnCurve c;
    for (std::size_t t = 0; t < n; ++t) c.r.push_back(mu * static_cast<double>(t));
    return c;
}

} // namespace

TEST(LogReturnCurve, ConstantAndExact)
{
    auto c = log_return_curve(series_of({100, 100, 100}));
    EXPECT_EQ(c.r, (std::vector<double>{0, 0, 0}));
    auto e = log_return_curve(series_of({1, std::exp(1.0), std::exp(2.0)}));
    EXPECT_DOUBLE_EQ(e.r[0], 0.0);
    EXPECT_NEAR(e.r[1], 1.0, 1e-15);
    EXPECT_NEAR(e.r[2], 2.0, 1e-15);
    EXPECT_EQ(e.daily_count(), 2u);
}

TEST(FitTrend, ExactLineEveryStride)
{
    const auto c = line_curve(0.0005, 1000);
    for (std::size_t tau : {1u, 7u, 20u, 100u}) {
        const auto f = fit_trend(c, tau);
        EXPECT_NEAR(f.slope, 0.0005, 1e-15) << tau;
        EXPECT_NEAR(f.residual_rms, 0.0, 1e-13) << tau;
        EXPECT_EQ(f.tau, tau);
    }
}

TEST(FitTrend, AlternatingNoise)
{
    // r_t = mu t + 0.01 (-1)^t; closed-form OLS slope for even n
    const std::size_t n = 2000;
    LogReturnCurve c;
    for (std::size_t t = 0; t < n; ++t) c.r.push_back(0.0005 * t + (t % 2 ? -0.01 : 0.01));
    const auto f = fit_trend(c, 1);
    // sum (t - tbar)(-1)^t = -n/2, sxx = n(n^2-1)/12
    const double nn = static_cast<double>(n);
    const double expected = 0.0005 + 0.01 * (-nn / 2.0) / (nn * (nn * nn - 1.0) / 12.0);
    EXPECT_NEAR(f.slope, expected, 1e-15);
    EXPECT_NEAR(f.residual_rms, 0.01, 1e-4);
}

TEST(FitTrend, TooShort)
{
    const auto c = line_curve(0.001, 10);
    EXPECT_THROW(fit_trend(c, 5), Error);
    EXPECT_NO_THROW(fit_trend(c, 4));
}

TEST(AccumulatedReturns, ExactLineGivesZero)
{
    const auto c = line_curve(0.0003, 500);
    for (std::size_t tau : {1u, 5u, 100u}) {
        const auto s = accumulated_returns(c, tau, 0.0003);
        for (double v : s.values) EXPECT_NEAR(v, 0.0, 1e-15);
    }
}

TEST(AccumulatedReturns, Counts)
{
    // 11259 daily returns, a long daily index history
    const auto c = line_curve(0.0, 11260);
    EXPECT_EQ(accumulated_returns(c, 20, 0.0).size(), 11240u);
    EXPECT_EQ(accumulated_returns(c, 5, 0.0).size(), 11255u);
    for (std::size_t tau : {1u, 2u, 11259u}) EXPECT_EQ(accumulated_returns(c, tau, 0.0).size(), 11259u - tau + 1);
    try {
        accumulated_returns(c, 11260, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::window_too_large);
    }
}

TEST(AccumulatedReturns, StartIndicesAndValues)
{
    LogReturnCurve c{{0.0, 0.1, 0.3, 0.2}};
    const auto s = accumulated_returns(c, 2, 0.05);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.start_indices, (std::vector<std::size_t>{0, 1}));
    EXPECT_NEAR(s.values[0], 0.3 - 0.1, 1e-15);
    EXPECT_NEAR(s.values[1], 0.2 - 0.1 - 0.1, 1e-15);
}

TEST(AccumulatedReturns, DetrendingExactOnExponentialGrowth)
{
    std::vector<double> p;
    for (int t = 0; t < 5000; ++t) p.push_back(250.0 * std::exp(0.0004 * t));
    const auto c = log_return_curve(series_of(p));
    const double mu = fit_trend(c, 1).slope;
    for (std::size_t tau : {1u, 20u, 250u}) {
        double worst = 0.0;
        for (double v : accumulated_returns(c, tau, mu).values) worst = std::max(worst, std::abs(v));
        EXPECT_LE(worst, 1e-12) << tau;
    }
}

TEST(AccumulatedReturns, AdditivityOfDailyReturns)
{
    Rng rng(11);
    std::vector<double> inc(3000);
    for (auto& x : inc) x = 0.01 * rng.normal();
    const auto c = curve_from_increments(inc);
    const auto s = accumulated_returns(c, 37, 0.0);
    for (std::size_t t = 0; t < s.size(); t += 97) {
        const double direct = std::accumulate(inc.begin() + t, inc.begin() + t + 37, 0.0);
        EXPECT_NEAR(s.values[t], direct, 1e-10 * std::max(1.0, std::abs(direct)));
    }
}

TEST(Partition, GainsLossesZeros)
{
    ReturnSample s;
    s.values = {-1.0, 0.0, 2.0};
    const auto g = partition_gains_losses(s);
    EXPECT_EQ(g.gains, (std::vector<double>{2.0}));
    EXPECT_EQ(g.losses, (std::vector<double>{1.0}));
    EXPECT_EQ(g.zeros, 1u);
    EXPECT_EQ(g.total(), 3u);
}
