#include "fdn/point_sampler.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace fdn;

TEST(ExpInterval, MassMatchesClosedForms) {
    // integral of e^s over [0,1]
    EXPECT_NEAR(interval_mass_exp(1.0, std::exp(1.0), 1.0), std::exp(1.0) - 1.0, 1e-12);
    // constant PDF limit
    EXPECT_NEAR(interval_mass_exp(0.5, 0.5, 1.0), 0.5, 1e-12);
    // zero boundary weight is clamped to 1e-6 before logs
    const double expected = (1.0 - 1e-6) / (0.0 - std::log(1e-6));
    EXPECT_NEAR(interval_mass_exp(0.0, 1.0, 1.0), expected, 1e-12);
    EXPECT_NEAR(expected, 0.07238, 1e-5);
    // width scales linearly
    EXPECT_NEAR(interval_mass_exp(1.0, 2.0, 3.0), 3.0 * interval_mass_exp(1.0, 2.0, 1.0), 1e-12);
}

TEST(ExpInterval, PdfHitsBoundaryWeightsExactly) {
    for (auto [m, n] : {std::pair{0.3, 2.0}, {2.0, 0.3}, {1e-5, 10.0}, {4.0, 4.0}}) {
        ExpInterval iv(m, n);
        EXPECT_DOUBLE_EQ(iv.pdf(0.0), iv.m());
        EXPECT_NEAR(iv.pdf(1.0), iv.n(), 1e-12 * iv.n());
        // PDF is positive and monotone
        double prev = iv.pdf(0.0);
        for (int i = 1; i <= 20; ++i) {
            double cur = iv.pdf(i / 20.0);
            EXPECT_GT(cur, 0.0);
            if (n > m) EXPECT_GE(cur, prev);
            if (n < m) EXPECT_LE(cur, prev);
            prev = cur;
        }
    }
}

TEST(ExpInterval, CdfDerivativeIsPdf) {
    ExpInterval iv(0.7, 3.1);
    const double h = 1e-6;
    for (double z : {0.1, 0.5, 0.9}) {
        double fd = (iv.cdf(z + h) - iv.cdf(z - h)) / (2 * h);
        EXPECT_NEAR(fd, iv.pdf(z), 1e-6);
    }
}

TEST(InvertExp, ClosedFormExamples) {
    EXPECT_DOUBLE_EQ(invert_exp(1.0, std::exp(1.0), 0.0), 0.0);
    EXPECT_NEAR(invert_exp(1.0, std::exp(1.0), 1.0), std::log(2.0), 1e-12);
    EXPECT_NEAR(invert_exp(0.8, 0.8, 0.4), 0.5, 1e-12);
}

TEST(InvertExp, ResidualBeyondMassClampsAndCounts) {
    SamplerStats stats;
    ExpInterval iv(1.0, 2.0);
    double z = iv.invert(iv.mass() * 1.5, &stats);
    EXPECT_DOUBLE_EQ(z, 1.0);
    EXPECT_EQ(stats.residual_clamps, 1u);
}

TEST(InvertExp, RoundTripAcrossWeightGrid) {
    // CDF(invert(dr)) == dr within 1e-10 over a wide m, n grid
    std::vector<double> grid;
    for (double e = -6; e <= 3; e += 1.0) grid.push_back(std::pow(10.0, e));
    for (double m : grid)
        for (double n : grid) {
            ExpInterval iv(m, n);
            const double mass = iv.mass();
            for (double frac : {0.0, 0.1, 0.5, 0.9, 1.0}) {
                const double dr = frac * mass;
                const double z = iv.invert(dr);
                EXPECT_NEAR(iv.cdf(z), dr, 1e-10)
                    << "m=" << m << " n=" << n << " frac=" << frac;
            }
        }
}

TEST(CoarseSamples, EqualSpacing) {
    Ray r;
    r.near = 0.0;
    r.far = 1.0;
    SeededRng rng(1);
    auto k = coarse_samples(r, 5, false, rng);
    ASSERT_EQ(k.size(), 5u);
    std::vector<double> expected{0.0, 0.25, 0.5, 0.75, 1.0};
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(k[i], expected[i], 1e-15);
}

TEST(CoarseSamples, StratifiedStaysInStrata) {
    Ray r;
    r.near = 2.0;
    r.far = 6.0;
    SeededRng rng(7);
    const int n = 16;
    auto k = coarse_samples(r, n, true, rng);
    const double w = (r.far - r.near) / n;
    for (int i = 0; i < n; ++i) {
        EXPECT_GE(k[i], r.near + i * w);
        EXPECT_LT(k[i], r.near + (i + 1) * w);
    }
    SeededRng rng2(7);
    auto k2 = coarse_samples(r, n, true, rng2);
    EXPECT_EQ(k, k2);
}

TEST(CoarseSamples, RejectsTooFew) {
    Ray r;
    SeededRng rng(1);
    EXPECT_THROW(coarse_samples(r, 1, false, rng), std::invalid_argument);
}

namespace {

IntervalWeights single_interval(double m, double n) {
    IntervalWeights w;
    w.knots = {0.0, 1.0};
    w.weights = {m, n};
    return w;
}

}  // namespace

TEST(FineSampler, SingleIntervalMatchesAnalyticCdf) {
    auto w = single_interval(1.0, std::exp(1.0));
    SeededRng rng(13);
    auto draws = fine_positions(w, 100000, PdfMode::kExponential, rng);
    const double denom = std::exp(1.0) - 1.0;
    double d = ks_statistic(draws, [&](double z) { return std::expm1(z) / denom; });
    EXPECT_LT(d, 0.01);
}

TEST(FineSampler, UniformLimitMatchesConstantMode) {
    IntervalWeights w;
    w.knots = {0.0, 0.4, 1.3, 2.0};
    w.weights = {0.7, 0.7, 0.7, 0.7};
    SeededRng rng1(3), rng2(4);
    auto a = fine_positions(w, 100000, PdfMode::kExponential, rng1);
    auto b = fine_positions(w, 100000, PdfMode::kConstant, rng2);
    EXPECT_LT(ks_statistic_two_sample(a, b), 0.01);
}

TEST(FineSampler, MassRatioControlsAllocation) {
    // two unit intervals whose masses come out 3:1 in both modes
    // (constant plateaus 3 and 1 need a shared middle knot; exp mode on
    // weights {3,3,1} gives masses 3 and (1-3)/ln(1/3) = 1.820)
    IntervalWeights w;
    w.knots = {0.0, 1.0, 2.0};
    w.weights = {3.0, 1.0, 1.0};
    // constant-mode masses: (3+1)/2 = 2 and (1+1)/2 = 1 -> fractions 2/3, 1/3
    SeededRng rng(21);
    auto draws = fine_positions(w, 100000, PdfMode::kConstant, rng);
    int lo = 0;
    for (double t : draws) lo += t < 1.0;
    EXPECT_NEAR(static_cast<double>(lo) / draws.size(), 2.0 / 3.0, 0.01);

    // exp-mode masses: (1-3)/ln(1/3) = 1.8205 and 1 -> fraction 0.6455
    SeededRng rng2(22);
    auto draws2 = fine_positions(w, 100000, PdfMode::kExponential, rng2);
    const double mass0 = interval_mass_exp(3.0, 1.0, 1.0);
    int lo2 = 0;
    for (double t : draws2) lo2 += t < 1.0;
    EXPECT_NEAR(static_cast<double>(lo2) / draws2.size(), mass0 / (mass0 + 1.0), 0.01);
}

TEST(FineSampler, ExpModeConcentratesTowardHeavierBoundary) {
    SeededRng rng(5);
    auto up = fine_positions(single_interval(0.5, 4.0), 20000, PdfMode::kExponential, rng);
    double mean_up = std::accumulate(up.begin(), up.end(), 0.0) / up.size();
    EXPECT_GT(mean_up, 0.5);

    auto down = fine_positions(single_interval(4.0, 0.5), 20000, PdfMode::kExponential, rng);
    double mean_down = std::accumulate(down.begin(), down.end(), 0.0) / down.size();
    EXPECT_LT(mean_down, 0.5);
}

TEST(FineSampler, AllZeroWeightsFallsBackToUniform) {
    IntervalWeights w;
    w.knots = {1.0, 2.0, 3.0};
    w.weights = {0.0, 0.0, 0.0};
    SeededRng rng(9);
    auto draws = fine_positions(w, 50000, PdfMode::kExponential, rng);
    for (double t : draws) {
        EXPECT_GE(t, 1.0);
        EXPECT_LE(t, 3.0);
    }
    double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / draws.size();
    EXPECT_NEAR(mean, 2.0, 0.02);
}

TEST(FineSampler, MergedOutputStrictlyIncreasing) {
    IntervalWeights w;
    w.knots = {0.0, 0.5, 1.0, 1.5, 2.0};
    w.weights = {0.1, 2.0, 0.3, 1.0, 0.0};
    SeededRng rng(31);
    auto merged = fine_samples(w, 64, PdfMode::kExponential, rng);
    EXPECT_GE(merged.size(), w.knots.size());
    for (size_t i = 0; i + 1 < merged.size(); ++i)
        EXPECT_GT(merged[i + 1], merged[i]);
    // coarse knots survive the merge
    for (double knot : w.knots) {
        bool found = false;
        for (double t : merged) found |= std::abs(t - knot) <= 1e-9;
        EXPECT_TRUE(found);
    }
}

TEST(FineSampler, DeterministicGivenSeed) {
    IntervalWeights w;
    w.knots = {0.0, 1.0, 2.0};
    w.weights = {1.0, 5.0, 0.5};
    SeededRng a(77), b(77);
    EXPECT_EQ(fine_samples(w, 32, PdfMode::kExponential, a),
              fine_samples(w, 32, PdfMode::kExponential, b));
}

TEST(CdfTable, NormalizedAndMonotone) {
    IntervalWeights w;
    w.knots = {0.0, 0.3, 0.9, 2.0};
    w.weights = {0.2, 1.5, 0.0, 0.7};
    for (auto mode : {PdfMode::kExponential, PdfMode::kConstant}) {
        auto table = build_cdf(w, mode);
        ASSERT_EQ(table.cumulative.size(), w.knots.size());
        EXPECT_DOUBLE_EQ(table.cumulative.front(), 0.0);
        EXPECT_DOUBLE_EQ(table.cumulative.back(), 1.0);
        for (size_t i = 0; i + 1 < table.cumulative.size(); ++i)
            EXPECT_LE(table.cumulative[i], table.cumulative[i + 1]);
        EXPECT_GT(table.total_mass, 0.0);
    }
}

TEST(KsStatistic, DetectsShiftedDistribution) {
    SeededRng rng(2);
    std::vector<double> u(20000);
    for (auto& v : u) v = rng.uniform();
    EXPECT_LT(ks_statistic(u, [](double x) { return x; }), 0.02);
    EXPECT_GT(ks_statistic(u, [](double x) { return std::clamp(x - 0.2, 0.0, 1.0); }), 0.15);
}
