#include <cmath>

#include <gtest/gtest.h>

#include "putraffic/accuracy.hpp"
#include "putraffic/design.hpp"
#include "putraffic/errors.hpp"

using namespace putraffic;

namespace {

TrafficParams params(double u = 0.3, double lf = 0.9) { return TrafficParams::from_u_lambda_f(u, lf); }

double mean_bits(std::span<const std::uint8_t> z) {
    double s = 0.0;
    for (auto b : z) s += b;
    return s / static_cast<double>(z.size());
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

TEST(Averaging, BaseCases) {
    const TrafficParams p = params(0.4, 0.6);
    EXPECT_NEAR(mse_avg(p, SampleSchedule(std::vector<double>{})).mse, 0.24, 1e-15);
    const double g = p.decay(2.0);
    EXPECT_NEAR(mse_avg_uniform(p, 2, 2.0).mse, 0.24 * (1 + g) / 2, 1e-15);
    EXPECT_NEAR(mse_avg(p, SampleSchedule({2.0})).mse, 0.24 * (1 + g) / 2, 1e-15);
}

TEST(Averaging, ThreeSampleValue) {
    // Exact sum over the 8 sequences, evaluated independently.
    const double frozen = 0.10890660741682842;
    const TrafficParams p = params(0.4, 0.6);
    const SampleSchedule s({0.7, 1.3});
    EXPECT_LE(rel(mse_avg(p, s).mse, frozen), 1e-12);
    EXPECT_LE(rel(oracle_mse_enumeration(p, s, mean_bits).mse, frozen), 1e-12);
}

TEST(Averaging, DecrementMatchesDifference) {
    const TrafficParams p = params(0.45, 0.8);
    const SampleSchedule s({0.3, 1.1, 0.0, 0.7, 2.0});
    for (double t : {0.0, 0.2, 1.5, 6.0}) {
        std::vector<double> iv(s.inter_sample_times().begin(), s.inter_sample_times().end());
        iv.push_back(t);
        EXPECT_NEAR(mse_avg_decrement(p, s, t), mse_avg(p, s).mse - mse_avg(p, SampleSchedule(iv)).mse, 1e-15);
    }
    const double n = 6.0;
    EXPECT_NEAR(mse_avg_decrement_max(p, s), (mse_avg(p, s).mse * (2 * n + 1) - 0.45 * 0.55) / ((n + 1) * (n + 1)),
                1e-15);
    EXPECT_NEAR(mse_avg_decrement(p, s, 1e6), mse_avg_decrement_max(p, s), 1e-15);
}

TEST(Averaging, UncorrelatedDecrement) {
    const TrafficParams p = params(0.3, 0.9);
    const SampleSchedule s({1e4, 1e4, 1e4});
    EXPECT_NEAR(mse_avg_decrement(p, s, 1e4), 0.21 * (1.0 / 4 - 1.0 / 5), 1e-15);
}

TEST(Averaging, UniformFrozenValue) {
    EXPECT_LE(rel(mse_avg_uniform(params(), 100, 50.0).rms, 0.057165537600870016), 1e-12);
}

TEST(Averaging, AsymptoteLimits) {
    const TrafficParams p = params();
    EXPECT_LT(mse_avg_uniform_asymptote(p, 1e9).mse, 1e-8);
    EXPECT_NEAR(mse_avg_uniform_asymptote(p, 1e-9).mse, 0.21, 1e-9);
    EXPECT_LE(rel(mse_avg_uniform(p, 100'000, 50.0).mse, mse_avg_uniform_asymptote(p, 50.0).mse), 1e-3);
}

TEST(Averaging, RequiredSamples) {
    EXPECT_EQ(required_samples(params(), 50.0, 1.05), 185u);
    const TrafficParams p = params(0.6, 0.4);
    const std::size_t n = required_samples(p, 20.0, 1.2);
    const double target = 1.2 * mse_avg_uniform_asymptote(p, 20.0).mse;
    EXPECT_LE(mse_avg_uniform(p, n, 20.0).mse, target);
    EXPECT_GT(mse_avg_uniform(p, n - 1, 20.0).mse, target);
    EXPECT_EQ(required_samples(p, 20.0, 1e9), 2u);
    EXPECT_THROW(required_samples(p, 20.0, 1.0), InfeasibleError);
}

TEST(Corrected, PerfectAndBaseCase) {
    const TrafficParams p = params(0.35, 0.5);
    const SampleSchedule s({0.4, 0.9, 1.7});
    EXPECT_DOUBLE_EQ(mse_avg_corrected(p, s, SensingModel{}).mse, mse_avg(p, s).mse);
    const SensingModel sm(0.1, 0.05);
    const double g = p.decay(1.0);
    const double expect = 0.35 * 0.65 * (1 + g) / 2 + sm.noise_variance(0.35) / 2;
    EXPECT_NEAR(mse_avg_corrected(p, SampleSchedule({1.0}), sm).mse, expect, 1e-15);
}

TEST(Corrected, MatchesEnumeration) {
    const TrafficParams p = params(0.3, 0.9);
    const SensingModel sm(0.1, 0.1);
    const SampleSchedule s({0.2, 0.5, 0.0, 1.0, 0.3, 0.8, 0.1, 0.6, 0.4});
    auto corrected = [&](std::span<const std::uint8_t> z) { return (mean_bits(z) - sm.p_f) / sm.contrast(); };
    EXPECT_LE(rel(mse_avg_corrected(p, s, sm).mse, oracle_mse_enumeration(p, s, corrected, sm).mse), 1e-12);
}

TEST(Weighted, UniformAndOptimal) {
    const TrafficParams p = params(0.3, 0.9);
    const std::size_t n = 12;
    const double t_c = 0.5;
    EXPECT_LE(rel(mse_weighted(p, t_c, WeightVector::uniform(n)).mse, mse_avg_uniform(p, n, t_c * (n - 1)).mse), 1e-12);
    const double g = p.decay(t_c);
    const double closed = 0.21 * (1 + g) / (n * (1 - g) + 2 * g);
    EXPECT_LE(rel(mse_weighted_optimal(p, n, t_c).mse, closed), 1e-12);
    EXPECT_LE(rel(mse_weighted(p, t_c, optimal_weights(p, n, t_c)).mse, closed), 1e-12);
}

TEST(Weighted, OptimalWeightsMatchEnumeration) {
    const TrafficParams p = params(0.3, 0.9);
    const WeightVector w = optimal_weights(p, 8, 0.5);
    auto weighted = [&](std::span<const std::uint8_t> z) {
        double a = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) a += w[i] * z[i];
        return a;
    };
    EXPECT_LE(rel(oracle_mse_enumeration(p, SampleSchedule::uniform(8, 3.5), weighted).mse,
                  mse_weighted(p, 0.5, w).mse),
              1e-12);
}

TEST(Weighted, AsymptoteIgnoresSensing) {
    const TrafficParams p = params(0.6, 0.4);
    EXPECT_DOUBLE_EQ(mse_weighted_asymptote(p, 50.0).mse, mse_weighted_asymptote(p, 50.0, SensingModel(0.1, 0.1)).mse);
    EXPECT_NEAR(mse_weighted_asymptote(p, 50.0).mse, 0.24 / (1 + 0.4 * 50 / 1.2), 1e-15);
    EXPECT_LT(mse_weighted_asymptote(p, 1e12).mse, 1e-10);
    EXPECT_LE(rel(mse_weighted_optimal(p, 200'000, 50.0 / 199'999).mse, mse_weighted_asymptote(p, 50.0).mse), 1e-4);
}

TEST(Fisher, FrozenValues) {
    const TrafficParams p = params(0.3, 0.9);
    EXPECT_LE(rel(crb_u(p, 100, 50.0 / 99).rms, 0.051803644373821837), 1e-12);
    EXPECT_LE(rel(crb_lambda_f(p, 100, 50.0 / 99).rms, 0.27951109022369325), 1e-12);
}

TEST(Fisher, RateBaseCase) {
    const TrafficParams p = params(0.35, 0.7);
    const double t = 0.8;
    const double g = p.decay(t);
    const double u = 0.35;
    const double expect =
        (g * t) * (g * t) * (1 - u) * (1 + g) / (u * (1 - g) * (g + u * (1 - g) * (1 - g) * (1 - u)));
    EXPECT_LE(rel(fisher_lambda_f(p, 2, t).value, expect), 1e-12);
    EXPECT_LE(rel(oracle_fisher_enumeration(p, 2, t, FisherParameter::DepartureRate).value, expect), 1e-12);
}

TEST(Fisher, MatchesEnumeration) {
    Rng rng(33);
    for (int trial = 0; trial < 40; ++trial) {
        const TrafficParams p = params(0.05 + 0.9 * uniform01(rng), 0.1 + 1.9 * uniform01(rng));
        const std::size_t n = 2 + rng() % 9;
        const double t = 0.05 + 3.0 * uniform01(rng);
        EXPECT_LE(rel(fisher_u(p, n, t).value, oracle_fisher_enumeration(p, n, t, FisherParameter::DutyCycle).value),
                  1e-8);
        EXPECT_LE(rel(fisher_lambda_f(p, n, t).value,
                      oracle_fisher_enumeration(p, n, t, FisherParameter::DepartureRate).value),
                  1e-8);
        EXPECT_LE(rel(fisher_lambda_n(p, n, t).value,
                      oracle_fisher_enumeration(p, n, t, FisherParameter::ArrivalRate).value),
                  1e-8);
    }
}

TEST(Fisher, ScoreHasZeroMean) {
    const TrafficParams p = params(0.4, 1.2);
    for (auto which : {FisherParameter::DutyCycle, FisherParameter::DepartureRate, FisherParameter::ArrivalRate})
        EXPECT_NEAR(oracle_score_mean(p, 8, 0.3, which), 0.0, 1e-12);
}

TEST(Fisher, ArrivalRateRelations) {
    const TrafficParams half = params(0.5, 0.8);
    EXPECT_NEAR(fisher_lambda_n(half, 50, 0.4).value, fisher_lambda_f(half, 50, 0.4).value, 1e-12);
    // lambda_n = lambda_f (1-u)/u with u fixed, so the bounds scale by the squared ratio.
    const TrafficParams p = params(0.3, 0.9);
    const double k = 0.7 / 0.3;
    EXPECT_LE(rel(crb_lambda_n(p, 40, 0.5).mse, k * k * crb_lambda_f(p, 40, 0.5).mse), 1e-12);
}

TEST(Fisher, UncorrelatedLimit) {
    const TrafficParams p = params(0.3, 0.9);
    // t_c chosen so that the decay factor is 1e-8.
    const double t = -std::log(1e-8) * 0.3 / 0.9;
    EXPECT_NEAR(crb_u(p, 40, t).mse, 0.21 / 40, 1e-9);
}

TEST(Fisher, AsymptotesAtLargeN) {
    const TrafficParams p = params(0.6, 0.4);
    const double t = 10.0;
    const std::size_t n = 1'000'000;
    const double t_c = t / (n - 1);
    EXPECT_LE(rel(crb_u(p, n, t_c).mse, crb_u_asymptote(p, t).mse), 1e-4);
    EXPECT_LE(rel(crb_lambda_f(p, n, t_c).mse, crb_lambda_f_asymptote(p, t).mse), 1e-4);
    EXPECT_LE(rel(crb_lambda_n(p, n, t_c).mse, crb_lambda_n_asymptote(p, t).mse), 1e-4);
}

TEST(Fisher, BoundBelowAveraging) {
    for (double u : {0.2, 0.5, 0.8})
        for (std::size_t n : {10, 100}) {
            const TrafficParams p = params(u, 0.7);
            EXPECT_LE(crb_u(p, n, 20.0 / (n - 1)).mse, mse_weighted_optimal(p, n, 20.0 / (n - 1)).mse);
        }
}

TEST(Oracle, Guards) {
    const TrafficParams p = params();
    EXPECT_THROW(oracle_mse_enumeration(p, SampleSchedule::uniform(21, 10.0), mean_bits), RefusedError);
    EXPECT_THROW(oracle_fisher_enumeration(p, 13, 0.5, FisherParameter::DutyCycle), RefusedError);
}

TEST(Oracle, TimeReversal) {
    const TrafficParams p = params(0.5, 0.7);
    const SampleSchedule s({0.3, 1.2, 0.0, 0.5, 2.0});
    auto front_heavy = [](std::span<const std::uint8_t> z) {
        double a = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) a += (i + 1.0) * z[i];
        return a / 21.0;
    };
    auto back_heavy = [](std::span<const std::uint8_t> z) {
        double a = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) a += (z.size() - i) * z[i];
        return a / 21.0;
    };
    EXPECT_NEAR(oracle_mse_enumeration(p, s, front_heavy).mse, oracle_mse_enumeration(p, s.reversed(), back_heavy).mse,
                1e-15);
}
