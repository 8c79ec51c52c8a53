#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "putraffic/accuracy.hpp"
#include "putraffic/blind.hpp"
#include "putraffic/design.hpp"
#include "putraffic/harness.hpp"

using namespace putraffic;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct Draw {
    Rng rng;
    explicit Draw(std::uint64_t seed) : rng(seed) {}
    double unif(double a, double b) { return a + (b - a) * uniform01(rng); }
    std::size_t n(std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng() % (hi - lo + 1)); }
    TrafficParams params() { return TrafficParams::from_u_lambda_f(unif(0.05, 0.95), unif(0.1, 2.0)); }
};

double mean_bits(std::span<const std::uint8_t> z) {
    double s = 0.0;
    for (auto b : z) s += b;
    return s / static_cast<double>(z.size());
}

std::string fmt(const char *f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Outcome oracle_equivalence() {
    Draw d(101);
    double worst[4] = {0, 0, 0, 0};
    const std::size_t configs = 200;
    for (std::size_t c = 0; c < configs; ++c) {
        const TrafficParams p = d.params();
        const std::size_t n = d.n(2, 12);
        std::vector<double> iv(n - 1);
        for (double &x : iv) x = d.unif(0.01, 3.0);
        const SampleSchedule sched(iv);
        worst[0] = std::max(worst[0], rel_err(mse_avg(p, sched).mse, oracle_mse_enumeration(p, sched, mean_bits).mse));

        const double t = d.unif(1.0, 30.0);
        const SampleSchedule us = SampleSchedule::uniform(n, t);
        worst[1] = std::max(worst[1], rel_err(mse_avg_uniform(p, n, t).mse, oracle_mse_enumeration(p, us, mean_bits).mse));

        const SensingModel s(d.unif(0.0, 0.2), d.unif(0.0, 0.2));
        auto corrected = [&](std::span<const std::uint8_t> z) { return (mean_bits(z) - s.p_f) / s.contrast(); };
        worst[2] = std::max(worst[2], rel_err(mse_avg_corrected(p, sched, s).mse,
                                              oracle_mse_enumeration(p, sched, corrected, s).mse));

        std::vector<double> w(n);
        double sum = 0.0;
        for (double &x : w) sum += (x = d.unif(0.1, 1.0));
        for (double &x : w) x /= sum;
        const WeightVector wv(w);
        auto weighted = [&](std::span<const std::uint8_t> z) {
            double a = 0.0;
            for (std::size_t i = 0; i < z.size(); ++i) a += wv[i] * z[i];
            return a;
        };
        auto weighted_c = [&](std::span<const std::uint8_t> z) { return (weighted(z) - s.p_f) / s.contrast(); };
        const double t_c = us.uniform_interval();
        worst[3] = std::max(worst[3], rel_err(mse_weighted(p, t_c, wv).mse, oracle_mse_enumeration(p, us, weighted).mse));
        worst[3] = std::max(worst[3], rel_err(mse_weighted(p, t_c, wv, s).mse,
                                              oracle_mse_enumeration(p, us, weighted_c, s).mse));
    }
    const double w = *std::max_element(worst, worst + 4);
    return {w <= 1e-10, fmt("%g configs, worst rel err avg/uniform/corrected/weighted = %.2e", double(configs),
                            worst[0]) +
                            fmt("/%.2e/%.2e", worst[1], worst[2]) + fmt("/%.2e", worst[3])};
}

Outcome fisher_equivalence() {
    Draw d(202);
    double worst[3] = {0, 0, 0};
    const std::size_t configs = 100;
    for (std::size_t c = 0; c < configs; ++c) {
        const TrafficParams p = d.params();
        const std::size_t n = d.n(2, 10);
        const double t_c = d.unif(0.05, 3.0);
        worst[0] = std::max(worst[0], rel_err(fisher_u(p, n, t_c).value,
                                              oracle_fisher_enumeration(p, n, t_c, FisherParameter::DutyCycle).value));
        worst[1] = std::max(worst[1],
                            rel_err(fisher_lambda_f(p, n, t_c).value,
                                    oracle_fisher_enumeration(p, n, t_c, FisherParameter::DepartureRate).value));
        worst[2] = std::max(worst[2], rel_err(fisher_lambda_n(p, n, t_c).value,
                                              oracle_fisher_enumeration(p, n, t_c, FisherParameter::ArrivalRate).value));
    }
    const double w = *std::max_element(worst, worst + 3);
    return {w <= 1e-6, fmt("100 configs, worst rel err u/lambda_f/lambda_n = %.2e/%.2e/%.2e", worst[0], worst[1],
                           worst[2])};
}

Outcome asymptotes() {
    const std::size_t n = 100'000;
    double worst[4] = {0, 0, 0, 0};
    for (double u : {0.3, 0.6})
        for (double lf : {0.4, 0.9})
            for (double t = 10.0; t <= 100.0 + 1e-9; t += 10.0) {
                const TrafficParams p = TrafficParams::from_u_lambda_f(u, lf);
                const double t_c = t / static_cast<double>(n - 1);
                worst[0] = std::max(worst[0], rel_err(mse_avg_uniform_asymptote(p, t).mse, mse_avg_uniform(p, n, t).mse));
                worst[1] = std::max(worst[1],
                                    rel_err(mse_weighted_asymptote(p, t).mse, mse_weighted_optimal(p, n, t_c).mse));
                worst[2] = std::max(worst[2], rel_err(crb_u_asymptote(p, t).mse, crb_u(p, n, t_c).mse));
                worst[3] = std::max(worst[3], rel_err(crb_lambda_f_asymptote(p, t).mse, crb_lambda_f(p, n, t_c).mse));
                worst[3] = std::max(worst[3], rel_err(crb_lambda_n_asymptote(p, t).mse, crb_lambda_n(p, n, t_c).mse));
            }
    const double w = *std::max_element(worst, worst + 4);
    return {w <= 1e-3, fmt("worst rel gap avg/weighted/crb_u = %.2e/%.2e/%.2e", worst[0], worst[1], worst[2]) +
                           fmt(", crb rates = %.2e", worst[3])};
}

Outcome monte_carlo_agreement() {
    ExperimentSpec s;
    s.u = {0.3, 0.6};
    s.lambda_f = {0.4, 0.9};
    s.t_window = {50.0};
    s.n = {40, 100, 150};
    s.estimators = {EstimatorTag::Avg, EstimatorTag::Weighted, EstimatorTag::AvgCorrected};
    s.replicates = 100'000;
    s.seed = 4;
    const ResultTable t = run_experiment(s);
    double worst = 0.0;
    std::size_t points = 0;
    bool ok = true;
    for (const ResultRow &r : t.rows) {
        if (r.error || !r.cf_rms) {
            ok = false;
            continue;
        }
        const double z = std::abs(r.mc_rms - *r.cf_rms) / r.mc_se;
        worst = std::max(worst, z);
        ++points;
    }
    ok = ok && points == 36 && worst <= 3.0;
    return {ok, fmt("%g points, worst |mc - closed form| = %.2f standard errors", double(points), worst)};
}

Outcome ml_advantage() {
    const TrafficParams p = TrafficParams::from_u_lambda_f(0.3, 0.4);
    const std::size_t n = 150;
    const double t = 50.0;
    const double avg = mse_avg_uniform(p, n, t).rms;
    const double ml = crb_u(p, n, t / static_cast<double>(n - 1)).rms;
    const double reduction = 1.0 - ml / avg;
    return {reduction >= 0.18 && reduction <= 0.30,
            fmt("averaging rms %.5f, CR bound rms %.5f, reduction %.2f%%", avg, ml, 100.0 * reduction)};
}

Outcome sensing_impact() {
    ExperimentSpec rate;
    rate.u = {0.3};
    rate.lambda_f = {0.9};
    rate.t_window = {50.0};
    rate.n = {1000};
    rate.sensing = {SensingModel{0.0, 0.0}, SensingModel{0.1, 0.1}};
    rate.estimators = {EstimatorTag::MlLambdaF};
    rate.replicates = 10'000;
    rate.seed = 6;
    const ResultTable rt = run_experiment(rate);
    double perfect = NAN, noisy = NAN;
    for (const ResultRow &r : rt.rows) (r.p_f == 0.0 ? perfect : noisy) = r.mc_rms;
    const double increase = noisy / perfect - 1.0;
    const bool rate_ok = increase >= 0.5 && increase <= 1.1;

    ExperimentSpec avg;
    avg.u = {0.3};
    avg.lambda_f = {0.9};
    avg.t_window = {50.0};
    avg.n = {50, 100, 200, 500, 1000};
    avg.sensing = {SensingModel{0.0, 0.0}, SensingModel{0.1, 0.1}};
    avg.estimators = {EstimatorTag::AvgCorrected};
    avg.replicates = 10'000;
    avg.seed = 7;
    const ResultTable at = run_experiment(avg);
    std::map<double, double> clean, sensed;
    bool mc_ok = true;
    for (const ResultRow &r : at.rows) {
        (r.p_f == 0.0 ? clean : sensed)[r.n] = r.mc_rms;
        if (r.cf_rms && std::abs(r.mc_rms - *r.cf_rms) > 3.0 * r.mc_se) mc_ok = false;
    }
    bool shrinking = true;
    double prev = INFINITY, first = NAN, last = NAN;
    for (const auto &[n, rms] : sensed) {
        const double gap = rms / clean[n] - 1.0;
        if (std::isnan(first)) first = gap;
        last = gap;
        if (!(gap < prev)) shrinking = false;
        prev = gap;
    }
    return {rate_ok && shrinking && mc_ok,
            fmt("lambda_f rms %.4f vs %.4f (+%.1f%%)", noisy, perfect, 100.0 * increase) +
                fmt("; corrected-average excess %.1f%% at N=50 -> %.1f%% at N=1000", 100.0 * first, 100.0 * last) +
                (shrinking ? ", decreasing" : ", NOT decreasing") + (mc_ok ? "" : ", MC off closed form")};
}

Outcome design_dominance() {
    Draw d(707);
    bool ok = true;
    double worst_gap = -INFINITY, worst_kkt = 0.0, worst_w = -INFINITY;
    for (int c = 0; c < 100; ++c) {
        const TrafficParams p = d.params();
        const std::size_t n = d.n(3, 8);
        const double t = d.unif(0.5, 30.0);
        const ScheduleSolution sol = optimal_schedule(p, n, t);
        double best_random = INFINITY;
        std::vector<double> iv(n - 1);
        for (int k = 0; k < 10'000; ++k) {
            double sum = 0.0;
            for (double &x : iv) sum += (x = exponential(d.rng, 1.0));
            for (double &x : iv) x *= t / sum;
            best_random = std::min(best_random, mse_avg(p, SampleSchedule(iv)).mse);
        }
        worst_gap = std::max(worst_gap, sol.mse_at_optimum - best_random);
        if (sol.mse_at_optimum > best_random + 1e-9) ok = false;

        const KktResidual r = kkt_residual(p, sol.schedule);
        const double kkt = std::max({r.stationarity, -r.min_multiplier, r.slackness});
        worst_kkt = std::max(worst_kkt, kkt);
        if (kkt > 1e-8) ok = false;

        const double t_c = t / static_cast<double>(n - 1);
        const double opt = mse_weighted(p, t_c, optimal_weights(p, n, t_c)).mse;
        const double uni = mse_weighted(p, t_c, WeightVector::uniform(n)).mse;
        worst_w = std::max(worst_w, opt - uni);
        if (opt > uni + 1e-12) ok = false;
    }
    return {ok, fmt("worst optimal - best random = %.2e, worst KKT residual = %.2e, worst weighted - uniform = %.2e",
                    worst_gap, worst_kkt, worst_w)};
}

Outcome hessian_psd() {
    Draw d(808);
    double worst = INFINITY;
    for (int c = 0; c < 1000; ++c) {
        const TrafficParams p = d.params();
        const std::size_t n = d.n(2, 12);
        std::vector<double> iv(n - 1);
        for (double &x : iv) x = d.unif(0.0, 5.0);
        const HessianMatrix h = mse_hessian(p, SampleSchedule(iv));
        worst = std::min(worst, h.min_eigenvalue() / std::max(h.entries.norm(), 1e-300));
    }
    return {worst >= -1e-9, fmt("1000 draws, smallest eigenvalue / norm = %.3e", worst)};
}

Outcome algorithm_one() {
    ExperimentSpec a;
    a.u = {0.6};
    a.lambda_f = {0.9};
    a.estimators = {EstimatorTag::Algo1};
    a.algo1.t0 = 10.0;
    a.algo1.n0 = 5;
    a.algo1.alpha = 5.0;
    a.algo1.max_samples = 100;
    a.replicates = 10'000;
    a.seed = 9;
    const ResultTable ta = run_experiment(a);
    const double limit = 1.05 * std::sqrt(0.6 * 0.4 / 100.0);
    const double rms = ta.rows.at(0).mc_rms;
    const bool first_ok = rms <= limit;

    ExperimentSpec b;
    for (int i = 1; i <= 9; ++i) b.u.push_back(i / 10.0);
    b.lambda_f = {0.9};
    b.estimators = {EstimatorTag::Algo1};
    b.algo1.n0 = 50;
    b.algo1.t0 = 0.05;
    b.algo1.target_mse = 0.01;
    b.algo1_alpha = {1.0, 2.0, 5.0};
    b.replicates = 10'000;
    b.seed = 10;
    const ResultTable tb = run_experiment(b);
    double worst = 0.0;
    for (const ResultRow &r : tb.rows) worst = std::max(worst, r.error ? INFINITY : r.mc_rms);
    const bool second_ok = worst <= 0.1 && tb.rows.size() == 27;
    return {first_ok && second_ok,
            fmt("fixed-N rms %.5f (limit %.5f); target-error worst rms %.4f over 27 configs", rms, limit, worst)};
}

Outcome algorithm_two() {
    ExperimentSpec s;
    for (int i = 1; i <= 9; ++i) s.u.push_back(i / 10.0);
    s.lambda_f = {0.1, 0.5, 0.9};
    s.estimators = {EstimatorTag::Algo2};
    s.algo2.t0 = 0.05;
    s.algo2.v_u_th = 0.01;
    s.algo2.v_lambda_th = 0.01;
    s.algo2.lambda_min = 0.1;
    s.algo2.lambda_max = 1.0;
    s.replicates = 10'000;
    s.seed = 11;
    const ResultTable t = run_experiment(s);
    double lo = INFINITY, hi = -INFINITY, worst_u = 0.0, worst_rate = 0.0;
    for (const ResultRow &r : t.rows) {
        lo = std::min(lo, r.t_window);
        hi = std::max(hi, r.t_window);
        if (r.estimator == "algo2_u") worst_u = std::max(worst_u, r.mc_rms);
        else worst_rate = std::max(worst_rate, r.mc_rms);
    }
    const bool window_ok = std::abs(lo - 290.0) <= 0.1 && std::abs(hi - 290.0) <= 0.1;
    const bool constant = hi - lo <= 1e-9;
    const bool rms_ok = worst_u <= 0.1 && worst_rate <= 0.1;
    return {window_ok && constant && rms_ok,
            fmt("window %.4f..%.4f s (target 290 +- 0.1)", lo, hi) +
                fmt(", worst rms u %.4f, rate %.4f", worst_u, worst_rate)};
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char *name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "closed-form MSE equals exact enumeration", 120, oracle_equivalence},
        {2, "Fisher information equals exact enumeration", 120, fisher_equivalence},
        {3, "asymptotes match N = 1e5", 60, asymptotes},
        {4, "Monte Carlo within 3 standard errors", 600, monte_carlo_agreement},
        {5, "ML duty-cycle RMS reduction band", 1, ml_advantage},
        {6, "sensing-error impact", 1200, sensing_impact},
        {7, "optimal design dominance", 300, design_dominance},
        {8, "Hessian positive semidefinite", 60, hessian_psd},
        {9, "Algorithm I accuracy", 900, algorithm_one},
        {10, "Algorithm II observation window", 1800, algorithm_two},
    };
    int failures = 0;
    for (const Criterion &c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o = c.run();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_s) {
            o.pass = false;
            o.detail += fmt(" [over time budget %.0f s]", c.budget_s);
        }
        if (!o.pass) ++failures;
        std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
