#include <cmath>
#include <vector>

#include "putraffic/accuracy.hpp"
#include "putraffic/errors.hpp"

namespace putraffic {

namespace {

// Pr(z) for every sequence; bit k of the index is z_{k+1}.
std::vector<double> sequence_probabilities(const TrafficParams &p, std::span<const double> intervals) {
    const std::size_t n = intervals.size() + 1;
    std::vector<double> prob(std::size_t{1} << n, 0.0);
    prob[0] = 1.0 - p.u();
    prob[1] = p.u();
    for (std::size_t k = 1; k < n; ++k) {
        const double t = intervals[k - 1];
        const std::size_t prev = std::size_t{1} << k;
        for (std::size_t idx = 0; idx < prev; ++idx) {
            const auto x = static_cast<std::uint8_t>((idx >> (k - 1)) & 1);
            const double base = prob[idx];
            prob[idx] = base * transition_prob(x, 0, t, p);
            prob[idx | prev] = base * transition_prob(x, 1, t, p);
        }
    }
    return prob;
}

// Pushes true-sequence probabilities through the per-sample error channel.
void apply_sensing(std::vector<double> &prob, std::size_t n, const SensingModel &s) {
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t bit = std::size_t{1} << k;
        for (std::size_t i0 = 0; i0 < prob.size(); ++i0) {
            if (i0 & bit) continue;
            const double a = prob[i0];
            const double b = prob[i0 | bit];
            prob[i0] = a * (1.0 - s.p_f) + b * s.p_m;
            prob[i0 | bit] = a * s.p_f + b * (1.0 - s.p_m);
        }
    }
}

void unpack(std::size_t idx, std::vector<std::uint8_t> &bits) {
    for (std::size_t k = 0; k < bits.size(); ++k) bits[k] = static_cast<std::uint8_t>((idx >> k) & 1);
}

// d/dtheta of (u, Gamma(t)) for the parameter being differentiated; the
// other free parameter is held fixed.
struct Tangent {
    double du;
    double dg_per_g_t; // (dGamma/dtheta) / (Gamma t)
};

Tangent tangent(const TrafficParams &p, FisherParameter which) {
    const double u = p.u();
    switch (which) {
    case FisherParameter::DutyCycle: return {1.0, p.lambda_f() / (u * u)};
    case FisherParameter::DepartureRate: return {0.0, -1.0 / u};
    case FisherParameter::ArrivalRate: return {0.0, -1.0 / (1.0 - u)};
    }
    return {0.0, 0.0};
}

// d log P_xy(t) / dtheta by the chain rule through u and Gamma.
double transition_score(std::uint8_t x, std::uint8_t y, double t, const TrafficParams &p, const Tangent &d) {
    const double u = p.u();
    const double g = p.decay(t);
    const double omg = -std::expm1(-p.decay_rate() * t);
    const double dg = d.dg_per_g_t * g * t;
    if (x == 0 && y == 0) return (-omg * d.du + u * dg) / (1.0 - u * omg);
    if (x == 0 && y == 1) return d.du / u - dg / omg;
    if (x == 1 && y == 0) return -d.du / (1.0 - u) - dg / omg;
    return (omg * d.du + (1.0 - u) * dg) / (u + (1.0 - u) * g);
}

// Calls f(probability, score) for every sequence, with the score obtained by
// exact differentiation of each factor.
template <class F>
void for_each_score(const TrafficParams &p, std::size_t n, double t_c, FisherParameter which, F f) {
    if (n < 1) throw DomainError("need at least one sample");
    if (n > kMaxFisherSamples) throw RefusedError("Fisher enumeration refused for N > 12");
    if (!(t_c > 0.0)) throw DomainError("sample spacing must be > 0");
    const Tangent d = tangent(p, which);
    const double u = p.u();
    double pt[2][2], st[2][2];
    for (std::uint8_t x = 0; x < 2; ++x)
        for (std::uint8_t y = 0; y < 2; ++y) {
            pt[x][y] = transition_prob(x, y, t_c, p);
            st[x][y] = transition_score(x, y, t_c, p, d);
        }
    std::vector<std::uint8_t> z(n);
    for (std::size_t idx = 0; idx < (std::size_t{1} << n); ++idx) {
        unpack(idx, z);
        double pr = z[0] ? u : 1.0 - u;
        double score = z[0] ? d.du / u : -d.du / (1.0 - u);
        for (std::size_t k = 1; k < n; ++k) {
            pr *= pt[z[k - 1]][z[k]];
            score += st[z[k - 1]][z[k]];
        }
        f(pr, score);
    }
}

} // namespace

ErrorReport oracle_mse_enumeration(const TrafficParams &p, const SampleSchedule &sched, const BitEstimator &estimator,
                                   const std::optional<SensingModel> &s) {
    const std::size_t n = sched.sample_count();
    if (n > kMaxEnumerationSamples) throw RefusedError("MSE enumeration refused for N > 20");
    std::vector<double> prob = sequence_probabilities(p, sched.inter_sample_times());
    if (s) apply_sensing(prob, n, *s);
    std::vector<std::uint8_t> z(n);
    double mse = 0.0;
    for (std::size_t idx = 0; idx < prob.size(); ++idx) {
        if (prob[idx] == 0.0) continue;
        unpack(idx, z);
        const double err = estimator(z) - p.u();
        mse += prob[idx] * err * err;
    }
    return ErrorReport::make(mse, ErrorSource::OracleEnumeration);
}

FisherInfo oracle_fisher_enumeration(const TrafficParams &p, std::size_t n, double t_c, FisherParameter parameter) {
    double info = 0.0;
    for_each_score(p, n, t_c, parameter, [&](double pr, double score) { info += pr * score * score; });
    return {info, parameter};
}

double oracle_score_mean(const TrafficParams &p, std::size_t n, double t_c, FisherParameter parameter) {
    double mean = 0.0;
    for_each_score(p, n, t_c, parameter, [&](double pr, double score) { mean += pr * score; });
    return mean;
}

} // namespace putraffic
