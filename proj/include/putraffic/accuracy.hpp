#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "putraffic/estimators.hpp"
#include "putraffic/traffic.hpp"

namespace putraffic {

enum class ErrorSource { ClosedForm, Asymptote, OracleEnumeration, MonteCarlo };
std::string_view to_string(ErrorSource s);

struct ErrorReport {
    double mse = 0.0;
    double rms = 0.0;
    ErrorSource source = ErrorSource::ClosedForm;
    std::string config_digest;

    static ErrorReport make(double mse, ErrorSource source, std::string digest = {});
};

enum class FisherParameter { DutyCycle, DepartureRate, ArrivalRate };
std::string_view to_string(FisherParameter p);

struct FisherInfo {
    double value = 0.0;
    FisherParameter parameter = FisherParameter::DutyCycle;
    double crb() const { return 1.0 / value; }
};

// ---------------------------------------------------------------------------
// Averaging estimator

// MSE of the plain average for an arbitrary schedule, O(N).
ErrorReport mse_avg(const TrafficParams &p, const SampleSchedule &sched);

// V_N - V_{N+1} when one more sample is taken t_next after the last one,
// from the one-step update formula.
double mse_avg_decrement(const TrafficParams &p, const SampleSchedule &sched, double t_next);
// Limit of mse_avg_decrement as t_next -> infinity.
double mse_avg_decrement_max(const TrafficParams &p, const SampleSchedule &sched);

// Closed form for N samples evenly spread over t_window; n >= 2.
ErrorReport mse_avg_uniform(const TrafficParams &p, std::size_t n, double t_window);
// N -> infinity limit at fixed window: 2u(1-u)(e^-eta + eta - 1)/eta^2, eta = lambda_f T / u.
ErrorReport mse_avg_uniform_asymptote(const TrafficParams &p, double t_window);

// Smallest N >= 2 with mse_avg_uniform(N) <= beta * asymptote. beta > 1.
std::size_t required_samples(const TrafficParams &p, double t_window, double beta);

// Bias-corrected average under sensing errors: mse_avg plus the per-sample
// noise term noise_variance(u) / N.
ErrorReport mse_avg_corrected(const TrafficParams &p, const SampleSchedule &sched, const SensingModel &s);

// ---------------------------------------------------------------------------
// Weighted estimator (uniform spacing t_c)

// u(1-u) (sum w^2 + 2 sum_j G^j sum_i w_i w_{i+j}) + noise_variance(u) sum w^2.
ErrorReport mse_weighted(const TrafficParams &p, double t_c, const WeightVector &w,
                         const std::optional<SensingModel> &s = std::nullopt);
// Closed form at the optimal weights.
ErrorReport mse_weighted_optimal(const TrafficParams &p, std::size_t n, double t_c,
                                 const std::optional<SensingModel> &s = std::nullopt);
// u(1-u) / (1 + lambda_f T / (2u)); the sensing term vanishes in the limit.
ErrorReport mse_weighted_asymptote(const TrafficParams &p, double t_window,
                                   const std::optional<SensingModel> &s = std::nullopt);

// ---------------------------------------------------------------------------
// Fisher information and CR bounds (uniform spacing t_c, n >= 2)

FisherInfo fisher_u(const TrafficParams &p, std::size_t n, double t_c);
FisherInfo fisher_lambda_f(const TrafficParams &p, std::size_t n, double t_c);
FisherInfo fisher_lambda_n(const TrafficParams &p, std::size_t n, double t_c);

ErrorReport crb_u(const TrafficParams &p, std::size_t n, double t_c);
ErrorReport crb_lambda_f(const TrafficParams &p, std::size_t n, double t_c);
ErrorReport crb_lambda_n(const TrafficParams &p, std::size_t n, double t_c);

// N -> infinity limits at fixed window T.
ErrorReport crb_u_asymptote(const TrafficParams &p, double t_window);        // u(1-u)/(1+lambda_f T/u)
ErrorReport crb_lambda_f_asymptote(const TrafficParams &p, double t_window); // lambda_f/(2T(1-u))
ErrorReport crb_lambda_n_asymptote(const TrafficParams &p, double t_window); // lambda_n/(2Tu)

// ---------------------------------------------------------------------------
// Brute-force oracles

// Maps a stream of bits to a raw (unclamped) estimate of u.
using BitEstimator = std::function<double(std::span<const std::uint8_t>)>;

constexpr std::size_t kMaxEnumerationSamples = 20;
constexpr std::size_t kMaxFisherSamples = 12;

// Exact E[(estimate - u)^2] over all 2^N true sequences, with the sensing
// channel applied when given. Throws RefusedError for N > 20.
ErrorReport oracle_mse_enumeration(const TrafficParams &p, const SampleSchedule &sched, const BitEstimator &estimator,
                                   const std::optional<SensingModel> &s = std::nullopt);

// Exact Fisher information E[score^2] over all 2^N sequences, the score
// taken by differentiating each factor of the sequence likelihood.
// Throws RefusedError for n > 12.
FisherInfo oracle_fisher_enumeration(const TrafficParams &p, std::size_t n, double t_c, FisherParameter parameter);

// E[score] over the same enumeration; zero up to rounding.
double oracle_score_mean(const TrafficParams &p, std::size_t n, double t_c, FisherParameter parameter);

} // namespace putraffic
