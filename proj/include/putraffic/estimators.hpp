#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "putraffic/traffic.hpp"

namespace putraffic {

enum class EstimatorId {
    Averaging,
    AveragingCorrected,
    Weighted,
    WeightedCorrected,
    MlDutyCycle,
    MlDutyCycleNoisy,
    MlDepartureRate,
    MlArrivalRate,
    MlDepartureRateNoisy,
    MlArrivalRateNoisy,
};

std::string_view to_string(EstimatorId id);

struct Estimate {
    double value = 0.0;     // clamped: duty cycles to [0, 1], rates to [0, inf)
    double raw_value = 0.0; // before clamping
    EstimatorId estimator_id = EstimatorId::Averaging;
    bool converged = true;  // false for boundary / degenerate solutions
    std::optional<double> log_likelihood;
};

// Adjacent-sample transition counts of a uniformly sampled stream.
struct TransitionCounts {
    std::size_t n0 = 0; // 0 -> 0
    std::size_t n1 = 0; // 0 -> 1
    std::size_t n2 = 0; // 1 -> 0
    std::size_t n3 = 0; // 1 -> 1
    std::uint8_t first_sample = 0;

    std::size_t transitions() const { return n0 + n1 + n2 + n3; }
    std::size_t sample_count() const { return transitions() + 1; }
    bool operator==(const TransitionCounts &) const = default;
};

// Sample weights normalized to sum to one.
class WeightVector {
  public:
    // Throws DomainError unless the weights sum to 1 within 1e-12.
    explicit WeightVector(std::vector<double> weights);
    static WeightVector uniform(std::size_t n);

    std::size_t size() const { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    std::span<const double> values() const { return w_; }
    double sum_of_squares() const;

  private:
    std::vector<double> w_;
};

// Parameter a likelihood is differentiated with respect to. The remaining
// free parameter is held at its TrafficParams value: lambda_f for the duty
// cycle, u for either rate.
enum class LikelihoodParameter { DutyCycle, DepartureRate, ArrivalRate };

struct LikelihoodValue {
    double log_likelihood;
    double score; // d log L / d parameter
};

// Search interval and grid used by the numerical rate MLs.
struct RateSearch {
    double lo = 1e-3;
    double hi = 20.0;
    std::size_t grid_points = 200; // geometric grid
    LikelihoodParameter parameter = LikelihoodParameter::DepartureRate;
};

// (1/N) sum z_n.
Estimate avg_estimate(const SampleStream &stream);

// (mean(ẑ) - P_f) / (1 - P_f - P_m).
Estimate avg_estimate_corrected(const SampleStream &stream, const SensingModel &s);

// sum w_i z_i, or (sum w_i ẑ_i - P_f) / (1 - P_f - P_m) when sensing errors are given.
Estimate weighted_estimate(const SampleStream &stream, const WeightVector &w,
                           const std::optional<SensingModel> &s = std::nullopt);

// Requires a uniform schedule and N >= 2.
TransitionCounts count_transitions(const SampleStream &stream);
TransitionCounts count_transitions(std::span<const std::uint8_t> bits);

// Markov-chain log-likelihood of the counts at duty cycle u_cand with
// lambda_f known. Returns -inf when u_cand is on or outside the boundary.
double log_likelihood_u(const TransitionCounts &counts, double u_cand, double lambda_f, double t_c);
// d/du of the above.
double score_u(const TransitionCounts &counts, double u_cand, double lambda_f, double t_c);

// Same likelihood, as a function of lambda_f with u known.
double log_likelihood_lambda_f(const TransitionCounts &counts, double u, double lambda_f, double t_c);

// Exact likelihood of a reported stream under independent sensing errors,
// summed over hidden true states with a scaled forward recursion, together
// with its derivative with respect to `wrt`.
LikelihoodValue forward_log_likelihood(std::span<const std::uint8_t> reported, const TrafficParams &p,
                                       double t_c, const SensingModel &s,
                                       LikelihoodParameter wrt = LikelihoodParameter::DutyCycle);

// ML duty cycle with lambda_f known: likelihood scanned on a 0.01 grid, then
// the score root is bracketed around the best grid point and refined.
// Degenerate streams (all zeros / all ones) give 0 / 1 with converged=false.
Estimate ml_estimate_u(const SampleStream &stream, double lambda_f_known, double t_c);

// As ml_estimate_u, maximizing the forward-recursion likelihood. With
// P_f = P_m = 0 it returns exactly ml_estimate_u.
Estimate ml_estimate_u_noisy(const SampleStream &stream, double lambda_f_known, double t_c,
                             const SensingModel &s);

// Closed-form ML departure rate with u known. Throws NoSolutionError when the
// quadratic has no root in (0, 1); counts without any 0<->1 transition give
// the boundary estimate 0 with converged=false.
Estimate ml_estimate_lambda_f(const TransitionCounts &counts, double u_known, double t_c);

// (1 - u) / u times the departure-rate estimate.
Estimate ml_estimate_lambda_n(const TransitionCounts &counts, double u_known, double t_c);

// Numerical ML of lambda_f (or lambda_n, per search.parameter) for a sensed
// stream. P_f = P_m = 0 uses the closed form. Optima pinned to the search
// interval edges are flagged converged=false.
Estimate ml_estimate_rates_noisy(const SampleStream &stream, double u_known, double t_c,
                                 const SensingModel &s, const RateSearch &search = {});

} // namespace putraffic
