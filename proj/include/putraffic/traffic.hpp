#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "putraffic/rng.hpp"

namespace putraffic {

// Ground-truth parameters of the on/off channel occupancy process.
// Off-times are exponential with rate lambda_f, on-times with rate lambda_n,
// and the duty cycle is u = lambda_f / (lambda_f + lambda_n). Any two of
// the three determine the third; the factories derive it.
class TrafficParams {
  public:
    static TrafficParams from_u_lambda_f(double u, double lambda_f);
    static TrafficParams from_u_lambda_n(double u, double lambda_n);
    static TrafficParams from_rates(double lambda_f, double lambda_n);

    double u() const { return u_; }
    double lambda_f() const { return lambda_f_; }
    double lambda_n() const { return lambda_n_; }
    double mean_off_time() const { return 1.0 / lambda_f_; }
    double mean_on_time() const { return 1.0 / lambda_n_; }

    // lambda_f / u, the decay rate of the state correlation.
    double decay_rate() const { return lambda_f_ / u_; }
    // Correlation decay factor exp(-lambda_f t / u) over an interval t.
    double decay(double t) const;

  private:
    TrafficParams(double u, double lambda_f, double lambda_n);
    double u_;
    double lambda_f_;
    double lambda_n_;
};

// Inter-sample times T_1..T_{N-1}; sample n is taken at
// start_offset + T_1 + ... + T_{n-1}. Zero entries are coinciding samples.
class SampleSchedule {
  public:
    SampleSchedule() = default;
    explicit SampleSchedule(std::vector<double> inter_sample_times, double start_offset = 0.0);

    // N samples evenly spread over a window of length t_window.
    static SampleSchedule uniform(std::size_t n, double t_window, double start_offset = 0.0);

    std::size_t sample_count() const { return times_.size() + 1; }
    double window() const { return window_; }
    double start_offset() const { return start_offset_; }
    std::span<const double> inter_sample_times() const { return times_; }
    double interval(std::size_t k) const { return times_.at(k); }

    // Absolute times of all N samples.
    std::vector<double> sample_times() const;
    double last_sample_time() const { return start_offset_ + window_; }

    // Constant spacing to a relative tolerance of 1e-9. N <= 2 is uniform.
    bool is_uniform() const;
    // T/(N-1); only meaningful when is_uniform().
    double uniform_interval() const;

    SampleSchedule reversed() const;

    bool operator==(const SampleSchedule &) const = default;

  private:
    std::vector<double> times_;
    double start_offset_ = 0.0;
    double window_ = 0.0;
};

struct SensingModel {
    double p_f = 0.0; // false alarm: report on while off
    double p_m = 0.0; // mis-detection: report off while on

    SensingModel() = default;
    SensingModel(double pf, double pm);

    bool perfect() const { return p_f == 0.0 && p_m == 0.0; }
    // 1 - P_f - P_m; the bias-correction denominator.
    double contrast() const { return 1.0 - p_f - p_m; }
    // Throws UndefinedEstimatorError when P_f + P_m == 1.
    void require_invertible() const;
    // uP_m(1-P_m) + (1-u)P_f(1-P_f), divided by (1-P_f-P_m)^2: the per-sample
    // variance added by independent sensing errors after bias correction.
    double noise_variance(double u) const;
    // Pr(reported bit | true bit).
    double emission(std::uint8_t reported, std::uint8_t truth) const;
};

// Bits z_1..z_N aligned with a schedule; `sensed` marks reported bits.
struct SampleStream {
    std::vector<std::uint8_t> values;
    std::shared_ptr<const SampleSchedule> schedule;
    bool sensed = false;

    SampleStream() = default;
    SampleStream(std::vector<std::uint8_t> bits, std::shared_ptr<const SampleSchedule> sched,
                 bool is_sensed = false);

    std::size_t size() const { return values.size(); }
    std::span<const std::uint8_t> bits() const { return values; }
};

// Continuous realization of the alternating renewal process, stored as
// switch times.
struct Trajectory {
    std::uint8_t initial_state = 0;
    std::vector<double> switch_times; // strictly increasing, inside (0, horizon)
    double horizon = 0.0;

    std::uint8_t state_at(double t) const;
    // Fraction of [0, horizon] spent in the on state.
    double time_on_fraction() const;
};

// Pr_xy(t): probability the process is in state y a time t after being in x.
double transition_prob(std::uint8_t x, std::uint8_t y, double t, const TrafficParams &p);

// E[z_i z_{i+j}] for uniformly spaced samples t_c apart:
// u Γ^j + u^2 (1 - Γ^j), Γ = exp(-lambda_f t_c / u).
double stationary_correlation(std::size_t lag, const TrafficParams &p, double t_c);

// E[ẑ_i ẑ_{i+j}] for reported samples with independent per-sample errors.
// Lag 0 is the second moment of a single reported bit, E[ẑ] = (1-P_f-P_m)u + P_f.
double sensed_correlation(std::size_t lag, const TrafficParams &p, double t_c, const SensingModel &s);

// R(1-P_f-P_m)^2 + 2uP_f(1-P_f-P_m) + P_f^2 at any lag, i.e. the lag >= 1
// expression extended to lag 0 as if both bits had independent errors.
double sensed_correlation_independent_errors(std::size_t lag, const TrafficParams &p, double t_c,
                                             const SensingModel &s);

// Stationary start: initial state ~ Bernoulli(u), exponential sojourns.
Trajectory generate_trajectory(const TrafficParams &p, double horizon, std::uint64_t seed);
Trajectory generate_trajectory(const TrafficParams &p, double horizon, Rng &rng);

// Reads the trajectory at every scheduled sample time.
SampleStream sample_trajectory(const Trajectory &traj, std::shared_ptr<const SampleSchedule> sched);
SampleStream sample_trajectory(const Trajectory &traj, const SampleSchedule &sched);

// Flips 1s with probability p_m and 0s with probability p_f, independently.
SampleStream corrupt(const SampleStream &stream, const SensingModel &s, std::uint64_t seed);
SampleStream corrupt(const SampleStream &stream, const SensingModel &s, Rng &rng);

} // namespace putraffic
