#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "putraffic/rng.hpp"
#include "putraffic/traffic.hpp"

namespace putraffic {

struct TimedSample {
    double time;
    std::uint8_t bit;
};

// Something that can be sampled "after X seconds". The clock starts at 0 and
// the first call already waits its delay.
class SampleSource {
  public:
    virtual ~SampleSource() = default;
    virtual TimedSample next(double delay) = 0;
};

// Live simulation of the on/off process. Draws follow generate_trajectory
// with the same seed, so the samples equal those of sample_trajectory on an
// equivalent pre-generated trajectory. Sensing errors, if any, use an
// independent generator seeded from `seed`.
class SimulatedSource : public SampleSource {
  public:
    SimulatedSource(const TrafficParams &p, std::uint64_t seed, std::optional<SensingModel> s = std::nullopt);
    TimedSample next(double delay) override;

  private:
    TrafficParams p_;
    Rng rng_;
    std::optional<SensingModel> sensing_;
    Rng sensing_rng_;
    double now_ = 0.0;
    double next_switch_ = 0.0;
    std::uint8_t state_ = 0;
};

// Plays back a recorded stream in order; requested delays are ignored and
// the recorded times returned. Throws SourceExhaustedError past the end.
class ReplaySource : public SampleSource {
  public:
    explicit ReplaySource(SampleStream stream);
    TimedSample next(double delay) override;

  private:
    SampleStream stream_;
    std::vector<double> times_;
    std::size_t pos_ = 0;
};

enum class Termination { MaxSamples, MaxWindow, TargetMse };
std::string_view to_string(Termination t);

// Worst-case MSE values are evaluated on u = 0.01, 0.02, ..., 0.99.
struct AlgoIConfig {
    double t0 = 1.0;
    std::size_t n0 = 5;
    double alpha = 1.0;
    std::optional<std::size_t> max_samples; // N_th
    std::optional<double> max_window;       // T_th
    std::optional<double> target_mse;       // V_th
    std::size_t safety_cap = 10'000'000;
    bool record_history = true;

    void validate() const;
};

struct AlgoIIConfig {
    double t0 = 0.05;
    double v_u_th = 0.01;
    double v_lambda_th = 0.01;
    double lambda_min = 0.1;
    double lambda_max = 1.0;
    std::size_t safety_cap = 10'000'000;
    bool record_history = true;

    void validate() const;
};

struct TraceEntry {
    std::size_t n;
    double time;
    std::uint8_t bit;
    double u_hat;
    std::optional<double> lf_hat;
    std::optional<double> ln_hat;
    std::optional<double> worst_mse_u;
    std::optional<double> worst_mse_rate;
};

// The per-sample vectors stay empty when the config turns history off.
struct EstimationTrace {
    std::vector<double> sample_times;
    std::vector<std::uint8_t> samples;
    std::vector<TraceEntry> estimates_over_time; // one per sample when recorded
    Termination terminated_by = Termination::MaxSamples;
    std::size_t total_samples = 0;
    double total_window = 0.0; // last sample time - first sample time
    double elapsed = 0.0;      // last sample time, counting the wait before the first sample
    double u_hat = 0.0;
    std::optional<double> lf_hat;
    std::optional<double> ln_hat;
    std::optional<double> worst_mse_u;    // at termination
    std::optional<double> worst_mse_rate; // at termination
    bool rate_branch_arrival = false;     // Algorithm II: lambda_n branch chosen
};

// Writes `idx,time,bit,u_hat,lf_hat,ln_hat,worst_mse_u,worst_mse_rate`.
void write_trace_csv(std::ostream &os, const EstimationTrace &trace);

EstimationTrace run_algorithm_I(SampleSource &src, const AlgoIConfig &cfg, double lambda_f_known);

// Worst-case MSE tables of Algorithm II as a function of N. They depend only
// on the configuration, so one instance can be shared by many runs.
class AlgoIIBounds {
  public:
    explicit AlgoIIBounds(const AlgoIIConfig &cfg);

    // max over u of the uniform-sampling MSE at lambda_f = lambda_min.
    double worst_u(std::size_t n) const;
    // max over u <= 1/2 of the lambda_f CR bound at the largest admissible
    // rates (both rates in [lambda_min, lambda_max]).
    double worst_lambda_f(std::size_t n) const;
    // Same for lambda_n over u >= 1/2.
    double worst_lambda_n(std::size_t n) const;

    // Smallest N at which both targets hold for each branch.
    std::size_t stop_n_departure() const { return stop_f_; }
    std::size_t stop_n_arrival() const { return stop_n_; }

  private:
    struct Row {
        double u, lf, ln;
    };
    Row compute(std::size_t n) const;
    const Row &row(std::size_t n, Row &scratch) const;

    AlgoIIConfig cfg_;
    std::vector<Row> rows_; // rows_[n] for n < rows_.size()
    std::size_t stop_f_ = 0;
    std::size_t stop_n_ = 0;
};

EstimationTrace run_algorithm_II(SampleSource &src, const AlgoIIConfig &cfg, const AlgoIIBounds *bounds = nullptr);

} // namespace putraffic
