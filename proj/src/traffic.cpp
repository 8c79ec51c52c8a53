#include "putraffic/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "putraffic/errors.hpp"

namespace putraffic {

namespace {

void check_rate(double rate, const char *name) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw DomainError(std::string(name) + " must be a positive finite rate");
}

void check_duty_cycle(double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("duty cycle u must lie in (0, 1)");
}

} // namespace

// ---------------------------------------------------------------------------
// TrafficParams

TrafficParams::TrafficParams(double u, double lambda_f, double lambda_n)
    : u_(u), lambda_f_(lambda_f), lambda_n_(lambda_n) {
    check_duty_cycle(u_);
    check_rate(lambda_f_, "lambda_f");
    check_rate(lambda_n_, "lambda_n");
}

TrafficParams TrafficParams::from_u_lambda_f(double u, double lambda_f) {
    check_duty_cycle(u);
    check_rate(lambda_f, "lambda_f");
    return TrafficParams(u, lambda_f, lambda_f * (1.0 - u) / u);
}

TrafficParams TrafficParams::from_u_lambda_n(double u, double lambda_n) {
    check_duty_cycle(u);
    check_rate(lambda_n, "lambda_n");
    return TrafficParams(u, lambda_n * u / (1.0 - u), lambda_n);
}

TrafficParams TrafficParams::from_rates(double lambda_f, double lambda_n) {
    check_rate(lambda_f, "lambda_f");
    check_rate(lambda_n, "lambda_n");
    return TrafficParams(lambda_f / (lambda_f + lambda_n), lambda_f, lambda_n);
}

double TrafficParams::decay(double t) const { return std::exp(-decay_rate() * t); }

// ---------------------------------------------------------------------------
// SampleSchedule

SampleSchedule::SampleSchedule(std::vector<double> inter_sample_times, double start_offset)
    : times_(std::move(inter_sample_times)), start_offset_(start_offset) {
    if (!(start_offset_ >= 0.0) || !std::isfinite(start_offset_))
        throw DomainError("schedule start offset must be finite and >= 0");
    for (double t : times_) {
        if (!(t >= 0.0) || !std::isfinite(t))
            throw DomainError("inter-sample times must be finite and >= 0");
    }
    window_ = std::accumulate(times_.begin(), times_.end(), 0.0);
}

SampleSchedule SampleSchedule::uniform(std::size_t n, double t_window, double start_offset) {
    if (n == 0) throw DomainError("a schedule needs at least one sample");
    if (n == 1) return SampleSchedule({}, start_offset);
    if (!(t_window >= 0.0)) throw DomainError("window must be >= 0");
    return SampleSchedule(std::vector<double>(n - 1, t_window / static_cast<double>(n - 1)),
                          start_offset);
}

std::vector<double> SampleSchedule::sample_times() const {
    std::vector<double> out;
    out.reserve(sample_count());
    double t = start_offset_;
    out.push_back(t);
    for (double dt : times_) {
        t += dt;
        out.push_back(t);
    }
    return out;
}

bool SampleSchedule::is_uniform() const {
    if (times_.size() <= 1) return true;
    const double ref = times_.front();
    return std::all_of(times_.begin(), times_.end(), [ref](double t) {
        return std::abs(t - ref) <= 1e-9 * std::max(std::abs(ref), 1e-300);
    });
}

double SampleSchedule::uniform_interval() const {
    if (times_.empty()) return 0.0;
    return window_ / static_cast<double>(times_.size());
}

SampleSchedule SampleSchedule::reversed() const {
    return SampleSchedule(std::vector<double>(times_.rbegin(), times_.rend()), start_offset_);
}

// ---------------------------------------------------------------------------
// SensingModel

SensingModel::SensingModel(double pf, double pm) : p_f(pf), p_m(pm) {
    if (!(pf >= 0.0 && pf <= 1.0) || !(pm >= 0.0 && pm <= 1.0))
        throw DomainError("sensing error probabilities must lie in [0, 1]");
}

void SensingModel::require_invertible() const {
    if (contrast() == 0.0)
        throw UndefinedEstimatorError("bias-corrected estimator undefined for P_f + P_m = 1");
}

double SensingModel::noise_variance(double u) const {
    const double c = contrast();
    return (u * p_m * (1.0 - p_m) + (1.0 - u) * p_f * (1.0 - p_f)) / (c * c);
}

double SensingModel::emission(std::uint8_t reported, std::uint8_t truth) const {
    if (truth) return reported ? 1.0 - p_m : p_m;
    return reported ? p_f : 1.0 - p_f;
}

// ---------------------------------------------------------------------------
// SampleStream / Trajectory

SampleStream::SampleStream(std::vector<std::uint8_t> bits, std::shared_ptr<const SampleSchedule> sched,
                           bool is_sensed)
    : values(std::move(bits)), schedule(std::move(sched)), sensed(is_sensed) {
    if (!schedule) throw DomainError("sample stream requires a schedule");
    if (values.size() != schedule->sample_count())
        throw DomainError("stream length does not match schedule sample count");
}

std::uint8_t Trajectory::state_at(double t) const {
    auto flips = std::upper_bound(switch_times.begin(), switch_times.end(), t) - switch_times.begin();
    return static_cast<std::uint8_t>(initial_state ^ (flips & 1));
}

double Trajectory::time_on_fraction() const {
    double on = 0.0;
    double prev = 0.0;
    std::uint8_t state = initial_state;
    for (double s : switch_times) {
        if (state) on += s - prev;
        prev = s;
        state ^= 1;
    }
    if (state) on += horizon - prev;
    return on / horizon;
}

// ---------------------------------------------------------------------------
// Process statistics

double transition_prob(std::uint8_t x, std::uint8_t y, double t, const TrafficParams &p) {
    if (!(t >= 0.0)) throw DomainError("transition time must be >= 0");
    const double u = p.u();
    const double g = p.decay(t);
    if (x == 0) {
        const double p00 = 1.0 - u + u * g;
        return y == 0 ? p00 : 1.0 - p00;
    }
    const double p11 = u + (1.0 - u) * g;
    return y == 1 ? p11 : 1.0 - p11;
}

double stationary_correlation(std::size_t lag, const TrafficParams &p, double t_c) {
    if (!(t_c > 0.0)) throw DomainError("sample spacing must be > 0");
    const double u = p.u();
    const double gj = std::exp(-p.decay_rate() * t_c * static_cast<double>(lag));
    return u * gj + u * u * (1.0 - gj);
}

double sensed_correlation_independent_errors(std::size_t lag, const TrafficParams &p, double t_c,
                                             const SensingModel &s) {
    const double c = s.contrast();
    return stationary_correlation(lag, p, t_c) * c * c + 2.0 * p.u() * s.p_f * c + s.p_f * s.p_f;
}

double sensed_correlation(std::size_t lag, const TrafficParams &p, double t_c, const SensingModel &s) {
    if (lag == 0) {
        if (!(t_c > 0.0)) throw DomainError("sample spacing must be > 0");
        return s.contrast() * p.u() + s.p_f;
    }
    return sensed_correlation_independent_errors(lag, p, t_c, s);
}

// ---------------------------------------------------------------------------
// Simulation

Trajectory generate_trajectory(const TrafficParams &p, double horizon, Rng &rng) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("horizon must be > 0");
    Trajectory traj;
    traj.horizon = horizon;
    traj.initial_state = bernoulli(rng, p.u()) ? 1 : 0;
    std::uint8_t state = traj.initial_state;
    double t = 0.0;
    for (;;) {
        t += exponential(rng, state ? p.lambda_n() : p.lambda_f());
        if (t >= horizon) break;
        // A zero-length sojourn would break strict monotonicity; it has
        // probability zero but log1p(-U) can round to 0 for U < 2^-53.
        if (!traj.switch_times.empty() && t <= traj.switch_times.back()) continue;
        if (t <= 0.0) continue;
        traj.switch_times.push_back(t);
        state ^= 1;
    }
    return traj;
}

Trajectory generate_trajectory(const TrafficParams &p, double horizon, std::uint64_t seed) {
    Rng rng(seed);
    return generate_trajectory(p, horizon, rng);
}

SampleStream sample_trajectory(const Trajectory &traj, std::shared_ptr<const SampleSchedule> sched) {
    if (!sched) throw DomainError("null schedule");
    if (sched->last_sample_time() > traj.horizon * (1.0 + 1e-12))
        throw DomainError("schedule extends past the trajectory horizon");
    std::vector<std::uint8_t> bits;
    bits.reserve(sched->sample_count());
    std::size_t next_switch = 0;
    std::uint8_t state = traj.initial_state;
    double t = sched->start_offset();
    auto advance = [&](double time) {
        while (next_switch < traj.switch_times.size() && traj.switch_times[next_switch] <= time) {
            state ^= 1;
            ++next_switch;
        }
    };
    advance(t);
    bits.push_back(state);
    for (double dt : sched->inter_sample_times()) {
        t += dt;
        advance(t);
        bits.push_back(state);
    }
    return SampleStream(std::move(bits), std::move(sched), false);
}

SampleStream sample_trajectory(const Trajectory &traj, const SampleSchedule &sched) {
    return sample_trajectory(traj, std::make_shared<const SampleSchedule>(sched));
}

SampleStream corrupt(const SampleStream &stream, const SensingModel &s, Rng &rng) {
    if (stream.sensed) throw DomainError("stream is already sensed; refusing double corruption");
    SampleStream out = stream;
    for (auto &bit : out.values) {
        const double flip = bit ? s.p_m : s.p_f;
        if (uniform01(rng) < flip) bit ^= 1;
    }
    out.sensed = true;
    return out;
}

SampleStream corrupt(const SampleStream &stream, const SensingModel &s, std::uint64_t seed) {
    Rng rng(seed);
    return corrupt(stream, s, rng);
}

} // namespace putraffic
