#include "putraffic/blind.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "putraffic/accuracy.hpp"
#include "putraffic/errors.hpp"
#include "putraffic/estimators.hpp"

namespace putraffic {

namespace {

constexpr int kGridPoints = 99; // u = 0.01 .. 0.99

double grid_u(int i) { return (i + 1) / 100.0; }

} // namespace

// ---------------------------------------------------------------------------
// Sources

SimulatedSource::SimulatedSource(const TrafficParams &p, std::uint64_t seed, std::optional<SensingModel> s)
    : p_(p), rng_(seed), sensing_(s), sensing_rng_(derive_seed(seed, {0x5e4d})) {
    state_ = bernoulli(rng_, p_.u()) ? 1 : 0;
    do {
        next_switch_ += exponential(rng_, state_ ? p_.lambda_n() : p_.lambda_f());
    } while (next_switch_ <= 0.0);
}

TimedSample SimulatedSource::next(double delay) {
    if (!(delay >= 0.0) || !std::isfinite(delay)) throw DomainError("sampling delay must be finite and >= 0");
    now_ += delay;
    while (next_switch_ <= now_) {
        state_ ^= 1;
        const double last = next_switch_;
        do {
            next_switch_ += exponential(rng_, state_ ? p_.lambda_n() : p_.lambda_f());
        } while (next_switch_ <= last);
    }
    std::uint8_t bit = state_;
    if (sensing_) {
        const double flip = bit ? sensing_->p_m : sensing_->p_f;
        if (uniform01(sensing_rng_) < flip) bit ^= 1;
    }
    return {now_, bit};
}

ReplaySource::ReplaySource(SampleStream stream)
    : stream_(std::move(stream)), times_(stream_.schedule->sample_times()) {}

TimedSample ReplaySource::next(double) {
    if (pos_ >= stream_.size()) throw SourceExhaustedError("replayed stream exhausted");
    const TimedSample s{times_[pos_], stream_.values[pos_]};
    ++pos_;
    return s;
}

// ---------------------------------------------------------------------------
// Configs and traces

std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::MaxSamples: return "max_samples";
    case Termination::MaxWindow: return "max_window";
    case Termination::TargetMse: return "target_mse";
    }
    return "unknown";
}

void AlgoIConfig::validate() const {
    if (!(t0 > 0.0)) throw DomainError("t0 must be > 0");
    if (n0 < 1) throw DomainError("n0 must be >= 1");
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    if (!max_samples && !max_window && !target_mse) throw DomainError("no termination criterion given");
    if (max_samples && *max_samples < 1) throw DomainError("max_samples must be >= 1");
    if (max_window && !(*max_window > 0.0)) throw DomainError("max_window must be > 0");
    if (target_mse && !(*target_mse > 0.0)) throw DomainError("target_mse must be > 0");
}

void AlgoIIConfig::validate() const {
    if (!(t0 > 0.0)) throw DomainError("t0 must be > 0");
    if (!(v_u_th > 0.0) || !(v_lambda_th > 0.0)) throw DomainError("targets must be > 0");
    if (!(lambda_min > 0.0 && lambda_max > lambda_min)) throw DomainError("need 0 < lambda_min < lambda_max");
}

void write_trace_csv(std::ostream &os, const EstimationTrace &trace) {
    auto opt = [](const std::optional<double> &v) {
        if (!v) return std::string();
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        return std::string(buf);
    };
    os << "idx,time,bit,u_hat,lf_hat,ln_hat,worst_mse_u,worst_mse_rate\n";
    for (const auto &e : trace.estimates_over_time) {
        os << e.n << ',' << opt(e.time) << ',' << int(e.bit) << ',' << opt(e.u_hat) << ',' << opt(e.lf_hat) << ','
           << opt(e.ln_hat) << ',' << opt(e.worst_mse_u) << ',' << opt(e.worst_mse_rate) << '\n';
    }
}

namespace {

// Running sample state shared by both algorithms.
class Sampler {
  public:
    Sampler(SampleSource &src, EstimationTrace &trace, std::size_t cap, bool record)
        : src_(src), trace_(trace), cap_(cap), record_(record) {}

    TimedSample take(double delay) {
        if (n_ >= cap_) throw std::runtime_error("safety cap on the number of samples reached");
        const TimedSample s = src_.next(delay);
        if (n_ == 0) first_time_ = s.time;
        else counts_add(s.bit);
        last_bit_ = s.bit;
        ones_ += s.bit;
        ++n_;
        if (record_) {
            trace_.sample_times.push_back(s.time);
            trace_.samples.push_back(s.bit);
        }
        trace_.total_samples = n_;
        trace_.total_window = s.time - first_time_;
        trace_.elapsed = s.time;
        trace_.u_hat = u_hat();
        return s;
    }

    void log(const TimedSample &s, std::optional<double> wu, std::optional<double> wr = std::nullopt,
             std::optional<double> lf = std::nullopt, std::optional<double> ln = std::nullopt) {
        if (!record_) return;
        trace_.estimates_over_time.push_back({n_, s.time, s.bit, u_hat(), lf, ln, wu, wr});
    }

    std::size_t n() const { return n_; }
    double window() const { return trace_.total_window; }
    double u_hat() const { return static_cast<double>(ones_) / static_cast<double>(n_); }
    bool degenerate() const { return ones_ == 0 || ones_ == n_; }
    const TransitionCounts &counts() const { return counts_; }

  private:
    void counts_add(std::uint8_t bit) {
        switch ((last_bit_ << 1) | bit) {
        case 0: ++counts_.n0; break;
        case 1: ++counts_.n1; break;
        case 2: ++counts_.n2; break;
        default: ++counts_.n3; break;
        }
    }

    SampleSource &src_;
    EstimationTrace &trace_;
    std::size_t cap_;
    bool record_;
    std::size_t n_ = 0;
    std::size_t ones_ = 0;
    std::uint8_t last_bit_ = 0;
    double first_time_ = 0.0;
    TransitionCounts counts_;
};

// Worst case over the u grid of the averaging MSE for the realized
// schedule, updated one interval at a time.
class WorstCaseAveraging {
  public:
    explicit WorstCaseAveraging(double lambda_f) : lambda_f_(lambda_f) {
        run_.fill(0.0);
        total_.fill(0.0);
    }

    void add_interval(double t) {
        for (int i = 0; i < kGridPoints; ++i) {
            run_[i] = std::exp(-lambda_f_ * t / grid_u(i)) * (1.0 + run_[i]);
            total_[i] += run_[i];
        }
    }

    double worst(std::size_t n) const {
        const double nn = static_cast<double>(n);
        double w = 0.0;
        for (int i = 0; i < kGridPoints; ++i) {
            const double uv = grid_u(i) * (1.0 - grid_u(i));
            w = std::max(w, uv / nn + 2.0 * uv * total_[i] / (nn * nn));
        }
        return w;
    }

  private:
    double lambda_f_;
    std::array<double, kGridPoints> run_;
    std::array<double, kGridPoints> total_;
};

} // namespace

// ---------------------------------------------------------------------------
// Algorithm I

EstimationTrace run_algorithm_I(SampleSource &src, const AlgoIConfig &cfg, double lambda_f) {
    cfg.validate();
    if (!(lambda_f > 0.0)) throw DomainError("lambda_f must be > 0");
    EstimationTrace trace;
    Sampler smp(src, trace, cfg.safety_cap, cfg.record_history);
    WorstCaseAveraging wc(lambda_f);
    std::optional<double> worst;
    double prev_time = 0.0;

    auto sample = [&](double delay) {
        const TimedSample s = smp.take(delay);
        if (smp.n() > 1) wc.add_interval(s.time - prev_time);
        prev_time = s.time;
        if (cfg.target_mse) worst = wc.worst(smp.n());
        smp.log(s, worst);
    };
    // Sample-count and window limits, checked after every sample.
    auto limit_hit = [&]() -> std::optional<Termination> {
        if (cfg.max_window && smp.window() >= *cfg.max_window) return Termination::MaxWindow;
        if (cfg.max_samples && smp.n() >= *cfg.max_samples) return Termination::MaxSamples;
        return std::nullopt;
    };
    auto finish = [&](Termination t) {
        trace.terminated_by = t;
        trace.worst_mse_u = worst;
        return trace;
    };

    // Phase 1: fixed spacing until the state toggles.
    do {
        sample(cfg.t0);
        if (auto t = limit_hit()) return finish(*t);
    } while (smp.degenerate());
    // Phase 2: fixed spacing up to N_0 samples.
    while (smp.n() < cfg.n0) {
        sample(cfg.t0);
        if (auto t = limit_hit()) return finish(*t);
    }
    // Phase 3: spacing u_hat * alpha / lambda_f.
    for (;;) {
        if (auto t = limit_hit()) return finish(*t);
        if (cfg.target_mse && *worst < *cfg.target_mse) return finish(Termination::TargetMse);
        sample(smp.u_hat() * cfg.alpha / lambda_f);
    }
}

// ---------------------------------------------------------------------------
// Algorithm II

AlgoIIBounds::AlgoIIBounds(const AlgoIIConfig &cfg) : cfg_(cfg) {
    cfg_.validate();
    rows_.push_back(compute(0));
    for (std::size_t n = 1; !(stop_f_ && stop_n_); ++n) {
        if (n > cfg_.safety_cap) throw std::runtime_error("worst-case targets not reached within the safety cap");
        rows_.push_back(compute(n));
        const Row &r = rows_.back();
        const bool u_ok = r.u < cfg_.v_u_th;
        if (!stop_f_ && u_ok && r.lf < cfg_.v_lambda_th) stop_f_ = n;
        if (!stop_n_ && u_ok && r.ln < cfg_.v_lambda_th) stop_n_ = n;
    }
}

AlgoIIBounds::Row AlgoIIBounds::compute(std::size_t n) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (n < 2) return {0.25, inf, inf};
    const double window = static_cast<double>(n - 1) * cfg_.t0;
    Row r{0.0, 0.0, 0.0};
    for (int i = 0; i < kGridPoints; ++i) {
        const double u = grid_u(i);
        r.u = std::max(r.u, mse_avg_uniform(TrafficParams::from_u_lambda_f(u, cfg_.lambda_min), n, window).mse);
        // Largest rate pair with both rates in [lambda_min, lambda_max] at this u.
        const double ratio = u / (1.0 - u); // lambda_f / lambda_n
        const double lf_hi = std::min(cfg_.lambda_max, cfg_.lambda_max * ratio);
        const double lf_lo = std::max(cfg_.lambda_min, cfg_.lambda_min * ratio);
        if (lf_hi < lf_lo) continue;
        const TrafficParams p = TrafficParams::from_u_lambda_f(u, lf_hi);
        if (u <= 0.5) r.lf = std::max(r.lf, crb_lambda_f(p, n, cfg_.t0).mse);
        if (u >= 0.5) r.ln = std::max(r.ln, crb_lambda_n(p, n, cfg_.t0).mse);
    }
    return r;
}

const AlgoIIBounds::Row &AlgoIIBounds::row(std::size_t n, Row &scratch) const {
    if (n < rows_.size()) return rows_[n];
    scratch = compute(n);
    return scratch;
}

double AlgoIIBounds::worst_u(std::size_t n) const {
    Row s;
    return row(n, s).u;
}

double AlgoIIBounds::worst_lambda_f(std::size_t n) const {
    Row s;
    return row(n, s).lf;
}

double AlgoIIBounds::worst_lambda_n(std::size_t n) const {
    Row s;
    return row(n, s).ln;
}

EstimationTrace run_algorithm_II(SampleSource &src, const AlgoIIConfig &cfg, const AlgoIIBounds *bounds) {
    cfg.validate();
    std::optional<AlgoIIBounds> own;
    if (!bounds) bounds = &own.emplace(cfg);
    EstimationTrace trace;
    Sampler smp(src, trace, cfg.safety_cap, cfg.record_history);

    // Phase 1: until the state toggles.
    do {
        const TimedSample s = smp.take(cfg.t0);
        smp.log(s, std::nullopt);
    } while (smp.degenerate());

    auto estimate_rates = [&] {
        const double u = smp.u_hat();
        try {
            const Estimate lf = ml_estimate_lambda_f(smp.counts(), u, cfg.t0);
            trace.lf_hat = lf.value;
            trace.ln_hat = lf.value * (1.0 - u) / u;
        } catch (const NoSolutionError &) {
            trace.lf_hat.reset();
            trace.ln_hat.reset();
        }
    };
    // Phase 2: the termination test uses the branch picked by the current
    // u estimate; u_hat = 1/2 takes the lambda_f branch.
    for (;;) {
        const std::size_t n = smp.n();
        const bool arrival = smp.u_hat() > 0.5;
        const double wu = bounds->worst_u(n);
        const double wr = arrival ? bounds->worst_lambda_n(n) : bounds->worst_lambda_f(n);
        trace.rate_branch_arrival = arrival;
        trace.worst_mse_u = wu;
        trace.worst_mse_rate = wr;
        if (wu < cfg.v_u_th && wr < cfg.v_lambda_th) break;
        const TimedSample s = smp.take(cfg.t0);
        estimate_rates();
        if (cfg.record_history) {
            const std::size_t m = smp.n();
            const bool arr = smp.u_hat() > 0.5;
            smp.log(s, bounds->worst_u(m), arr ? bounds->worst_lambda_n(m) : bounds->worst_lambda_f(m),
                    trace.lf_hat, trace.ln_hat);
        }
    }
    if (!trace.lf_hat && !trace.ln_hat) estimate_rates();
    trace.terminated_by = Termination::TargetMse;
    return trace;
}

} // namespace putraffic
