#include "putraffic/accuracy.hpp"

#include <cmath>
#include <cstdio>

#include "putraffic/errors.hpp"

namespace putraffic {

namespace {

std::string digest(const TrafficParams &p, std::size_t n, double t_window, const SensingModel *s = nullptr) {
    char buf[160];
    if (s)
        std::snprintf(buf, sizeof buf, "u=%.6g lambda_f=%.6g N=%zu T=%.6g Pf=%.6g Pm=%.6g", p.u(), p.lambda_f(), n,
                      t_window, s->p_f, s->p_m);
    else
        std::snprintf(buf, sizeof buf, "u=%.6g lambda_f=%.6g N=%zu T=%.6g", p.u(), p.lambda_f(), n, t_window);
    return buf;
}

void check_spacing(std::size_t n, double t_c) {
    if (n < 2) throw DomainError("need at least two samples");
    if (!(t_c > 0.0) || !std::isfinite(t_c)) throw DomainError("sample spacing must be > 0");
}

// Sum over i < j of prod_{k=i}^{j-1} G_k for the given intervals.
double correlation_sum(const TrafficParams &p, std::span<const double> intervals) {
    const double rate = p.decay_rate();
    double run = 0.0; // sum of products ending at the current interval
    double total = 0.0;
    for (double t : intervals) {
        run = std::exp(-rate * t) * (1.0 + run);
        total += run;
    }
    return total;
}

} // namespace

std::string_view to_string(ErrorSource s) {
    switch (s) {
    case ErrorSource::ClosedForm: return "closed_form";
    case ErrorSource::Asymptote: return "asymptote";
    case ErrorSource::OracleEnumeration: return "oracle_enumeration";
    case ErrorSource::MonteCarlo: return "monte_carlo";
    }
    return "unknown";
}

std::string_view to_string(FisherParameter p) {
    switch (p) {
    case FisherParameter::DutyCycle: return "u";
    case FisherParameter::DepartureRate: return "lambda_f";
    case FisherParameter::ArrivalRate: return "lambda_n";
    }
    return "unknown";
}

ErrorReport ErrorReport::make(double mse, ErrorSource source, std::string digest) {
    if (!(mse >= 0.0)) throw DomainError("negative or NaN mean squared error");
    return {mse, std::sqrt(mse), source, std::move(digest)};
}

// ---------------------------------------------------------------------------
// Averaging

ErrorReport mse_avg(const TrafficParams &p, const SampleSchedule &sched) {
    const double n = static_cast<double>(sched.sample_count());
    const double uv = p.u() * (1.0 - p.u());
    const double s = correlation_sum(p, sched.inter_sample_times());
    return ErrorReport::make(uv / n + 2.0 * uv * s / (n * n), ErrorSource::ClosedForm,
                             digest(p, sched.sample_count(), sched.window()));
}

double mse_avg_decrement(const TrafficParams &p, const SampleSchedule &sched, double t_next) {
    if (!(t_next >= 0.0)) throw DomainError("t_next must be >= 0");
    const double n = static_cast<double>(sched.sample_count());
    const double uv = p.u() * (1.0 - p.u());
    const double rate = p.decay_rate();
    // sum_{j} prod_{k=j}^{N} G_k, the correlation of the new sample with all earlier ones
    double suffix = std::exp(-rate * t_next);
    double total = suffix;
    const auto iv = sched.inter_sample_times();
    for (auto it = iv.rbegin(); it != iv.rend(); ++it) {
        suffix *= std::exp(-rate * *it);
        total += suffix;
    }
    const double vn = mse_avg(p, sched).mse;
    return ((2.0 * n + 1.0) * vn - uv * (1.0 + 2.0 * total)) / ((n + 1.0) * (n + 1.0));
}

double mse_avg_decrement_max(const TrafficParams &p, const SampleSchedule &sched) {
    const double n = static_cast<double>(sched.sample_count());
    const double uv = p.u() * (1.0 - p.u());
    return ((2.0 * n + 1.0) * mse_avg(p, sched).mse - uv) / ((n + 1.0) * (n + 1.0));
}

ErrorReport mse_avg_uniform(const TrafficParams &p, std::size_t n, double t_window) {
    if (n < 2) throw DomainError("uniform closed form needs N >= 2");
    if (!(t_window >= 0.0)) throw DomainError("window must be >= 0");
    const double u = p.u();
    const double uv = u * (1.0 - u);
    const double nn = static_cast<double>(n);
    const double x = p.decay_rate() * t_window / (nn - 1.0);
    if (x == 0.0) return ErrorReport::make(uv, ErrorSource::ClosedForm, digest(p, n, t_window));
    const double g = std::exp(-x);
    const double omg = -std::expm1(-x);
    const double omgn = -std::expm1(-nn * x);
    const double v = uv / nn + 2.0 * uv * g * (nn * omg - omgn) / (nn * nn * omg * omg);
    return ErrorReport::make(v, ErrorSource::ClosedForm, digest(p, n, t_window));
}

ErrorReport mse_avg_uniform_asymptote(const TrafficParams &p, double t_window) {
    if (!(t_window > 0.0)) throw DomainError("window must be > 0");
    const double uv = p.u() * (1.0 - p.u());
    const double eta = p.decay_rate() * t_window;
    double v;
    if (eta < 1e-4) {
        // e^-eta + eta - 1 = eta^2/2 - eta^3/6 + eta^4/24 - ...
        v = 2.0 * uv * (0.5 - eta / 6.0 + eta * eta / 24.0);
    } else {
        v = 2.0 * uv * (std::expm1(-eta) + eta) / (eta * eta);
    }
    return ErrorReport::make(v, ErrorSource::Asymptote, digest(p, 0, t_window));
}

std::size_t required_samples(const TrafficParams &p, double t_window, double beta) {
    if (!(beta > 1.0)) throw InfeasibleError("beta must exceed 1: the asymptote is never reached");
    const double target = beta * mse_avg_uniform_asymptote(p, t_window).mse;
    auto ok = [&](std::size_t n) { return mse_avg_uniform(p, n, t_window).mse <= target; };
    if (ok(2)) return 2;
    std::size_t lo = 2, hi = 4;
    while (!ok(hi)) {
        lo = hi;
        if (hi > (std::size_t{1} << 40)) throw InfeasibleError("required sample count out of range");
        hi *= 2;
    }
    // ok(hi) holds, ok(lo) does not
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

ErrorReport mse_avg_corrected(const TrafficParams &p, const SampleSchedule &sched, const SensingModel &s) {
    s.require_invertible();
    const double n = static_cast<double>(sched.sample_count());
    const double v = mse_avg(p, sched).mse + s.noise_variance(p.u()) / n;
    return ErrorReport::make(v, ErrorSource::ClosedForm, digest(p, sched.sample_count(), sched.window(), &s));
}

// ---------------------------------------------------------------------------
// Weighted

ErrorReport mse_weighted(const TrafficParams &p, double t_c, const WeightVector &w,
                         const std::optional<SensingModel> &s) {
    if (!(t_c > 0.0)) throw DomainError("sample spacing must be > 0");
    const double g = p.decay(t_c);
    // cross = sum_{i<k} w_i w_k G^{k-i}; carry = sum_{i<k} w_i G^{k-i}
    double carry = 0.0, cross = 0.0;
    for (std::size_t k = 1; k < w.size(); ++k) {
        carry = g * (carry + w[k - 1]);
        cross += w[k] * carry;
    }
    const double w2 = w.sum_of_squares();
    double v = p.u() * (1.0 - p.u()) * (w2 + 2.0 * cross);
    if (s) {
        s->require_invertible();
        v += s->noise_variance(p.u()) * w2;
    }
    const double window = t_c * static_cast<double>(w.size() - 1);
    return ErrorReport::make(v, ErrorSource::ClosedForm, digest(p, w.size(), window, s ? &*s : nullptr));
}

ErrorReport mse_weighted_optimal(const TrafficParams &p, std::size_t n, double t_c,
                                 const std::optional<SensingModel> &s) {
    check_spacing(n, t_c);
    const double nn = static_cast<double>(n);
    const double g = p.decay(t_c);
    const double omg = -std::expm1(-p.decay_rate() * t_c);
    const double d = nn * omg + 2.0 * g;
    double v = p.u() * (1.0 - p.u()) * (1.0 + g) / d;
    if (s) {
        s->require_invertible();
        v += s->noise_variance(p.u()) * (2.0 + (nn - 2.0) * omg * omg) / (d * d);
    }
    return ErrorReport::make(v, ErrorSource::ClosedForm, digest(p, n, t_c * (nn - 1.0), s ? &*s : nullptr));
}

ErrorReport mse_weighted_asymptote(const TrafficParams &p, double t_window, const std::optional<SensingModel> &s) {
    if (!(t_window > 0.0)) throw DomainError("window must be > 0");
    if (s) s->require_invertible();
    const double v = p.u() * (1.0 - p.u()) / (1.0 + p.lambda_f() * t_window / (2.0 * p.u()));
    return ErrorReport::make(v, ErrorSource::Asymptote, digest(p, 0, t_window, s ? &*s : nullptr));
}

// ---------------------------------------------------------------------------
// Fisher information

FisherInfo fisher_u(const TrafficParams &p, std::size_t n, double t_c) {
    check_spacing(n, t_c);
    const double u = p.u();
    const double nn = static_cast<double>(n);
    const double l = p.lambda_f() * t_c;
    const double g = p.decay(t_c);
    const double omg = -std::expm1(-l / u);
    const double u2 = u * u;
    const double m1 = g * g * l * (nn - 1.0) * (1.0 - u) * (l * (1.0 - u) * (1.0 + g) - 2.0 * u * (1.0 - 2.0 * u) * omg);
    const double m2 = g * g * g * u2 * (u * (u - 1.0) * (3.0 * nn - 2.0) + (nn - 1.0));
    const double m3 = -g * g * u2 * (u * (u - 1.0) * (7.0 * nn - 4.0) + (2.0 * nn - 1.0));
    const double m4 = g * u2 * (nn * (5.0 * u2 - 5.0 * u + 1.0) + 2.0 * u * (1.0 - u));
    const double m5 = nn * u2 * u * (1.0 - u);
    const double den = omg * (g + u * omg) * (1.0 - u * omg) * u2 * u * (1.0 - u);
    return {(m1 + m2 + m3 + m4 + m5) / den, FisherParameter::DutyCycle};
}

FisherInfo fisher_lambda_f(const TrafficParams &p, std::size_t n, double t_c) {
    check_spacing(n, t_c);
    const double u = p.u();
    const double g = p.decay(t_c);
    const double omg = -std::expm1(-p.decay_rate() * t_c);
    const double gt = g * t_c;
    const double info = gt * gt * (1.0 - u) * (1.0 + g) * static_cast<double>(n - 1) /
                        (u * omg * (g + u * omg * omg * (1.0 - u)));
    return {info, FisherParameter::DepartureRate};
}

FisherInfo fisher_lambda_n(const TrafficParams &p, std::size_t n, double t_c) {
    const double u = p.u();
    const double k = u / (1.0 - u);
    return {k * k * fisher_lambda_f(p, n, t_c).value, FisherParameter::ArrivalRate};
}

ErrorReport crb_u(const TrafficParams &p, std::size_t n, double t_c) {
    return ErrorReport::make(fisher_u(p, n, t_c).crb(), ErrorSource::ClosedForm,
                             digest(p, n, t_c * static_cast<double>(n - 1)));
}

ErrorReport crb_lambda_f(const TrafficParams &p, std::size_t n, double t_c) {
    return ErrorReport::make(fisher_lambda_f(p, n, t_c).crb(), ErrorSource::ClosedForm,
                             digest(p, n, t_c * static_cast<double>(n - 1)));
}

ErrorReport crb_lambda_n(const TrafficParams &p, std::size_t n, double t_c) {
    return ErrorReport::make(fisher_lambda_n(p, n, t_c).crb(), ErrorSource::ClosedForm,
                             digest(p, n, t_c * static_cast<double>(n - 1)));
}

ErrorReport crb_u_asymptote(const TrafficParams &p, double t_window) {
    if (!(t_window > 0.0)) throw DomainError("window must be > 0");
    const double v = p.u() * (1.0 - p.u()) / (1.0 + p.decay_rate() * t_window);
    return ErrorReport::make(v, ErrorSource::Asymptote, digest(p, 0, t_window));
}

ErrorReport crb_lambda_f_asymptote(const TrafficParams &p, double t_window) {
    if (!(t_window > 0.0)) throw DomainError("window must be > 0");
    return ErrorReport::make(p.lambda_f() / (2.0 * t_window * (1.0 - p.u())), ErrorSource::Asymptote,
                             digest(p, 0, t_window));
}

ErrorReport crb_lambda_n_asymptote(const TrafficParams &p, double t_window) {
    if (!(t_window > 0.0)) throw DomainError("window must be > 0");
    return ErrorReport::make(p.lambda_n() / (2.0 * t_window * p.u()), ErrorSource::Asymptote,
                             digest(p, 0, t_window));
}

} // namespace putraffic
