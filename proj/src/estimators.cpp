#include "putraffic/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/tools/roots.hpp>

#include "putraffic/errors.hpp"

namespace putraffic {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Value plus first derivative, enough to push the score through the forward
// recursion alongside the likelihood.
struct Dual {
    double v = 0.0;
    double d = 0.0;
};

Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
Dual constant(double v) { return {v, 0.0}; }
Dual dexp(Dual a) {
    const double e = std::exp(a.v);
    return {e, e * a.d};
}
// 1 - exp(a) without cancellation.
Dual one_minus_exp(Dual a) { return {-std::expm1(a.v), -std::exp(a.v) * a.d}; }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_uniform(const SampleStream &stream, double t_c) {
    if (!stream.schedule->is_uniform())
        throw DomainError("likelihood-based estimators require a uniform schedule");
    if (!(t_c > 0.0)) throw DomainError("sample spacing t_c must be > 0");
    if (stream.size() >= 2) {
        const double tu = stream.schedule->uniform_interval();
        if (std::abs(tu - t_c) > 1e-9 * t_c)
            throw DomainError("t_c does not match the stream's sample spacing");
    }
}

void check_sensed(const SampleStream &stream, const SensingModel &s) {
    if (!s.perfect() && !stream.sensed) throw DomainError("sensing model given for an unsensed stream");
}

double mean_bits(std::span<const std::uint8_t> bits) {
    if (bits.empty()) throw DomainError("empty sample stream");
    std::size_t ones = 0;
    for (auto b : bits) ones += b;
    return static_cast<double>(ones) / static_cast<double>(bits.size());
}

// Transition probabilities of the sampled chain at (u, lambda_f).
struct Chain {
    double p00, p01, p10, p11;
};

Chain chain(double u, double lambda_f, double t_c) {
    const double g = std::exp(-lambda_f * t_c / u);
    const double omg = -std::expm1(-lambda_f * t_c / u);
    return {1.0 - u * omg, u * omg, (1.0 - u) * omg, u + (1.0 - u) * g};
}

double xlogy(std::size_t n, double p) {
    if (n == 0) return 0.0;
    if (!(p > 0.0)) return kNegInf;
    return static_cast<double>(n) * std::log(p);
}

// Scaled forward recursion; returns log L and its derivative w.r.t. the
// seeded parameter.
Dual forward(std::span<const std::uint8_t> z, Dual u, Dual lambda_f, double t_c, const SensingModel &s) {
    const Dual x = constant(-t_c) * lambda_f / u;
    const Dual omg = one_minus_exp(x);
    const Dual g = dexp(x);
    const Dual one = constant(1.0);
    // P[from][to]
    const Dual p01 = u * omg;
    const Dual p00 = one - p01;
    const Dual p10 = (one - u) * omg;
    const Dual p11 = u + (one - u) * g;

    Dual a0 = (one - u) * constant(s.emission(z[0], 0));
    Dual a1 = u * constant(s.emission(z[0], 1));
    Dual ll{0.0, 0.0};
    auto normalize = [&] {
        const Dual c = a0 + a1;
        ll = ll + Dual{std::log(c.v), c.d / c.v};
        a0 = a0 / c;
        a1 = a1 / c;
    };
    normalize();
    for (std::size_t n = 1; n < z.size(); ++n) {
        const Dual e0 = constant(s.emission(z[n], 0));
        const Dual e1 = constant(s.emission(z[n], 1));
        const Dual b0 = (a0 * p00 + a1 * p10) * e0;
        const Dual b1 = (a0 * p01 + a1 * p11) * e1;
        a0 = b0;
        a1 = b1;
        normalize();
    }
    return ll;
}

Dual forward_wrt(std::span<const std::uint8_t> z, double u, double lambda_f, double t_c, const SensingModel &s,
                 LikelihoodParameter wrt) {
    switch (wrt) {
    case LikelihoodParameter::DutyCycle:
        return forward(z, {u, 1.0}, constant(lambda_f), t_c, s);
    case LikelihoodParameter::DepartureRate:
        return forward(z, constant(u), {lambda_f, 1.0}, t_c, s);
    case LikelihoodParameter::ArrivalRate:
        // lambda_f = u lambda_n / (1 - u)
        return forward(z, constant(u), {lambda_f, u / (1.0 - u)}, t_c, s);
    }
    return {};
}

struct Maximum {
    double x;
    double log_likelihood;
    bool interior;
};

// Maximizes a smooth log-likelihood on [lo, hi]: scan the grid, then refine
// the score root bracketed by the neighbours of the best grid point.
template <class LogLik, class Score>
Maximum grid_then_refine(const std::vector<double> &grid, LogLik loglik, Score score, double tol) {
    std::size_t best = 0;
    double best_ll = kNegInf;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double ll = loglik(grid[i]);
        if (ll > best_ll) {
            best_ll = ll;
            best = i;
        }
    }
    const double lo = grid[best == 0 ? 0 : best - 1];
    const double hi = grid[std::min(best + 1, grid.size() - 1)];
    const double s_lo = score(lo);
    const double s_hi = score(hi);
    if (s_lo > 0.0 && s_hi >= 0.0) return {hi, loglik(hi), false};
    if (s_lo <= 0.0 && s_hi < 0.0) return {lo, loglik(lo), false};
    if (s_lo == 0.0) return {lo, loglik(lo), true};
    if (s_hi == 0.0) return {hi, loglik(hi), true};
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(
        score, lo, hi, s_lo, s_hi,
        [tol](double a, double b) { return std::abs(b - a) <= tol; }, iters);
    const double x = 0.5 * (r.first + r.second);
    return {x, loglik(x), true};
}

// Duty-cycle grid: 0.01..0.99 step 0.01, extended by points near the
// boundaries so the bracketing also works for estimates below 0.01 or
// above 0.99.
std::vector<double> duty_cycle_grid() {
    std::vector<double> g;
    g.push_back(1e-9);
    for (int i = 1; i <= 99; ++i) g.push_back(i / 100.0);
    g.push_back(1.0 - 1e-9);
    return g;
}

Estimate make_duty_estimate(double raw, EstimatorId id, bool converged = true) {
    Estimate e;
    e.raw_value = raw;
    e.value = clamp01(raw);
    e.estimator_id = id;
    e.converged = converged;
    return e;
}

Estimate make_rate_estimate(double raw, EstimatorId id, bool converged) {
    Estimate e;
    e.raw_value = raw;
    e.value = std::max(raw, 0.0);
    e.estimator_id = id;
    e.converged = converged;
    return e;
}

// Stream with no 0<->1 change: the likelihood is monotone in u.
std::optional<Estimate> degenerate_duty(std::span<const std::uint8_t> bits, EstimatorId id) {
    const bool all0 = std::all_of(bits.begin(), bits.end(), [](auto b) { return b == 0; });
    const bool all1 = std::all_of(bits.begin(), bits.end(), [](auto b) { return b == 1; });
    if (!all0 && !all1) return std::nullopt;
    return make_duty_estimate(all1 ? 1.0 : 0.0, id, false);
}

} // namespace

std::string_view to_string(EstimatorId id) {
    switch (id) {
    case EstimatorId::Averaging: return "avg";
    case EstimatorId::AveragingCorrected: return "avg_corrected";
    case EstimatorId::Weighted: return "weighted";
    case EstimatorId::WeightedCorrected: return "weighted_corrected";
    case EstimatorId::MlDutyCycle: return "ml_u";
    case EstimatorId::MlDutyCycleNoisy: return "ml_u_noisy";
    case EstimatorId::MlDepartureRate: return "ml_lambda_f";
    case EstimatorId::MlArrivalRate: return "ml_lambda_n";
    case EstimatorId::MlDepartureRateNoisy: return "ml_lambda_f_noisy";
    case EstimatorId::MlArrivalRateNoisy: return "ml_lambda_n_noisy";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// WeightVector

WeightVector::WeightVector(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw DomainError("weight vector is empty");
    // Neumaier summation keeps the check meaningful for long vectors.
    double sum = 0.0, comp = 0.0;
    for (double w : w_) {
        if (!std::isfinite(w)) throw DomainError("weights must be finite");
        const double t = sum + w;
        comp += std::abs(sum) >= std::abs(w) ? (sum - t) + w : (w - t) + sum;
        sum = t;
    }
    if (std::abs(sum + comp - 1.0) > 1e-12) throw DomainError("weights must sum to 1");
}

WeightVector WeightVector::uniform(std::size_t n) {
    if (n == 0) throw DomainError("weight vector is empty");
    return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double WeightVector::sum_of_squares() const {
    double s = 0.0;
    for (double w : w_) s += w * w;
    return s;
}

// ---------------------------------------------------------------------------
// Averaging

Estimate avg_estimate(const SampleStream &stream) {
    return make_duty_estimate(mean_bits(stream.bits()), EstimatorId::Averaging);
}

Estimate avg_estimate_corrected(const SampleStream &stream, const SensingModel &s) {
    s.require_invertible();
    check_sensed(stream, s);
    const double m = mean_bits(stream.bits());
    return make_duty_estimate((m - s.p_f) / s.contrast(), EstimatorId::AveragingCorrected);
}

Estimate weighted_estimate(const SampleStream &stream, const WeightVector &w, const std::optional<SensingModel> &s) {
    if (w.size() != stream.size()) throw DomainError("weight vector length does not match the stream");
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * stream.values[i];
    if (!s) return make_duty_estimate(acc, EstimatorId::Weighted);
    s->require_invertible();
    check_sensed(stream, *s);
    return make_duty_estimate((acc - s->p_f) / s->contrast(), EstimatorId::WeightedCorrected);
}

// ---------------------------------------------------------------------------
// Transition counts and the perfect-sensing likelihood

TransitionCounts count_transitions(std::span<const std::uint8_t> bits) {
    if (bits.empty()) throw DomainError("empty sample stream");
    TransitionCounts c;
    c.first_sample = bits[0];
    for (std::size_t i = 1; i < bits.size(); ++i) {
        switch ((bits[i - 1] << 1) | bits[i]) {
        case 0: ++c.n0; break;
        case 1: ++c.n1; break;
        case 2: ++c.n2; break;
        default: ++c.n3; break;
        }
    }
    return c;
}

TransitionCounts count_transitions(const SampleStream &stream) {
    if (!stream.schedule->is_uniform()) throw DomainError("transition counts require a uniform schedule");
    return count_transitions(stream.bits());
}

double log_likelihood_u(const TransitionCounts &counts, double u_cand, double lambda_f, double t_c) {
    if (!(lambda_f > 0.0) || !(t_c > 0.0)) throw DomainError("lambda_f and t_c must be > 0");
    if (!(u_cand > 0.0 && u_cand < 1.0)) return kNegInf;
    const Chain c = chain(u_cand, lambda_f, t_c);
    const double first = counts.first_sample ? std::log(u_cand) : std::log1p(-u_cand);
    return first + xlogy(counts.n0, c.p00) + xlogy(counts.n1, c.p01) + xlogy(counts.n2, c.p10) +
           xlogy(counts.n3, c.p11);
}

double score_u(const TransitionCounts &counts, double u, double lambda_f, double t_c) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("u must lie in (0, 1)");
    const double lt = lambda_f * t_c;
    const double g = std::exp(-lt / u);
    const double omg = -std::expm1(-lt / u);
    const Chain c = chain(u, lambda_f, t_c);
    // dP01/du = -dP00/du = phi0, dP11/du = -dP10/du = phi1
    const double phi0 = omg - g * lt / u;
    const double phi1 = omg + (1.0 - u) * g * lt / (u * u);
    auto term = [](std::size_t n, double dp, double p) { return n ? static_cast<double>(n) * dp / p : 0.0; };
    const double z1 = counts.first_sample;
    return (z1 - u) / (u * (1.0 - u)) - term(counts.n0, phi0, c.p00) + term(counts.n1, phi0, c.p01) -
           term(counts.n2, phi1, c.p10) + term(counts.n3, phi1, c.p11);
}

double log_likelihood_lambda_f(const TransitionCounts &counts, double u, double lambda_f, double t_c) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("u must lie in (0, 1)");
    if (!(lambda_f >= 0.0)) return kNegInf;
    if (lambda_f == 0.0) {
        // Gamma = 1: the chain never moves.
        if (counts.n1 || counts.n2) return kNegInf;
        return counts.first_sample ? std::log(u) : std::log1p(-u);
    }
    return log_likelihood_u(counts, u, lambda_f, t_c);
}

LikelihoodValue forward_log_likelihood(std::span<const std::uint8_t> reported, const TrafficParams &p, double t_c,
                                       const SensingModel &s, LikelihoodParameter wrt) {
    if (reported.empty()) throw DomainError("empty sample stream");
    if (!(t_c > 0.0)) throw DomainError("sample spacing t_c must be > 0");
    const Dual r = forward_wrt(reported, p.u(), p.lambda_f(), t_c, s, wrt);
    return {r.v, r.d};
}

// ---------------------------------------------------------------------------
// ML duty cycle

Estimate ml_estimate_u(const SampleStream &stream, double lambda_f_known, double t_c) {
    check_uniform(stream, t_c);
    if (!(lambda_f_known > 0.0)) throw DomainError("lambda_f must be > 0");
    if (auto d = degenerate_duty(stream.bits(), EstimatorId::MlDutyCycle)) return *d;
    const TransitionCounts counts = count_transitions(stream.bits());
    auto ll = [&](double u) { return log_likelihood_u(counts, u, lambda_f_known, t_c); };
    auto sc = [&](double u) { return score_u(counts, u, lambda_f_known, t_c); };
    const Maximum m = grid_then_refine(duty_cycle_grid(), ll, sc, 1e-12);
    Estimate e = make_duty_estimate(m.x, EstimatorId::MlDutyCycle, m.interior);
    e.log_likelihood = m.log_likelihood;
    return e;
}

Estimate ml_estimate_u_noisy(const SampleStream &stream, double lambda_f_known, double t_c, const SensingModel &s) {
    if (s.perfect()) {
        Estimate e = ml_estimate_u(stream, lambda_f_known, t_c);
        e.estimator_id = EstimatorId::MlDutyCycleNoisy;
        return e;
    }
    check_uniform(stream, t_c);
    check_sensed(stream, s);
    if (!(lambda_f_known > 0.0)) throw DomainError("lambda_f must be > 0");
    const auto bits = stream.bits();
    auto eval = [&](double u) { return forward(bits, {u, 1.0}, constant(lambda_f_known), t_c, s); };
    auto ll = [&](double u) { return eval(u).v; };
    auto sc = [&](double u) { return eval(u).d; };
    const Maximum m = grid_then_refine(duty_cycle_grid(), ll, sc, 1e-12);
    Estimate e = make_duty_estimate(m.x, EstimatorId::MlDutyCycleNoisy, m.interior);
    e.log_likelihood = m.log_likelihood;
    return e;
}

// ---------------------------------------------------------------------------
// ML rates

Estimate ml_estimate_lambda_f(const TransitionCounts &counts, double u, double t_c) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("u must lie in (0, 1)");
    if (!(t_c > 0.0)) throw DomainError("sample spacing t_c must be > 0");
    if (counts.transitions() < 1) throw DomainError("rate estimation needs N >= 2");
    if (counts.n1 + counts.n2 == 0) {
        // No observed switching: the likelihood peaks at lambda_f = 0.
        Estimate e = make_rate_estimate(0.0, EstimatorId::MlDepartureRate, false);
        e.log_likelihood = log_likelihood_lambda_f(counts, u, 0.0, t_c);
        return e;
    }
    const double m = static_cast<double>(counts.transitions());
    const double n0 = static_cast<double>(counts.n0);
    const double n3 = static_cast<double>(counts.n3);
    const double a = (u - u * u) * m;
    const double b = -2.0 * a + m - (1.0 - u) * n0 - u * n3;
    const double c = a - u * n0 - (1.0 - u) * n3;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) throw NoSolutionError("rate ML: negative discriminant");
    const double gamma = (-b + std::sqrt(disc)) / (2.0 * a);
    if (!(gamma > 0.0)) throw NoSolutionError("rate ML: correlation root outside (0, 1)");
    Estimate e;
    if (gamma >= 1.0) {
        e = make_rate_estimate(0.0, EstimatorId::MlDepartureRate, false);
    } else {
        e = make_rate_estimate(-(u / t_c) * std::log(gamma), EstimatorId::MlDepartureRate, true);
    }
    e.log_likelihood = log_likelihood_lambda_f(counts, u, e.value, t_c);
    return e;
}

Estimate ml_estimate_lambda_n(const TransitionCounts &counts, double u, double t_c) {
    Estimate e = ml_estimate_lambda_f(counts, u, t_c);
    const double k = (1.0 - u) / u;
    e.raw_value *= k;
    e.value *= k;
    e.estimator_id = EstimatorId::MlArrivalRate;
    return e;
}

Estimate ml_estimate_rates_noisy(const SampleStream &stream, double u, double t_c, const SensingModel &s,
                                 const RateSearch &search) {
    const bool arrival = search.parameter == LikelihoodParameter::ArrivalRate;
    if (search.parameter == LikelihoodParameter::DutyCycle)
        throw DomainError("rate search parameter must be a rate");
    check_uniform(stream, t_c);
    if (!(u > 0.0 && u < 1.0)) throw DomainError("u must lie in (0, 1)");
    if (s.perfect()) {
        const TransitionCounts counts = count_transitions(stream.bits());
        Estimate e = arrival ? ml_estimate_lambda_n(counts, u, t_c) : ml_estimate_lambda_f(counts, u, t_c);
        e.estimator_id = arrival ? EstimatorId::MlArrivalRateNoisy : EstimatorId::MlDepartureRateNoisy;
        return e;
    }
    check_sensed(stream, s);
    if (!(search.lo > 0.0 && search.hi > search.lo) || search.grid_points < 2)
        throw DomainError("rate search interval must satisfy 0 < lo < hi with >= 2 grid points");
    const auto bits = stream.bits();
    // Search in the requested rate; lambda_f = k * rate.
    const double k = arrival ? u / (1.0 - u) : 1.0;
    auto eval = [&](double rate) { return forward(bits, constant(u), {k * rate, k}, t_c, s); };
    auto ll = [&](double r) { return eval(r).v; };
    auto sc = [&](double r) { return eval(r).d; };
    std::vector<double> grid(search.grid_points);
    const double step = std::log(search.hi / search.lo) / static_cast<double>(search.grid_points - 1);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = search.lo * std::exp(step * static_cast<double>(i));
    grid.back() = search.hi;
    const Maximum m = grid_then_refine(grid, ll, sc, 1e-12 * search.hi);
    Estimate e = make_rate_estimate(m.x, arrival ? EstimatorId::MlArrivalRateNoisy : EstimatorId::MlDepartureRateNoisy,
                                    m.interior);
    e.log_likelihood = m.log_likelihood;
    return e;
}

} // namespace putraffic
