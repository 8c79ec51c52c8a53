#include "putraffic/design.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "putraffic/errors.hpp"

namespace putraffic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Regime {
    std::size_t k;
    bool collapsed; // no interior interval left
};

// Regime brackets tile (0, inf); the scan returns the smallest k whose
// bracket contains T.
Regime select_regime(std::size_t n, double t_window, double r) {
    const std::size_t kmax = n / 2;
    for (std::size_t k = 1; k <= kmax; ++k) {
        const double kk = static_cast<double>(k);
        const long interior = static_cast<long>(n) - 2 * static_cast<long>(k) - 1;
        const double hi = k == 1 ? kInf : static_cast<double>(interior + 2) * r * std::log(kk / (kk - 1.0));
        if (interior <= 0) {
            if (t_window <= hi) return {k, true};
            continue;
        }
        const double lo = static_cast<double>(interior) * r * std::log((kk + 1.0) / kk);
        if (t_window >= lo && t_window <= hi) return {k, false};
    }
    // Only reachable through rounding at a bracket edge; the largest k is
    // the collapsed regime, which covers the smallest windows.
    return {kmax, true};
}

struct Intervals {
    double t_a;
    double t_b;
};

// Solves 2 t_a + m t_b = T with t_a = t_b + r log(k (1 - exp(-t_b / r))).
Intervals solve_regime(std::size_t k, std::size_t m, double t_window, double r) {
    const double kk = static_cast<double>(k);
    const double mm = static_cast<double>(m);
    auto t_a_of = [&](double tb) { return tb + r * std::log(kk * -std::expm1(-tb / r)); };
    auto f = [&](double tb) { return 2.0 * t_a_of(tb) + mm * tb - t_window; };
    // t_a >= 0 bounds t_b below, t_a <= t_b bounds it above.
    double lo = std::max(r * std::log((kk + 1.0) / kk), t_window / (mm + 2.0));
    double hi = t_window / mm;
    if (k > 1) hi = std::min(hi, r * std::log(kk / (kk - 1.0)));
    if (lo > hi) lo = hi;
    const double f_lo = f(lo);
    const double f_hi = f(hi);
    double tb;
    if (f_lo >= 0.0) {
        tb = lo;
    } else if (f_hi <= 0.0) {
        tb = hi;
    } else {
        std::uintmax_t iters = 200;
        auto res = boost::math::tools::toms748_solve(
            f, lo, hi, f_lo, f_hi, [&](double a, double b) { return std::abs(b - a) <= 1e-14 * hi; }, iters);
        tb = 0.5 * (res.first + res.second);
    }
    // Recover t_a from the window so the intervals sum to T exactly.
    const double ta = std::clamp(0.5 * (t_window - mm * tb), 0.0, tb);
    return {ta, tb};
}

void check_design_args(std::size_t n, double t_window) {
    if (n < 2) throw DomainError("schedule design needs N >= 2");
    if (!(t_window > 0.0) || !std::isfinite(t_window)) throw DomainError("window must be > 0");
}

} // namespace

ScheduleSolution optimal_schedule(const TrafficParams &p, std::size_t n, double t_window) {
    check_design_args(n, t_window);
    const double r = 1.0 / p.decay_rate();
    const Regime reg = select_regime(n, t_window, r);
    const std::size_t k = reg.k;
    std::vector<double> iv(n - 1, 0.0);
    ScheduleSolution sol;
    sol.k_regime = k;
    if (reg.collapsed) {
        if (n % 2 == 0) {
            iv[n / 2 - 1] = t_window;
            sol.t_a = sol.t_b = t_window;
        } else {
            iv[k - 1] = iv[k] = 0.5 * t_window;
            sol.t_a = sol.t_b = 0.5 * t_window;
        }
    } else {
        const std::size_t m = n - 2 * k - 1;
        const Intervals t = solve_regime(k, m, t_window, r);
        iv[k - 1] = t.t_a;
        iv[n - 1 - k] = t.t_a;
        for (std::size_t i = 0; i < m; ++i) iv[k + i] = t.t_b;
        sol.t_a = t.t_a;
        sol.t_b = t.t_b;
    }
    sol.schedule = SampleSchedule(std::move(iv));
    sol.mse_at_optimum = mse_avg(p, sol.schedule).mse;
    return sol;
}

ErrorReport optimal_schedule_mse(const TrafficParams &p, std::size_t n, double t_window) {
    check_design_args(n, t_window);
    const double r = 1.0 / p.decay_rate();
    const Regime reg = select_regime(n, t_window, r);
    const double uv = p.u() * (1.0 - p.u());
    const double nn = static_cast<double>(n);
    double v;
    if (reg.collapsed) {
        if (n % 2 == 0) {
            v = uv * (1.0 + std::exp(-t_window / r)) / 2.0;
        } else {
            const double m = static_cast<double>((n - 1) / 2);
            const double g = std::exp(-t_window / (2.0 * r));
            v = uv * (nn + 2.0 * (m * (m - 1.0) + 2.0 * m * g + m * m * g * g)) / (nn * nn);
        }
    } else {
        const std::size_t k = reg.k;
        const Intervals t = solve_regime(k, n - 2 * k - 1, t_window, r);
        const double gb = std::exp(-t.t_b / r);
        const double omg = -std::expm1(-t.t_b / r);
        const double kk = static_cast<double>(k);
        v = 2.0 * uv / (nn * nn) *
            (nn / 2.0 + (gb + kk * (kk - 1.0) * omg * omg + gb * (nn - 2.0 * kk) * omg) / (omg * omg));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "u=%.6g lambda_f=%.6g N=%zu T=%.6g", p.u(), p.lambda_f(), n, t_window);
    return ErrorReport::make(v, ErrorSource::ClosedForm, buf);
}

WeightVector optimal_weights(const TrafficParams &p, std::size_t n, double t_c) {
    if (n < 1) throw DomainError("need at least one weight");
    if (n == 1) return WeightVector({1.0});
    if (!(t_c > 0.0)) throw DomainError("sample spacing must be > 0");
    const double nn = static_cast<double>(n);
    const double g = p.decay(t_c);
    const double omg = -std::expm1(-p.decay_rate() * t_c);
    const double d = nn * omg + 2.0 * g;
    std::vector<double> w(n, omg / d);
    w.front() = w.back() = 1.0 / d;
    // The closed form sums to one algebraically; renormalize the rounding.
    double sum = 0.0;
    for (double x : w) sum += x;
    for (double &x : w) x /= sum;
    return WeightVector(std::move(w));
}

// ---------------------------------------------------------------------------
// Derivatives of the averaging MSE

namespace {

// left[a] = sum_{i<=a} prod_{k=i}^{a} G_k, right[b] = sum_{j>=b} prod_{k=b}^{j} G_k.
void partial_sums(const TrafficParams &p, std::span<const double> iv, std::vector<double> &g,
                  std::vector<double> &left, std::vector<double> &right) {
    const std::size_t m = iv.size();
    g.resize(m);
    left.assign(m, 0.0);
    right.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) g[i] = std::exp(-p.decay_rate() * iv[i]);
    for (std::size_t i = 0; i < m; ++i) left[i] = g[i] * (1.0 + (i ? left[i - 1] : 0.0));
    for (std::size_t i = m; i-- > 0;) right[i] = g[i] * (1.0 + (i + 1 < m ? right[i + 1] : 0.0));
}

} // namespace

std::vector<double> mse_gradient(const TrafficParams &p, const SampleSchedule &sched) {
    const auto iv = sched.inter_sample_times();
    const std::size_t m = iv.size();
    const double nn = static_cast<double>(sched.sample_count());
    const double c = -2.0 * p.u() * (1.0 - p.u()) * p.decay_rate() / (nn * nn);
    std::vector<double> g, left, right;
    partial_sums(p, iv, g, left, right);
    std::vector<double> grad(m);
    for (std::size_t a = 0; a < m; ++a) grad[a] = c * left[a] * (1.0 + (a + 1 < m ? right[a + 1] : 0.0));
    return grad;
}

HessianMatrix mse_hessian(const TrafficParams &p, const SampleSchedule &sched) {
    const auto iv = sched.inter_sample_times();
    const std::size_t m = iv.size();
    if (m < 1) throw DomainError("Hessian needs N >= 2");
    const double nn = static_cast<double>(sched.sample_count());
    const double rate = p.decay_rate();
    const double c = 2.0 * p.u() * (1.0 - p.u()) * rate * rate / (nn * nn);
    std::vector<double> g, left, right;
    partial_sums(p, iv, g, left, right);
    HessianMatrix h{Eigen::MatrixXd(m, m)};
    for (std::size_t a = 0; a < m; ++a) {
        h.entries(a, a) = c * left[a] * (1.0 + (a + 1 < m ? right[a + 1] : 0.0));
        double mid = 1.0; // prod_{k=a+1}^{b-1} G_k
        for (std::size_t b = a + 1; b < m; ++b) {
            const double v = c * left[a] * mid * right[b];
            h.entries(a, b) = v;
            h.entries(b, a) = v;
            mid *= g[b];
        }
    }
    return h;
}

double HessianMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool HessianMatrix::is_symmetric(double tol) const {
    const double scale = std::max(entries.cwiseAbs().maxCoeff(), 1e-300);
    return (entries - entries.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

KktResidual kkt_residual(const TrafficParams &p, const SampleSchedule &sched) {
    const auto iv = sched.inter_sample_times();
    const std::vector<double> grad = mse_gradient(p, sched);
    const double zero_tol = 1e-12 * std::max(sched.window(), 1e-300);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < iv.size(); ++i) {
        if (iv[i] > zero_tol) {
            sum += grad[i];
            ++count;
        }
    }
    KktResidual r;
    if (count == 0) return r;
    r.mu = -sum / static_cast<double>(count);
    bool any_zero = false;
    for (std::size_t i = 0; i < iv.size(); ++i) {
        const double v = grad[i] + r.mu;
        if (iv[i] > zero_tol) {
            r.stationarity = std::max(r.stationarity, std::abs(v));
        } else {
            r.min_multiplier = any_zero ? std::min(r.min_multiplier, v) : v;
            any_zero = true;
        }
        r.slackness = std::max(r.slackness, std::abs(v * iv[i]));
    }
    return r;
}

} // namespace putraffic
