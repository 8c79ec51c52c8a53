#pragma once

#include <vector>

#include <Eigen/Dense>

#include "putraffic/accuracy.hpp"
#include "putraffic/estimators.hpp"
#include "putraffic/traffic.hpp"

namespace putraffic {

// MSE-minimizing inter-sample times for N samples within a window T.
//
// In regime k the first and last k-1 intervals are zero (k samples coincide
// at each end), the next two inward are t_a, and the N - 2k - 1 interior
// intervals are t_b, with
//     G(t_a) = G(t_b) / (k (1 - G(t_b))),   G(t) = exp(-lambda_f t / u).
// Regime k holds for
//     (N-2k-1) (u/lambda_f) log((k+1)/k) <= T <= (N-2k+1) (u/lambda_f) log(k/(k-1)),
// with no upper bound for k = 1. When no interior interval is left
// (k = floor(N/2)) the whole window sits in the middle one (even N) or the
// middle two (odd N); t_a and t_b then both report that interval.
struct ScheduleSolution {
    SampleSchedule schedule;
    std::size_t k_regime = 1;
    double t_a = 0.0;
    double t_b = 0.0;
    double mse_at_optimum = 0.0; // mse_avg of `schedule`
};

ScheduleSolution optimal_schedule(const TrafficParams &p, std::size_t n, double t_window);

// Closed-form MSE at the optimal schedule, without building it.
ErrorReport optimal_schedule_mse(const TrafficParams &p, std::size_t n, double t_window);

// Edge weights 1/(N(1-G)+2G), interior (1-G)/(N(1-G)+2G), G = G(t_c).
WeightVector optimal_weights(const TrafficParams &p, std::size_t n, double t_c);

struct HessianMatrix {
    Eigen::MatrixXd entries;

    double min_eigenvalue() const;
    bool is_symmetric(double tol = 1e-12) const;
};

// dV/dT_n of mse_avg with respect to each inter-sample time.
std::vector<double> mse_gradient(const TrafficParams &p, const SampleSchedule &sched);

// Analytic (N-1)x(N-1) Hessian of mse_avg with respect to the intervals.
HessianMatrix mse_hessian(const TrafficParams &p, const SampleSchedule &sched);

// KKT check for min V(T) s.t. sum T_n = T, T_n >= 0. With the gradient g,
// mu = -mean(g_n) over the positive intervals and v_n = g_n + mu.
struct KktResidual {
    double stationarity = 0.0;    // max |g_n + mu| over positive intervals
    double min_multiplier = 0.0;  // min v_n over zero intervals (>= 0 at an optimum); 0 if none
    double slackness = 0.0;       // max |v_n T_n|
    double mu = 0.0;
};

KktResidual kkt_residual(const TrafficParams &p, const SampleSchedule &sched);

} // namespace putraffic
