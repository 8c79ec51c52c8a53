#include <array>
#include <cmath>
#include <string>

#include "putraffic/errors.hpp"
#include "putraffic/harness.hpp"

namespace putraffic {

namespace {

constexpr std::size_t kClosedFormReplicates = 100'000;
constexpr std::size_t kMlReplicates = 10'000;
constexpr std::size_t kNoisyMlReplicates = 1'000;

constexpr std::array<std::string_view, 7> kPresets = {
    "fig_rms_vs_N",        "fig_asymptote_vs_T",  "fig_rms_vs_u", "fig_sensing_impact",
    "algo1_constrained_N", "algo1_target_error", "algo2_joint",
};

std::vector<double> range(double lo, double hi, double step) {
    std::vector<double> v;
    const int n = static_cast<int>((hi - lo) / step + 0.5);
    for (int i = 0; i <= n; ++i) v.push_back(std::round((lo + step * i) * 1e9) / 1e9);
    return v;
}

std::vector<std::size_t> range_n(std::size_t lo, std::size_t hi, std::size_t step) {
    std::vector<std::size_t> v;
    for (std::size_t n = lo; n <= hi; n += step) v.push_back(n);
    return v;
}

ExperimentSpec build(std::string_view name) {
    ExperimentSpec s;
    s.metadata["preset"] = std::string(name);
    if (name == "fig_rms_vs_N") {
        s.kind = ExperimentKind::RmsVsN;
        s.u = {0.3, 0.6};
        s.lambda_f = {0.4, 0.9};
        s.t_window = {50.0};
        s.n = range_n(40, 150, 10);
        s.estimators = {EstimatorTag::Avg, EstimatorTag::AvgOptimal, EstimatorTag::Weighted, EstimatorTag::MlU};
        s.replicates = kClosedFormReplicates;
    } else if (name == "fig_asymptote_vs_T") {
        // Large N stands in for the N -> infinity limit.
        s.kind = ExperimentKind::AsymptoteVsT;
        s.u = {0.3, 0.6};
        s.lambda_f = {0.4, 0.9};
        s.t_window = range(10.0, 100.0, 10.0);
        s.n = {1000};
        s.estimators = {EstimatorTag::Avg, EstimatorTag::AvgOptimal, EstimatorTag::Weighted, EstimatorTag::MlU};
        s.replicates = kClosedFormReplicates;
        s.metadata["n_for_asymptote"] = "1000";
    } else if (name == "fig_rms_vs_u") {
        s.kind = ExperimentKind::RmsVsU;
        s.u = range(0.05, 0.95, 0.05);
        s.lambda_f = {0.1, 0.5, 1.0, 2.0};
        s.t_window = {100.0};
        s.n = {100};
        s.estimators = {EstimatorTag::Avg, EstimatorTag::MlU};
        s.replicates = kClosedFormReplicates;
    } else if (name == "fig_sensing_impact") {
        s.kind = ExperimentKind::SensingImpact;
        s.u = {0.3};
        s.lambda_f = {0.9};
        s.t_window = {50.0};
        s.n = {50, 100, 200, 500, 1000};
        s.sensing = {SensingModel{0.0, 0.0}, SensingModel{0.05, 0.05}, SensingModel{0.1, 0.1}};
        s.estimators = {EstimatorTag::AvgCorrected, EstimatorTag::Weighted, EstimatorTag::MlU,
                        EstimatorTag::MlLambdaF};
        s.replicates = kMlReplicates;
        s.noisy_ml_replicates = kNoisyMlReplicates;
    } else if (name == "algo1_constrained_N") {
        s.kind = ExperimentKind::Algo1ConstrainedN;
        s.u = {0.6};
        s.lambda_f = {0.9};
        s.estimators = {EstimatorTag::Algo1};
        s.algo1.n0 = 5;
        s.algo1_t0 = {1.0, 10.0};
        s.algo1_alpha = {1.0, 2.0, 5.0};
        s.algo1_n_th = range_n(10, 100, 10);
        s.replicates = kMlReplicates;
    } else if (name == "algo1_target_error") {
        s.kind = ExperimentKind::Algo1TargetError;
        s.u = range(0.1, 0.9, 0.1);
        s.lambda_f = {0.9};
        s.estimators = {EstimatorTag::Algo1};
        s.algo1.n0 = 50;
        s.algo1.t0 = 0.05;
        s.algo1.target_mse = 0.01;
        s.algo1_alpha = {1.0, 2.0, 5.0};
        s.replicates = kMlReplicates;
    } else if (name == "algo2_joint") {
        s.kind = ExperimentKind::Algo2Joint;
        s.u = range(0.1, 0.9, 0.1);
        s.lambda_f = {0.1, 0.5, 0.9};
        s.estimators = {EstimatorTag::Algo2};
        s.algo2.t0 = 0.05;
        s.algo2.v_u_th = 0.01;
        s.algo2.v_lambda_th = 0.01;
        s.algo2.lambda_min = 0.1;
        s.algo2.lambda_max = 1.0;
        s.replicates = kMlReplicates;
    } else {
        throw DomainError("unknown preset '" + std::string(name) + "'");
    }
    return s;
}

} // namespace

std::vector<std::string> preset_names() { return {kPresets.begin(), kPresets.end()}; }

ExperimentSpec make_preset(std::string_view name, std::optional<std::size_t> replicates,
                           std::optional<std::uint64_t> seed) {
    ExperimentSpec s = build(name);
    if (replicates) {
        s.replicates = *replicates;
        if (s.noisy_ml_replicates) s.noisy_ml_replicates = std::min(s.noisy_ml_replicates, *replicates);
    }
    if (seed) s.seed = *seed;
    if (s.noisy_ml_replicates)
        s.metadata["noisy_ml_replicates_note"] = "ML on sensed data runs on a reduced replicate count";
    return s;
}

} // namespace putraffic
