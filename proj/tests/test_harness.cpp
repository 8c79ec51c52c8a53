#include <cmath>
#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "putraffic/accuracy.hpp"
#include "putraffic/errors.hpp"
#include "putraffic/harness.hpp"

using namespace putraffic;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec s;
    s.u = {0.3, 0.6};
    s.lambda_f = {0.9};
    s.n = {10, 60};
    s.t_window = {30.0};
    s.estimators = {EstimatorTag::Avg, EstimatorTag::Weighted, EstimatorTag::MlU, EstimatorTag::MlLambdaF};
    s.replicates = 400;
    s.seed = 5;
    return s;
}

std::string csv_of(const ResultTable &t) {
    std::ostringstream os;
    emit_csv(t, os);
    return os.str();
}

struct ThreadsEnv {
    explicit ThreadsEnv(const char *v) { setenv("PUTRAFFIC_THREADS", v, 1); }
    ~ThreadsEnv() { unsetenv("PUTRAFFIC_THREADS"); }
};

} // namespace

TEST(Harness, Deterministic) {
    EXPECT_EQ(csv_of(run_experiment(small_spec())), csv_of(run_experiment(small_spec())));
    ExperimentSpec one = small_spec();
    one.replicates = 1;
    EXPECT_EQ(csv_of(run_experiment(one)), csv_of(run_experiment(one)));
}

TEST(Harness, ThreadCountInvariant) {
    std::string serial, parallel;
    {
        ThreadsEnv env("1");
        EXPECT_EQ(worker_count(), 1u);
        serial = csv_of(run_experiment(small_spec()));
    }
    {
        ThreadsEnv env("4");
        EXPECT_EQ(worker_count(), 4u);
        parallel = csv_of(run_experiment(small_spec()));
    }
    EXPECT_EQ(serial, parallel);
}

TEST(Harness, SeedChangesResults) {
    ExperimentSpec other = small_spec();
    other.seed = 6;
    EXPECT_NE(csv_of(run_experiment(small_spec())), csv_of(run_experiment(other)));
}

TEST(Harness, RowShapeAndColumns) {
    const ResultTable t = run_experiment(small_spec());
    ASSERT_EQ(t.rows.size(), 2u * 2u * 4u);
    for (const ResultRow &r : t.rows) {
        EXPECT_FALSE(r.error);
        EXPECT_NEAR(r.lambda_n, 0.9 * (1 - r.u) / r.u, 1e-12);
        if (r.estimator == "avg" || r.estimator == "weighted") {
            ASSERT_TRUE(r.cf_rms);
            EXPECT_FALSE(r.crb_rms);
        }
        if (r.estimator == "ml_u" || r.estimator == "ml_lambda_f") {
            ASSERT_TRUE(r.crb_rms);
            EXPECT_FALSE(r.cf_rms);
        }
        if (r.n == 10 && r.estimator == "avg") {
            ASSERT_TRUE(r.oracle_rms);
        }
    }
    EXPECT_EQ(t.metadata.at("replicates"), "400");
}

TEST(Harness, MonteCarloNearClosedForm) {
    ExperimentSpec s;
    s.u = {0.3};
    s.lambda_f = {0.9};
    s.n = {100};
    s.t_window = {50.0};
    s.estimators = {EstimatorTag::Avg};
    s.replicates = 20'000;
    const ResultRow r = run_experiment(s).rows.at(0);
    ASSERT_TRUE(r.cf_rms);
    EXPECT_LE(std::abs(r.mc_rms - *r.cf_rms), 4 * r.mc_se);
    EXPECT_NEAR(*r.cf_rms, mse_avg_uniform(TrafficParams::from_u_lambda_f(0.3, 0.9), 100, 50.0).rms, 1e-15);
    // MSE within 2% at this replicate count, as an independent check of the standard error.
    EXPECT_NEAR(r.mc_rms * r.mc_rms / (*r.cf_rms * *r.cf_rms), 1.0, 0.03);
}

TEST(Harness, ErrorRowForUndefinedEstimator) {
    ExperimentSpec s;
    s.n = {20};
    s.t_window = {10.0};
    s.sensing = {SensingModel(0.5, 0.5)};
    s.estimators = {EstimatorTag::AvgCorrected, EstimatorTag::MlU};
    s.replicates = 10;
    const ResultTable t = run_experiment(s);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_TRUE(t.rows[0].error);
    EXPECT_FALSE(t.errors.empty());
    const std::string csv = csv_of(t);
    EXPECT_NE(csv.find("avg_corrected,error,,,,"), std::string::npos);
}

TEST(Harness, InvalidSpec) {
    ExperimentSpec s;
    s.u = {1.2};
    EXPECT_THROW(run_experiment(s), DomainError);
    s = ExperimentSpec{};
    s.estimators.clear();
    EXPECT_THROW(run_experiment(s), DomainError);
}

TEST(Csv, EmptyTableIsHeaderOnly) {
    EXPECT_EQ(csv_of(ResultTable{}), std::string(kCsvHeader) + "\n");
    std::istringstream is(csv_of(ResultTable{}));
    EXPECT_TRUE(parse_csv(is).empty());
}

TEST(Csv, RoundTrip) {
    ExperimentSpec s = small_spec();
    s.sensing = {SensingModel{}, SensingModel(0.5, 0.5)};
    s.estimators.push_back(EstimatorTag::AvgCorrected);
    s.replicates = 50;
    const ResultTable t = run_experiment(s);
    std::istringstream is(csv_of(t));
    EXPECT_EQ(parse_csv(is), t.rows);
}

TEST(Csv, RejectsMalformed) {
    std::istringstream bad_header("u,v\n");
    EXPECT_THROW(parse_csv(bad_header), DomainError);
    std::istringstream short_row(std::string(kCsvHeader) + "\n0.3,0.9\n");
    EXPECT_THROW(parse_csv(short_row), DomainError);
}

TEST(Plotdata, BlocksPerCurve) {
    const ResultTable t = run_experiment(small_spec());
    std::ostringstream os;
    emit_plotdata(t, ExperimentKind::RmsVsN, os);
    const std::string out = os.str();
    EXPECT_NE(out.find("# "), std::string::npos);
    EXPECT_NE(out.find("\n\n"), std::string::npos);
}

TEST(Presets, KnownNamesAndOverrides) {
    const auto names = preset_names();
    EXPECT_EQ(names.size(), 7u);
    const ExperimentSpec s = make_preset("fig_rms_vs_N", 123, 9);
    EXPECT_EQ(s.replicates, 123u);
    EXPECT_EQ(s.seed, 9u);
    EXPECT_EQ(s.n.front(), 40u);
    EXPECT_EQ(s.n.back(), 150u);
    EXPECT_EQ(make_preset("fig_rms_vs_N").replicates, 100'000u);
    EXPECT_EQ(make_preset("algo2_joint").replicates, 10'000u);
    EXPECT_THROW(make_preset("nope"), DomainError);
}

TEST(Presets, PeakErrorAboveHalf) {
    // Closed-form averaging curve of the rms-vs-u preset: the worst u exceeds
    // 1/2 and moves toward 1/2 as lambda_f grows.
    const ExperimentSpec s = make_preset("fig_rms_vs_u");
    double prev_peak = 1.0;
    for (double lf : s.lambda_f) {
        double peak_u = 0.0, peak = -1.0;
        for (int i = 1; i < 1000; ++i) {
            const double u = i / 1000.0;
            const double v = mse_avg_uniform(TrafficParams::from_u_lambda_f(u, lf), 100, 100.0).mse;
            if (v > peak) peak = v, peak_u = u;
        }
        EXPECT_GT(peak_u, 0.5);
        EXPECT_LT(peak_u, prev_peak);
        prev_peak = peak_u;
    }
}
