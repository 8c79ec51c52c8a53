#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "putraffic/blind.hpp"
#include "putraffic/traffic.hpp"

namespace putraffic {

enum class ExperimentKind {
    RmsVsN,
    AsymptoteVsT,
    RmsVsU,
    SensingImpact,
    Algo1ConstrainedN,
    Algo1TargetError,
    Algo2Joint,
    Custom,
};

// Estimators the harness can run on simulated data.
//   avg            plain average, uniform schedule
//   avg_opt        plain average, optimal schedule
//   weighted       optimal weights (bias-corrected under sensing errors)
//   avg_corrected  bias-corrected average
//   ml_u           ML duty cycle, lambda_f known (forward recursion when sensed)
//   ml_lambda_f    ML departure rate, u known
//   ml_lambda_n    ML arrival rate, u known
//   algo1, algo2   the blind algorithms
enum class EstimatorTag { Avg, AvgOptimal, Weighted, AvgCorrected, MlU, MlLambdaF, MlLambdaN, Algo1, Algo2 };

std::string_view to_string(ExperimentKind k);
std::string_view to_string(EstimatorTag t);
ExperimentKind parse_experiment_kind(std::string_view s);
EstimatorTag parse_estimator_tag(std::string_view s);

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Custom;

    // Grid for the estimator kinds: the full product is simulated.
    std::vector<double> u{0.3};
    std::vector<double> lambda_f{0.9};
    std::vector<std::size_t> n{100};
    std::vector<double> t_window{50.0};
    std::vector<SensingModel> sensing{SensingModel{}};
    std::vector<EstimatorTag> estimators{EstimatorTag::Avg};

    std::size_t replicates = 1000;
    // Replicates for ML estimators on sensed data (0: same as replicates).
    std::size_t noisy_ml_replicates = 0;
    std::uint64_t seed = 1;
    std::size_t batches = 20;

    // Blind-algorithm grids, used when `estimators` holds algo1 / algo2.
    AlgoIConfig algo1;
    std::vector<double> algo1_t0;          // empty: algo1.t0
    std::vector<double> algo1_alpha;       // empty: algo1.alpha
    std::vector<std::size_t> algo1_n_th;   // empty: algo1 termination as given
    AlgoIIConfig algo2;

    std::map<std::string, std::string> metadata;

    void validate() const;
};

// One grid point x estimator. Optional columns are empty when no closed
// form / bound / oracle applies. For the blind algorithms N and T hold the
// mean sample count and mean window at termination.
struct ResultRow {
    double u = 0.0;
    double lambda_f = 0.0;
    double lambda_n = 0.0;
    double n = 0.0;
    double t_window = 0.0;
    double p_f = 0.0;
    double p_m = 0.0;
    std::string estimator;
    bool error = false; // estimator/config mismatch; numeric columns unset
    double mc_rms = 0.0;
    double mc_se = 0.0;
    std::optional<double> cf_rms;
    std::optional<double> crb_rms;
    std::optional<double> oracle_rms;

    bool operator==(const ResultRow &) const = default;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::map<std::string, std::string> metadata;
    std::vector<std::string> errors; // messages of error rows, in row order
};

// Runs the Monte Carlo experiment. Work is spread over worker threads;
// results do not depend on the thread count.
ResultTable run_experiment(const ExperimentSpec &spec);

inline constexpr std::string_view kCsvHeader =
    "u,lambda_f,lambda_n,N,T,Pf,Pm,estimator,mc_rms,mc_se,cf_rms,crb_rms,oracle_rms";

void emit_csv(const ResultTable &table, std::ostream &os);
void emit_csv(const ResultTable &table, const std::filesystem::path &path);
// Inverse of emit_csv for the row data.
std::vector<ResultRow> parse_csv(std::istream &is);

// Per-curve `x y yerr` blocks separated by blank lines, with `#` comments
// naming each curve and the table metadata.
void emit_plotdata(const ResultTable &table, ExperimentKind kind, std::ostream &os);
void emit_plotdata(const ResultTable &table, ExperimentKind kind, const std::filesystem::path &path);

// Worker threads: PUTRAFFIC_THREADS if set, else hardware concurrency.
unsigned worker_count();

// Named experiment configurations.
std::vector<std::string> preset_names();
// Throws DomainError for an unknown name. `replicates` / `seed` override
// the preset defaults when given.
ExperimentSpec make_preset(std::string_view name, std::optional<std::size_t> replicates = std::nullopt,
                           std::optional<std::uint64_t> seed = std::nullopt);

} // namespace putraffic
