#include "putraffic/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "putraffic/accuracy.hpp"
#include "putraffic/blind.hpp"
#include "putraffic/design.hpp"
#include "putraffic/errors.hpp"
#include "putraffic/estimators.hpp"
#include "putraffic/harness.hpp"
#include "putraffic/traffic_io.hpp"

namespace putraffic {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

// Validation failures detected by the CLI itself.
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Flat `key = value` file; `#` starts a comment. Keys are flag names without
// the leading dashes, underscores and dashes interchangeable.
std::vector<std::pair<std::string, std::string>> read_config(const std::string &path) {
    std::ifstream is(path);
    if (!is) throw UsageError("cannot open config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        for (char &c : key)
            if (c == '_') c = '-';
        if (key.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

// Fills options that were not given on the command line.
void apply_config(CLI::App &sub, const std::string &path) {
    for (const auto &[key, value] : read_config(path)) {
        if (key == "config") continue;
        CLI::Option *opt = sub.get_option_no_throw("--" + key);
        if (!opt) throw UsageError("config key '" + key + "' is not an option of '" + sub.get_name() + "'");
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

std::ostream *open_output(const std::string &path, std::ofstream &file) {
    if (path.empty() || path == "-") return &std::cout;
    file.open(path);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
    return &file;
}

SampleStream load_stream(const std::string &path, FileHeader *header) {
    if (path == "-") return read_stream(std::cin, header);
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    return read_stream(is, header);
}

// ---------------------------------------------------------------------------
// Shared option groups

struct TrafficArgs {
    std::optional<double> u, lambda_f, lambda_n;

    void add(CLI::App &app) {
        app.add_option("--u", u, "Mean duty cycle");
        app.add_option("--lambda-f", lambda_f, "Departure rate (1/s)");
        app.add_option("--lambda-n", lambda_n, "Arrival rate (1/s)");
    }
    // Any two of u, lambda_f, lambda_n determine the process.
    TrafficParams params() const {
        if (u && lambda_f) return TrafficParams::from_u_lambda_f(*u, *lambda_f);
        if (u && lambda_n) return TrafficParams::from_u_lambda_n(*u, *lambda_n);
        if (lambda_f && lambda_n) return TrafficParams::from_rates(*lambda_f, *lambda_n);
        throw UsageError("two of --u, --lambda-f, --lambda-n are required");
    }
};

struct SensingArgs {
    double pf = 0.0, pm = 0.0;

    void add(CLI::App &app) {
        app.add_option("--pf", pf, "False-alarm probability");
        app.add_option("--pm", pm, "Mis-detection probability");
    }
    SensingModel model() const { return SensingModel(pf, pm); }
};

struct Common {
    std::string config;
    std::uint64_t seed = 1;

    void add(CLI::App &app) {
        app.add_option("--config", config, "key = value file; command-line flags win");
        app.add_option("--seed", seed, "Random seed");
    }
};

template <class T>
T need(const std::optional<T> &v, const char *flag) {
    if (!v) throw UsageError(std::string(flag) + " is required");
    return *v;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateCmd {
    Common common;
    TrafficArgs traffic;
    SensingArgs sensing;
    std::optional<double> window;
    std::optional<std::size_t> samples;
    double offset = 0.0;
    std::string out;

    void add(CLI::App &app) {
        common.add(app);
        traffic.add(app);
        sensing.add(app);
        app.add_option("-T,--T", window, "Horizon, or sampling window when --N is given (s)");
        app.add_option("-N,--N", samples, "Write a uniformly sampled stream of N samples instead of a trajectory");
        app.add_option("--offset", offset, "Time of the first sample (s)");
        app.add_option("-o,--out", out, "Output file (default stdout)");
    }

    int run() {
        const TrafficParams p = traffic.params();
        const double t = need(window, "--T");
        if (!(t > 0.0)) throw UsageError("--T must be > 0");
        if (offset < 0.0) throw UsageError("--offset must be >= 0");
        std::ofstream file;
        std::ostream &os = *open_output(out, file);
        FileHeader header = params_header(p);
        header["seed"] = std::to_string(common.seed);
        Rng rng(common.seed);
        if (!samples) {
            if (!sensing.model().perfect()) throw UsageError("--pf/--pm apply to sampled streams only");
            header["horizon"] = num(t);
            write_trajectory(os, generate_trajectory(p, t, rng), header);
            return kExitOk;
        }
        if (*samples < 1) throw UsageError("--N must be >= 1");
        const SensingModel s = sensing.model();
        auto sched = std::make_shared<const SampleSchedule>(SampleSchedule::uniform(*samples, t, offset));
        SampleStream stream = sample_trajectory(generate_trajectory(p, offset + t, rng), sched);
        if (!s.perfect()) {
            stream = corrupt(stream, s, rng);
            header["pf"] = num(s.p_f);
            header["pm"] = num(s.p_m);
        }
        write_stream(os, stream, header);
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// estimate

struct EstimateCmd {
    Common common;
    TrafficArgs traffic;
    SensingArgs sensing;
    std::string in;
    std::string estimator = "avg";

    void add(CLI::App &app) {
        common.add(app);
        traffic.add(app);
        sensing.add(app);
        app.add_option("-i,--in", in, "Stream file ('-' for stdin)");
        app.add_option("-e,--estimator", estimator,
                       "avg | avg_corrected | weighted | weighted_corrected | ml_u | ml_u_noisy | "
                       "ml_lambda_f | ml_lambda_n | ml_lambda_f_noisy | ml_lambda_n_noisy");
    }

    int run() {
        if (in.empty()) throw UsageError("--in is required");
        const SampleStream stream = load_stream(in, nullptr);
        const SensingModel s = sensing.model();
        auto t_c = [&] {
            if (!stream.schedule->is_uniform() || stream.size() < 2)
                throw UsageError(estimator + " needs a uniformly sampled stream with N >= 2");
            return stream.schedule->uniform_interval();
        };
        Estimate e;
        if (estimator == "avg") {
            e = avg_estimate(stream);
        } else if (estimator == "avg_corrected") {
            e = avg_estimate_corrected(stream, s);
        } else if (estimator == "weighted" || estimator == "weighted_corrected") {
            const WeightVector w = optimal_weights(traffic.params(), stream.size(), t_c());
            e = weighted_estimate(stream, w, estimator == "weighted" ? std::nullopt : std::optional(s));
        } else if (estimator == "ml_u") {
            e = ml_estimate_u(stream, need(traffic.lambda_f, "--lambda-f"), t_c());
        } else if (estimator == "ml_u_noisy") {
            e = ml_estimate_u_noisy(stream, need(traffic.lambda_f, "--lambda-f"), t_c(), s);
        } else if (estimator == "ml_lambda_f" || estimator == "ml_lambda_n") {
            const TransitionCounts c = count_transitions(stream);
            const double u = need(traffic.u, "--u");
            e = estimator == "ml_lambda_f" ? ml_estimate_lambda_f(c, u, t_c()) : ml_estimate_lambda_n(c, u, t_c());
        } else if (estimator == "ml_lambda_f_noisy" || estimator == "ml_lambda_n_noisy") {
            RateSearch search;
            search.parameter = estimator == "ml_lambda_f_noisy" ? LikelihoodParameter::DepartureRate
                                                                : LikelihoodParameter::ArrivalRate;
            e = ml_estimate_rates_noisy(stream, need(traffic.u, "--u"), t_c(), s, search);
        } else {
            throw UsageError("unknown estimator '" + estimator + "'");
        }
        std::cout << "estimator = " << to_string(e.estimator_id) << '\n'
                  << "value = " << num(e.value) << '\n'
                  << "raw_value = " << num(e.raw_value) << '\n'
                  << "converged = " << (e.converged ? "true" : "false") << '\n';
        if (e.log_likelihood) std::cout << "log_likelihood = " << num(*e.log_likelihood) << '\n';
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// bound

struct BoundCmd {
    Common common;
    TrafficArgs traffic;
    SensingArgs sensing;
    std::string formula;
    std::optional<std::size_t> samples;
    std::optional<double> window;
    std::optional<double> beta;
    bool mse = false;

    static constexpr const char *kFormulas =
        "mse_avg_uniform | mse_avg_uniform_asymptote | mse_avg_corrected | mse_weighted_optimal | "
        "mse_weighted_asymptote | optimal_schedule_mse | crb_u | crb_lambda_f | crb_lambda_n | "
        "crb_u_asymptote | crb_lambda_f_asymptote | crb_lambda_n_asymptote | required_samples";

    void add(CLI::App &app) {
        common.add(app);
        traffic.add(app);
        sensing.add(app);
        app.add_option("-f,--formula", formula, kFormulas);
        app.add_option("-N,--N", samples, "Number of samples");
        app.add_option("-T,--T", window, "Observation window (s)");
        app.add_option("--beta", beta, "required_samples: target MSE as a multiple of the asymptote");
        app.add_flag("--mse", mse, "Print the MSE instead of the RMS");
    }

    int run() {
        if (formula.empty()) throw UsageError("--formula is required");
        const TrafficParams p = traffic.params();
        const double t = need(window, "--T");
        const std::optional<SensingModel> s =
            sensing.model().perfect() ? std::nullopt : std::optional(sensing.model());
        auto n = [&] { return need(samples, "--N"); };
        auto t_c = [&] {
            if (n() < 2) throw UsageError("--N must be >= 2");
            return t / static_cast<double>(n() - 1);
        };
        if (formula == "required_samples") {
            std::cout << required_samples(p, t, need(beta, "--beta")) << '\n';
            return kExitOk;
        }
        ErrorReport r;
        if (formula == "mse_avg_uniform") r = mse_avg_uniform(p, n(), t);
        else if (formula == "mse_avg_uniform_asymptote") r = mse_avg_uniform_asymptote(p, t);
        else if (formula == "mse_avg_corrected") r = mse_avg_corrected(p, SampleSchedule::uniform(n(), t), sensing.model());
        else if (formula == "mse_weighted_optimal") r = mse_weighted_optimal(p, n(), t_c(), s);
        else if (formula == "mse_weighted_asymptote") r = mse_weighted_asymptote(p, t, s);
        else if (formula == "optimal_schedule_mse") r = optimal_schedule_mse(p, n(), t);
        else if (formula == "crb_u") r = crb_u(p, n(), t_c());
        else if (formula == "crb_lambda_f") r = crb_lambda_f(p, n(), t_c());
        else if (formula == "crb_lambda_n") r = crb_lambda_n(p, n(), t_c());
        else if (formula == "crb_u_asymptote") r = crb_u_asymptote(p, t);
        else if (formula == "crb_lambda_f_asymptote") r = crb_lambda_f_asymptote(p, t);
        else if (formula == "crb_lambda_n_asymptote") r = crb_lambda_n_asymptote(p, t);
        else throw UsageError("unknown formula '" + formula + "'; one of: " + kFormulas);
        if (s && formula.rfind("crb_", 0) == 0) throw UsageError(formula + " is defined for perfect sensing only");
        std::cout << num(mse ? r.mse : r.rms) << '\n';
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// design

struct DesignCmd {
    Common common;
    TrafficArgs traffic;
    std::optional<std::size_t> samples;
    std::optional<double> window;
    std::string what = "schedule";

    void add(CLI::App &app) {
        common.add(app);
        traffic.add(app);
        app.add_option("-N,--N", samples, "Number of samples");
        app.add_option("-T,--T", window, "Observation window (s)");
        app.add_option("--what", what, "schedule | weights");
    }

    int run() {
        const TrafficParams p = traffic.params();
        const std::size_t n = need(samples, "--N");
        const double t = need(window, "--T");
        if (what == "schedule") {
            const ScheduleSolution sol = optimal_schedule(p, n, t);
            const KktResidual kkt = kkt_residual(p, sol.schedule);
            std::cout << "# k = " << sol.k_regime << '\n'
                      << "# t_a = " << num(sol.t_a) << '\n'
                      << "# t_b = " << num(sol.t_b) << '\n'
                      << "# mse = " << num(sol.mse_at_optimum) << '\n'
                      << "# rms = " << num(std::sqrt(sol.mse_at_optimum)) << '\n'
                      << "# kkt_stationarity = " << num(kkt.stationarity) << '\n'
                      << "index,interval\n";
            const auto iv = sol.schedule.inter_sample_times();
            for (std::size_t i = 0; i < iv.size(); ++i) std::cout << i + 1 << ',' << num(iv[i]) << '\n';
        } else if (what == "weights") {
            if (n < 2) throw UsageError("--N must be >= 2");
            const double t_c = t / static_cast<double>(n - 1);
            const WeightVector w = optimal_weights(p, n, t_c);
            std::cout << "# mse = " << num(mse_weighted(p, t_c, w).mse) << '\n' << "index,weight\n";
            for (std::size_t i = 0; i < w.size(); ++i) std::cout << i + 1 << ',' << num(w[i]) << '\n';
        } else {
            throw UsageError("--what must be schedule or weights");
        }
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// blind

struct BlindCmd {
    Common common;
    TrafficArgs traffic;
    SensingArgs sensing;
    int algorithm = 1;
    std::string in;
    std::string trace;
    std::optional<double> lambda_f_known;
    AlgoIConfig a1;
    AlgoIIConfig a2;
    std::optional<double> t0;
    std::optional<std::size_t> n_th;
    std::optional<double> t_th, v_th;

    void add(CLI::App &app) {
        common.add(app);
        traffic.add(app);
        sensing.add(app);
        app.add_option("-a,--algorithm", algorithm, "1 (duty cycle, lambda_f known) or 2 (joint)");
        app.add_option("-i,--in", in, "Replay a stream file instead of simulating");
        app.add_option("--trace", trace, "Write the per-sample trace CSV here");
        app.add_option("--lambda-f-known", lambda_f_known, "Algorithm 1: known departure rate (default --lambda-f)");
        app.add_option("--t0", t0, "Initial inter-sample time (s)");
        app.add_option("--n0", a1.n0, "Algorithm 1: initial number of samples");
        app.add_option("--alpha", a1.alpha, "Algorithm 1: interval factor");
        app.add_option("--n-th", n_th, "Algorithm 1: stop after this many samples");
        app.add_option("--t-th", t_th, "Algorithm 1: stop once the window reaches this (s)");
        app.add_option("--v-th", v_th, "Algorithm 1: stop once the worst-case MSE is below this");
        app.add_option("--v-u-th", a2.v_u_th, "Algorithm 2: target MSE in u");
        app.add_option("--v-lambda-th", a2.v_lambda_th, "Algorithm 2: target MSE in the rate");
        app.add_option("--lambda-min", a2.lambda_min, "Algorithm 2: smallest rate considered");
        app.add_option("--lambda-max", a2.lambda_max, "Algorithm 2: largest rate considered");
    }

    int run() {
        std::unique_ptr<SampleSource> src;
        if (!in.empty()) {
            src = std::make_unique<ReplaySource>(load_stream(in, nullptr));
        } else {
            const SensingModel s = sensing.model();
            src = std::make_unique<SimulatedSource>(traffic.params(), common.seed,
                                                    s.perfect() ? std::nullopt : std::optional(s));
        }
        EstimationTrace tr;
        if (algorithm == 1) {
            if (t0) a1.t0 = *t0;
            a1.max_samples = n_th;
            a1.max_window = t_th;
            a1.target_mse = v_th;
            a1.validate();
            const double lf = lambda_f_known ? *lambda_f_known : need(traffic.lambda_f, "--lambda-f-known");
            tr = run_algorithm_I(*src, a1, lf);
        } else if (algorithm == 2) {
            if (t0) a2.t0 = *t0;
            a2.validate();
            tr = run_algorithm_II(*src, a2);
        } else {
            throw UsageError("--algorithm must be 1 or 2");
        }
        std::cout << "terminated_by = " << to_string(tr.terminated_by) << '\n'
                  << "total_samples = " << tr.total_samples << '\n'
                  << "total_window = " << num(tr.total_window) << '\n'
                  << "elapsed = " << num(tr.elapsed) << '\n'
                  << "u_hat = " << num(tr.u_hat) << '\n';
        if (tr.lf_hat) std::cout << "lambda_f_hat = " << num(*tr.lf_hat) << '\n';
        if (tr.ln_hat) std::cout << "lambda_n_hat = " << num(*tr.ln_hat) << '\n';
        if (tr.worst_mse_u) std::cout << "worst_mse_u = " << num(*tr.worst_mse_u) << '\n';
        if (tr.worst_mse_rate) std::cout << "worst_mse_rate = " << num(*tr.worst_mse_rate) << '\n';
        if (algorithm == 2) std::cout << "rate_branch = " << (tr.rate_branch_arrival ? "lambda_n" : "lambda_f") << '\n';
        if (!trace.empty()) {
            std::ofstream os(trace);
            if (!os) throw std::runtime_error("cannot open '" + trace + "' for writing");
            write_trace_csv(os, tr);
        }
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// figure

struct FigureCmd {
    Common common;
    std::string preset;
    std::optional<std::size_t> replicates;
    std::string out;
    std::string plotdata;
    bool list = false;

    void add(CLI::App &app) {
        common.add(app);
        app.add_option("preset", preset, "Preset name");
        app.add_option("--replicates", replicates, "Monte Carlo replicates per grid point");
        app.add_option("-o,--out", out, "CSV output (default stdout)");
        app.add_option("--plotdata", plotdata, "Also write per-curve plot data here");
        app.add_flag("--list", list, "List the presets");
    }

    int run(const CLI::App &app) {
        if (list) {
            for (const auto &name : preset_names()) std::cout << name << '\n';
            return kExitOk;
        }
        if (preset.empty()) throw UsageError("a preset name is required (see --list)");
        const bool seeded = app.get_option("--seed")->count() > 0;
        const ExperimentSpec spec =
            make_preset(preset, replicates, seeded ? std::optional(common.seed) : std::nullopt);
        const ResultTable table = run_experiment(spec);
        std::ofstream file;
        emit_csv(table, *open_output(out, file));
        if (file.is_open()) {
            file.flush();
            if (!file) throw std::runtime_error("write to '" + out + "' failed");
        }
        if (!plotdata.empty()) emit_plotdata(table, spec.kind, std::filesystem::path(plotdata));
        for (const auto &msg : table.errors) std::cerr << "row error: " << msg << '\n';
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------
// verify

struct Check {
    std::string name;
    double worst = 0.0;
    double tol = 0.0;
    std::size_t cases = 0;

    void add(double err) {
        worst = std::max(worst, std::isfinite(err) ? err : INFINITY);
        ++cases;
    }
    bool ok() const { return cases > 0 && worst <= tol; }
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct VerifyCmd {
    Common common;
    std::string suite = "all";
    std::size_t max_n = 12;
    std::size_t configs = 200;

    void add(CLI::App &app) {
        common.add(app);
        app.add_option("--suite", suite, "oracle | fisher | design | all");
        app.add_option("--max-n", max_n, "Largest N enumerated");
        app.add_option("--configs", configs, "Random configurations per check");
    }

    int run() {
        if (suite != "oracle" && suite != "fisher" && suite != "design" && suite != "all")
            throw UsageError("--suite must be oracle, fisher, design or all");
        if (max_n < 2 || max_n > 16) throw UsageError("--max-n must lie in [2, 16]");
        if (configs < 1) throw UsageError("--configs must be >= 1");
        Rng rng(common.seed);
        auto unif = [&](double a, double b) { return a + (b - a) * uniform01(rng); };
        auto pick_n = [&](std::size_t hi) {
            return static_cast<std::size_t>(2 + rng() % (hi - 1));
        };
        auto random_params = [&] { return TrafficParams::from_u_lambda_f(unif(0.05, 0.95), unif(0.1, 2.0)); };
        std::vector<Check> checks;

        if (suite == "oracle" || suite == "all") {
            Check avg{"mse_avg vs enumeration", 0, 1e-10}, uni{"mse_avg_uniform vs enumeration", 0, 1e-10},
                cor{"mse_avg_corrected vs enumeration", 0, 1e-10}, wt{"mse_weighted vs enumeration", 0, 1e-10},
                wts{"mse_weighted (sensing) vs enumeration", 0, 1e-10};
            auto mean = [](std::span<const std::uint8_t> z) {
                double s = 0.0;
                for (auto b : z) s += b;
                return s / static_cast<double>(z.size());
            };
            for (std::size_t c = 0; c < configs; ++c) {
                const TrafficParams p = random_params();
                const std::size_t n = pick_n(max_n);
                std::vector<double> iv(n - 1);
                for (double &x : iv) x = unif(0.01, 3.0);
                const SampleSchedule sched(iv);
                avg.add(rel_err(mse_avg(p, sched).mse, oracle_mse_enumeration(p, sched, mean).mse));
                const double t = unif(1.0, 30.0);
                const SampleSchedule us = SampleSchedule::uniform(n, t);
                uni.add(rel_err(mse_avg_uniform(p, n, t).mse, oracle_mse_enumeration(p, us, mean).mse));
                const SensingModel s(unif(0.0, 0.2), unif(0.0, 0.2));
                auto corrected = [&](std::span<const std::uint8_t> z) { return (mean(z) - s.p_f) / s.contrast(); };
                cor.add(rel_err(mse_avg_corrected(p, sched, s).mse, oracle_mse_enumeration(p, sched, corrected, s).mse));
                std::vector<double> w(n);
                double sum = 0.0;
                for (double &x : w) sum += (x = unif(0.1, 1.0));
                for (double &x : w) x /= sum;
                const WeightVector wv(w);
                auto weighted = [&](std::span<const std::uint8_t> z) {
                    double a = 0.0;
                    for (std::size_t i = 0; i < z.size(); ++i) a += wv[i] * z[i];
                    return a;
                };
                auto weighted_c = [&](std::span<const std::uint8_t> z) { return (weighted(z) - s.p_f) / s.contrast(); };
                const double t_c = us.uniform_interval();
                wt.add(rel_err(mse_weighted(p, t_c, wv).mse, oracle_mse_enumeration(p, us, weighted).mse));
                wts.add(rel_err(mse_weighted(p, t_c, wv, s).mse, oracle_mse_enumeration(p, us, weighted_c, s).mse));
            }
            for (Check *k : {&avg, &uni, &cor, &wt, &wts}) checks.push_back(*k);
        }

        if (suite == "fisher" || suite == "all") {
            Check fu{"fisher_u vs enumeration", 0, 1e-6}, ff{"fisher_lambda_f vs enumeration", 0, 1e-6},
                fn{"fisher_lambda_n vs enumeration", 0, 1e-6};
            const std::size_t hi = std::min<std::size_t>(max_n, 10);
            const std::size_t count = std::max<std::size_t>(1, configs / 2);
            for (std::size_t c = 0; c < count; ++c) {
                const TrafficParams p = random_params();
                const std::size_t n = pick_n(hi);
                const double t_c = unif(0.05, 3.0);
                fu.add(rel_err(fisher_u(p, n, t_c).value,
                               oracle_fisher_enumeration(p, n, t_c, FisherParameter::DutyCycle).value));
                ff.add(rel_err(fisher_lambda_f(p, n, t_c).value,
                               oracle_fisher_enumeration(p, n, t_c, FisherParameter::DepartureRate).value));
                fn.add(rel_err(fisher_lambda_n(p, n, t_c).value,
                               oracle_fisher_enumeration(p, n, t_c, FisherParameter::ArrivalRate).value));
            }
            for (Check *k : {&fu, &ff, &fn}) checks.push_back(*k);
        }

        if (suite == "design" || suite == "all") {
            Check kkt{"optimal_schedule KKT residual / |mu|", 0, 1e-8}, cf{"optimal_schedule_mse vs mse_avg", 0, 1e-9},
                psd{"Hessian min eigenvalue / norm (negated)", 0, 1e-9};
            for (std::size_t c = 0; c < configs; ++c) {
                const TrafficParams p = random_params();
                const std::size_t n = pick_n(std::max<std::size_t>(max_n, 3));
                const double t = unif(0.5, 50.0);
                const ScheduleSolution sol = optimal_schedule(p, n, t);
                const KktResidual r = kkt_residual(p, sol.schedule);
                const double scale = std::max(std::abs(r.mu), 1e-300);
                kkt.add(std::max({r.stationarity / scale, std::max(0.0, -r.min_multiplier) / scale}));
                cf.add(rel_err(optimal_schedule_mse(p, n, t).mse, sol.mse_at_optimum));
                std::vector<double> iv(n - 1);
                for (double &x : iv) x = unif(0.0, 3.0);
                const HessianMatrix h = mse_hessian(p, SampleSchedule(iv));
                const double norm = std::max(h.entries.norm(), 1e-300);
                psd.add(std::max(0.0, -h.min_eigenvalue() / norm));
            }
            for (Check *k : {&kkt, &cf, &psd}) checks.push_back(*k);
        }

        bool all_ok = true;
        for (const Check &k : checks) {
            all_ok = all_ok && k.ok();
            std::printf("%s  %-44s worst=%.3e tol=%.0e cases=%zu\n", k.ok() ? "PASS" : "FAIL", k.name.c_str(),
                        k.worst, k.tol, k.cases);
        }
        return all_ok ? kExitOk : kExitRuntime;
    }
};

} // namespace

int cli_main(int argc, char **argv) {
    CLI::App app{"Estimation of on/off traffic parameters from samples"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    SimulateCmd simulate;
    EstimateCmd estimate;
    BoundCmd bound;
    DesignCmd design;
    BlindCmd blind;
    FigureCmd figure;
    VerifyCmd verify;
    CLI::App *s_sim = app.add_subcommand("simulate", "Generate a trajectory or a sampled stream");
    CLI::App *s_est = app.add_subcommand("estimate", "Run an estimator on a stream file");
    CLI::App *s_bnd = app.add_subcommand("bound", "Evaluate a closed-form MSE, bound or asymptote");
    CLI::App *s_des = app.add_subcommand("design", "Optimal sampling schedule or weights");
    CLI::App *s_bli = app.add_subcommand("blind", "Run a blind estimation algorithm");
    CLI::App *s_fig = app.add_subcommand("figure", "Run a named experiment preset and write CSV");
    CLI::App *s_ver = app.add_subcommand("verify", "Check closed forms against exact enumeration");
    simulate.add(*s_sim);
    estimate.add(*s_est);
    bound.add(*s_bnd);
    design.add(*s_des);
    blind.add(*s_bli);
    figure.add(*s_fig);
    verify.add(*s_ver);

    const std::vector<std::pair<CLI::App *, std::string *>> configs = {
        {s_sim, &simulate.common.config}, {s_est, &estimate.common.config}, {s_bnd, &bound.common.config},
        {s_des, &design.common.config},   {s_bli, &blind.common.config},    {s_fig, &figure.common.config},
        {s_ver, &verify.common.config},
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        for (const auto &[sub, path] : configs) {
            if (!sub->parsed() || path->empty()) continue;
            apply_config(*sub, *path);
        }
        if (s_sim->parsed()) return simulate.run();
        if (s_est->parsed()) return estimate.run();
        if (s_bnd->parsed()) return bound.run();
        if (s_des->parsed()) return design.run();
        if (s_bli->parsed()) return blind.run();
        if (s_fig->parsed()) return figure.run(*s_fig);
        if (s_ver->parsed()) return verify.run();
    } catch (const UsageError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const CLI::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DomainError &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitValidation;
}

} // namespace putraffic
