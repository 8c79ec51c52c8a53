#include "putraffic/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "putraffic/accuracy.hpp"
#include "putraffic/design.hpp"
#include "putraffic/errors.hpp"
#include "putraffic/estimators.hpp"

namespace putraffic {

// ---------------------------------------------------------------------------
// Names

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::RmsVsN, "rms_vs_N"},
    {ExperimentKind::AsymptoteVsT, "asymptote_vs_T"},
    {ExperimentKind::RmsVsU, "rms_vs_u"},
    {ExperimentKind::SensingImpact, "sensing_impact"},
    {ExperimentKind::Algo1ConstrainedN, "algo1_constrained_N"},
    {ExperimentKind::Algo1TargetError, "algo1_target_error"},
    {ExperimentKind::Algo2Joint, "algo2_joint"},
    {ExperimentKind::Custom, "custom"},
};

constexpr std::pair<EstimatorTag, std::string_view> kTagNames[] = {
    {EstimatorTag::Avg, "avg"},
    {EstimatorTag::AvgOptimal, "avg_opt"},
    {EstimatorTag::Weighted, "weighted"},
    {EstimatorTag::AvgCorrected, "avg_corrected"},
    {EstimatorTag::MlU, "ml_u"},
    {EstimatorTag::MlLambdaF, "ml_lambda_f"},
    {EstimatorTag::MlLambdaN, "ml_lambda_n"},
    {EstimatorTag::Algo1, "algo1"},
    {EstimatorTag::Algo2, "algo2"},
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

} // namespace

std::string_view to_string(ExperimentKind k) {
    for (const auto &[kind, name] : kKindNames)
        if (kind == k) return name;
    return "unknown";
}

std::string_view to_string(EstimatorTag t) {
    for (const auto &[tag, name] : kTagNames)
        if (tag == t) return name;
    return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view s) {
    for (const auto &[kind, name] : kKindNames)
        if (name == s) return kind;
    throw DomainError("unknown experiment kind '" + std::string(s) + "'");
}

EstimatorTag parse_estimator_tag(std::string_view s) {
    for (const auto &[tag, name] : kTagNames)
        if (name == s) return tag;
    throw DomainError("unknown estimator '" + std::string(s) + "'");
}

void ExperimentSpec::validate() const {
    if (estimators.empty()) throw DomainError("experiment needs at least one estimator");
    if (u.empty() || lambda_f.empty()) throw DomainError("parameter grids must be non-empty");
    if (replicates < 1) throw DomainError("replicates must be >= 1");
    if (batches < 1) throw DomainError("batches must be >= 1");
    for (double x : u)
        if (!(x > 0.0 && x < 1.0)) throw DomainError("grid u values must lie in (0, 1)");
    for (double x : lambda_f)
        if (!(x > 0.0)) throw DomainError("grid lambda_f values must be > 0");
    const bool regular = std::any_of(estimators.begin(), estimators.end(), [](EstimatorTag t) {
        return t != EstimatorTag::Algo1 && t != EstimatorTag::Algo2;
    });
    if (regular) {
        if (n.empty() || t_window.empty() || sensing.empty()) throw DomainError("parameter grids must be non-empty");
        for (auto x : n)
            if (x < 2) throw DomainError("grid N values must be >= 2");
        for (double x : t_window)
            if (!(x > 0.0)) throw DomainError("grid T values must be > 0");
    }
}

unsigned worker_count() {
    if (const char *env = std::getenv("PUTRAFFIC_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// Monte Carlo engine

namespace {

template <class F>
void parallel_for(std::size_t jobs, F &&f) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), jobs);
    if (workers <= 1) {
        for (std::size_t i = 0; i < jobs; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!err) err = std::current_exception();
                    next.store(jobs);
                }
            }
        });
    }
    for (auto &t : threads) t.join();
    if (err) std::rethrow_exception(err);
}

struct Acc {
    double sum_sq = 0.0;
    std::size_t count = 0;
    std::size_t failed = 0;
    double sum_n = 0.0;
    double sum_t = 0.0;
};

struct Summary {
    double rms = 0.0;
    double se = 0.0;
    std::size_t count = 0;
    std::size_t failed = 0;
    double mean_n = 0.0;
    double mean_t = 0.0;
};

// RMS with a batch-means standard error; se(rms) = se(mse) / (2 rms).
Summary summarize(const std::vector<Acc> &batches) {
    Summary s;
    double sum_sq = 0.0;
    std::vector<double> means;
    for (const Acc &a : batches) {
        sum_sq += a.sum_sq;
        s.count += a.count;
        s.failed += a.failed;
        s.mean_n += a.sum_n;
        s.mean_t += a.sum_t;
        if (a.count) means.push_back(a.sum_sq / static_cast<double>(a.count));
    }
    if (s.count == 0) return s;
    const double c = static_cast<double>(s.count);
    const double mse = sum_sq / c;
    s.rms = std::sqrt(mse);
    s.mean_n /= c;
    s.mean_t /= c;
    if (means.size() >= 2 && s.rms > 0.0) {
        double m = 0.0;
        for (double x : means) m += x;
        m /= static_cast<double>(means.size());
        double var = 0.0;
        for (double x : means) var += (x - m) * (x - m);
        var /= static_cast<double>(means.size() - 1);
        const double se_mse = std::sqrt(var / static_cast<double>(means.size()));
        s.se = se_mse / (2.0 * s.rms);
    }
    return s;
}

std::pair<std::size_t, std::size_t> batch_range(std::size_t b, std::size_t nbatch, std::size_t reps) {
    return {b * reps / nbatch, (b + 1) * reps / nbatch};
}

// Seed domains keep the three grids independent.
constexpr std::uint64_t kDomainEstimators = 0;
constexpr std::uint64_t kDomainAlgo1 = 1;
constexpr std::uint64_t kDomainAlgo2 = 2;

bool is_algo(EstimatorTag t) { return t == EstimatorTag::Algo1 || t == EstimatorTag::Algo2; }

// Per grid point x estimator: what to run and the analytic columns.
struct Prepared {
    EstimatorTag tag;
    bool error = false;
    std::string message;
    std::optional<double> cf, crb, oracle;
    bool noisy_ml = false;
};

struct Point {
    TrafficParams p;
    std::size_t n;
    double t;
    SensingModel s;
    std::shared_ptr<const SampleSchedule> uniform;
    std::shared_ptr<const SampleSchedule> optimal; // only when avg_opt runs
    std::optional<WeightVector> weights;
    std::vector<Prepared> est;
};

std::optional<SensingModel> sensing_opt(const SensingModel &s) {
    if (s.perfect()) return std::nullopt;
    return s;
}

// Raw estimate of the target quantity; nullopt when the estimator has no solution.
std::optional<double> evaluate(EstimatorTag tag, const Point &pt, const SampleStream &uni, const SampleStream *opt) {
    const double t_c = pt.t / static_cast<double>(pt.n - 1);
    switch (tag) {
    case EstimatorTag::Avg: return avg_estimate(uni).raw_value;
    case EstimatorTag::AvgOptimal: return avg_estimate(*opt).raw_value;
    case EstimatorTag::Weighted: return weighted_estimate(uni, *pt.weights, sensing_opt(pt.s)).raw_value;
    case EstimatorTag::AvgCorrected: return avg_estimate_corrected(uni, pt.s).raw_value;
    case EstimatorTag::MlU:
        return ml_estimate_u_noisy(uni, pt.p.lambda_f(), t_c, pt.s).raw_value;
    case EstimatorTag::MlLambdaF:
    case EstimatorTag::MlLambdaN: {
        RateSearch search;
        search.parameter =
            tag == EstimatorTag::MlLambdaF ? LikelihoodParameter::DepartureRate : LikelihoodParameter::ArrivalRate;
        try {
            return ml_estimate_rates_noisy(uni, pt.p.u(), t_c, pt.s, search).raw_value;
        } catch (const NoSolutionError &) {
            return std::nullopt;
        }
    }
    default: break;
    }
    return std::nullopt;
}

double truth(EstimatorTag tag, const TrafficParams &p) {
    if (tag == EstimatorTag::MlLambdaF) return p.lambda_f();
    if (tag == EstimatorTag::MlLambdaN) return p.lambda_n();
    return p.u();
}

void prepare(Point &pt, const std::vector<EstimatorTag> &tags) {
    const std::optional<SensingModel> so = sensing_opt(pt.s);
    const bool perfect = pt.s.perfect();
    const double t_c = pt.t / static_cast<double>(pt.n - 1);
    const bool small = pt.n <= 12;
    for (EstimatorTag tag : tags) {
        if (is_algo(tag)) continue;
        Prepared pr;
        pr.tag = tag;
        try {
            switch (tag) {
            case EstimatorTag::Avg:
                if (perfect) pr.cf = mse_avg_uniform(pt.p, pt.n, pt.t).rms;
                if (small) {
                    auto f = [](std::span<const std::uint8_t> z) {
                        double s = 0.0;
                        for (auto b : z) s += b;
                        return s / static_cast<double>(z.size());
                    };
                    pr.oracle = oracle_mse_enumeration(pt.p, *pt.uniform, f, so).rms;
                }
                break;
            case EstimatorTag::AvgOptimal: {
                const ScheduleSolution sol = optimal_schedule(pt.p, pt.n, pt.t);
                pt.optimal = std::make_shared<const SampleSchedule>(sol.schedule);
                if (perfect) pr.cf = optimal_schedule_mse(pt.p, pt.n, pt.t).rms;
                if (small) {
                    auto f = [](std::span<const std::uint8_t> z) {
                        double s = 0.0;
                        for (auto b : z) s += b;
                        return s / static_cast<double>(z.size());
                    };
                    pr.oracle = oracle_mse_enumeration(pt.p, *pt.optimal, f, so).rms;
                }
                break;
            }
            case EstimatorTag::Weighted: {
                if (so) so->require_invertible();
                pt.weights = optimal_weights(pt.p, pt.n, t_c);
                pr.cf = mse_weighted_optimal(pt.p, pt.n, t_c, so).rms;
                if (small) {
                    const WeightVector w = *pt.weights;
                    const SensingModel s = pt.s;
                    auto f = [w, s](std::span<const std::uint8_t> z) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < z.size(); ++i) acc += w[i] * z[i];
                        return (acc - s.p_f) / s.contrast();
                    };
                    pr.oracle = oracle_mse_enumeration(pt.p, *pt.uniform, f, so).rms;
                }
                break;
            }
            case EstimatorTag::AvgCorrected: {
                pr.cf = mse_avg_corrected(pt.p, *pt.uniform, pt.s).rms;
                if (small) {
                    const SensingModel s = pt.s;
                    auto f = [s](std::span<const std::uint8_t> z) {
                        double m = 0.0;
                        for (auto b : z) m += b;
                        return (m / static_cast<double>(z.size()) - s.p_f) / s.contrast();
                    };
                    pr.oracle = oracle_mse_enumeration(pt.p, *pt.uniform, f, so).rms;
                }
                break;
            }
            case EstimatorTag::MlU:
                pr.noisy_ml = !perfect;
                if (perfect) pr.crb = crb_u(pt.p, pt.n, t_c).rms;
                if (small) {
                    const auto sched = pt.uniform;
                    const double lf = pt.p.lambda_f();
                    const SensingModel s = pt.s;
                    auto f = [sched, lf, t_c, s](std::span<const std::uint8_t> z) {
                        SampleStream st(std::vector<std::uint8_t>(z.begin(), z.end()), sched, !s.perfect());
                        return ml_estimate_u_noisy(st, lf, t_c, s).raw_value;
                    };
                    pr.oracle = oracle_mse_enumeration(pt.p, *pt.uniform, f, so).rms;
                }
                break;
            case EstimatorTag::MlLambdaF:
                pr.noisy_ml = !perfect;
                if (perfect) pr.crb = crb_lambda_f(pt.p, pt.n, t_c).rms;
                break;
            case EstimatorTag::MlLambdaN:
                pr.noisy_ml = !perfect;
                if (perfect) pr.crb = crb_lambda_n(pt.p, pt.n, t_c).rms;
                break;
            default: break;
            }
        } catch (const DomainError &e) {
            pr.error = true;
            pr.message = e.what();
        }
        pt.est.push_back(std::move(pr));
    }
}

void run_estimator_grid(const ExperimentSpec &spec, ResultTable &table) {
    std::vector<EstimatorTag> tags;
    for (EstimatorTag t : spec.estimators)
        if (!is_algo(t)) tags.push_back(t);
    if (tags.empty()) return;

    std::vector<Point> points;
    for (double u : spec.u)
        for (double lf : spec.lambda_f)
            for (std::size_t n : spec.n)
                for (double t : spec.t_window)
                    for (const SensingModel &s : spec.sensing) {
                        Point pt{TrafficParams::from_u_lambda_f(u, lf), n, t, s, nullptr, nullptr, std::nullopt, {}};
                        pt.uniform = std::make_shared<const SampleSchedule>(SampleSchedule::uniform(n, t));
                        prepare(pt, tags);
                        points.push_back(std::move(pt));
                    }

    const std::size_t nb = std::min(spec.batches, spec.replicates);
    const std::size_t ne = tags.size();
    const std::size_t noisy_reps = spec.noisy_ml_replicates ? std::min(spec.noisy_ml_replicates, spec.replicates)
                                                             : spec.replicates;
    // acc[(point * nb + batch) * ne + estimator]
    std::vector<Acc> acc(points.size() * nb * ne);
    parallel_for(points.size() * nb, [&](std::size_t job) {
        const std::size_t g = job / nb;
        const std::size_t b = job % nb;
        const Point &pt = points[g];
        Acc *out = &acc[job * ne];
        const auto [r0, r1] = batch_range(b, nb, spec.replicates);
        for (std::size_t r = r0; r < r1; ++r) {
            Rng rng(derive_seed(spec.seed, {kDomainEstimators, g, r}));
            const Trajectory traj = generate_trajectory(pt.p, pt.t, rng);
            SampleStream uni = sample_trajectory(traj, pt.uniform);
            if (!pt.s.perfect()) uni = corrupt(uni, pt.s, rng);
            std::optional<SampleStream> opt;
            if (pt.optimal) {
                opt = sample_trajectory(traj, pt.optimal);
                if (!pt.s.perfect()) opt = corrupt(*opt, pt.s, rng);
            }
            for (std::size_t e = 0; e < ne; ++e) {
                const Prepared &pr = pt.est[e];
                if (pr.error) continue;
                if (pr.noisy_ml && r >= noisy_reps) continue;
                const auto v = evaluate(pr.tag, pt, uni, opt ? &*opt : nullptr);
                if (!v) {
                    ++out[e].failed;
                    continue;
                }
                const double err = *v - truth(pr.tag, pt.p);
                out[e].sum_sq += err * err;
                ++out[e].count;
            }
        }
    });

    std::size_t failures = 0;
    for (std::size_t g = 0; g < points.size(); ++g) {
        const Point &pt = points[g];
        for (std::size_t e = 0; e < ne; ++e) {
            const Prepared &pr = pt.est[e];
            ResultRow row;
            row.u = pt.p.u();
            row.lambda_f = pt.p.lambda_f();
            row.lambda_n = pt.p.lambda_n();
            row.n = static_cast<double>(pt.n);
            row.t_window = pt.t;
            row.p_f = pt.s.p_f;
            row.p_m = pt.s.p_m;
            row.estimator = std::string(to_string(pr.tag));
            std::vector<Acc> per_batch;
            for (std::size_t b = 0; b < nb; ++b) per_batch.push_back(acc[(g * nb + b) * ne + e]);
            const Summary s = summarize(per_batch);
            failures += s.failed;
            if (pr.error || s.count == 0) {
                row.error = true;
                table.errors.push_back(row.estimator + ": " + (pr.error ? pr.message : "no replicate produced an estimate"));
            } else {
                row.mc_rms = s.rms;
                row.mc_se = s.se;
                row.cf_rms = pr.cf;
                row.crb_rms = pr.crb;
                row.oracle_rms = pr.oracle;
            }
            table.rows.push_back(std::move(row));
        }
    }
    table.metadata["no_solution_replicates"] = std::to_string(failures);
    if (noisy_reps != spec.replicates) table.metadata["noisy_ml_replicates"] = std::to_string(noisy_reps);
}

void fill_algo_row(ResultRow &row, const TrafficParams &p, const Summary &s, ResultTable &table) {
    row.u = p.u();
    row.lambda_f = p.lambda_f();
    row.lambda_n = p.lambda_n();
    if (s.count == 0) {
        row.error = true;
        table.errors.push_back(row.estimator + ": no run produced an estimate");
        return;
    }
    row.n = s.mean_n;
    row.t_window = s.mean_t;
    row.mc_rms = s.rms;
    row.mc_se = s.se;
}

void run_algo1_grid(const ExperimentSpec &spec, ResultTable &table) {
    struct Cfg {
        TrafficParams p;
        AlgoIConfig cfg;
        std::string label;
    };
    const std::vector<double> t0s = spec.algo1_t0.empty() ? std::vector<double>{spec.algo1.t0} : spec.algo1_t0;
    const std::vector<double> alphas =
        spec.algo1_alpha.empty() ? std::vector<double>{spec.algo1.alpha} : spec.algo1_alpha;
    std::vector<std::optional<std::size_t>> nths;
    if (spec.algo1_n_th.empty()) nths.push_back(std::nullopt);
    for (auto v : spec.algo1_n_th) nths.push_back(v);

    std::vector<Cfg> cfgs;
    for (double u : spec.u)
        for (double lf : spec.lambda_f)
            for (double t0 : t0s)
                for (double alpha : alphas)
                    for (const auto &nth : nths) {
                        AlgoIConfig c = spec.algo1;
                        c.t0 = t0;
                        c.alpha = alpha;
                        if (nth) c.max_samples = *nth;
                        c.record_history = false;
                        c.validate();
                        std::string label = "algo1:t0=" + fmt_short(t0) + ":alpha=" + fmt_short(alpha);
                        if (c.max_samples) label += ":n_th=" + std::to_string(*c.max_samples);
                        if (c.max_window) label += ":t_th=" + fmt_short(*c.max_window);
                        if (c.target_mse) label += ":v_th=" + fmt_short(*c.target_mse);
                        cfgs.push_back({TrafficParams::from_u_lambda_f(u, lf), c, std::move(label)});
                    }

    const std::size_t nb = std::min(spec.batches, spec.replicates);
    std::vector<Acc> acc(cfgs.size() * nb);
    parallel_for(cfgs.size() * nb, [&](std::size_t job) {
        const std::size_t g = job / nb;
        const auto [r0, r1] = batch_range(job % nb, nb, spec.replicates);
        Acc &a = acc[job];
        for (std::size_t r = r0; r < r1; ++r) {
            SimulatedSource src(cfgs[g].p, derive_seed(spec.seed, {kDomainAlgo1, g, r}));
            const EstimationTrace tr = run_algorithm_I(src, cfgs[g].cfg, cfgs[g].p.lambda_f());
            const double err = tr.u_hat - cfgs[g].p.u();
            a.sum_sq += err * err;
            ++a.count;
            a.sum_n += static_cast<double>(tr.total_samples);
            a.sum_t += tr.total_window;
        }
    });
    for (std::size_t g = 0; g < cfgs.size(); ++g) {
        ResultRow row;
        row.estimator = cfgs[g].label;
        fill_algo_row(row, cfgs[g].p, summarize({acc.begin() + g * nb, acc.begin() + (g + 1) * nb}), table);
        table.rows.push_back(std::move(row));
    }
}

void run_algo2_grid(const ExperimentSpec &spec, ResultTable &table) {
    AlgoIIConfig cfg = spec.algo2;
    cfg.record_history = false;
    const AlgoIIBounds bounds(cfg);
    std::vector<TrafficParams> params;
    for (double u : spec.u)
        for (double lf : spec.lambda_f) params.push_back(TrafficParams::from_u_lambda_f(u, lf));

    const std::size_t nb = std::min(spec.batches, spec.replicates);
    // [g][b][0] duty cycle, [g][b][1] rate
    std::vector<Acc> acc(params.size() * nb * 2);
    parallel_for(params.size() * nb, [&](std::size_t job) {
        const std::size_t g = job / nb;
        const auto [r0, r1] = batch_range(job % nb, nb, spec.replicates);
        Acc &au = acc[job * 2];
        Acc &ar = acc[job * 2 + 1];
        const TrafficParams &p = params[g];
        for (std::size_t r = r0; r < r1; ++r) {
            SimulatedSource src(p, derive_seed(spec.seed, {kDomainAlgo2, g, r}));
            const EstimationTrace tr = run_algorithm_II(src, cfg, &bounds);
            const double eu = tr.u_hat - p.u();
            au.sum_sq += eu * eu;
            ++au.count;
            au.sum_n += static_cast<double>(tr.total_samples);
            au.sum_t += tr.total_window;
            const auto &rate = tr.rate_branch_arrival ? tr.ln_hat : tr.lf_hat;
            if (!rate) {
                ++ar.failed;
                continue;
            }
            const double er = *rate - (tr.rate_branch_arrival ? p.lambda_n() : p.lambda_f());
            ar.sum_sq += er * er;
            ++ar.count;
            ar.sum_n += static_cast<double>(tr.total_samples);
            ar.sum_t += tr.total_window;
        }
    });
    for (std::size_t g = 0; g < params.size(); ++g) {
        for (int k = 0; k < 2; ++k) {
            std::vector<Acc> per_batch;
            for (std::size_t b = 0; b < nb; ++b) per_batch.push_back(acc[(g * nb + b) * 2 + k]);
            ResultRow row;
            row.estimator = k == 0 ? "algo2_u" : "algo2_rate";
            fill_algo_row(row, params[g], summarize(per_batch), table);
            table.rows.push_back(std::move(row));
        }
    }
    table.metadata["algo2_stop_n_departure"] = std::to_string(bounds.stop_n_departure());
    table.metadata["algo2_stop_n_arrival"] = std::to_string(bounds.stop_n_arrival());
}

} // namespace

ResultTable run_experiment(const ExperimentSpec &spec) {
    spec.validate();
    ResultTable table;
    table.metadata = spec.metadata;
    table.metadata["kind"] = std::string(to_string(spec.kind));
    table.metadata["replicates"] = std::to_string(spec.replicates);
    table.metadata["seed"] = std::to_string(spec.seed);
    table.metadata["batches"] = std::to_string(std::min(spec.batches, spec.replicates));
    table.metadata["mse_from"] = "raw (unclamped) estimates";
    run_estimator_grid(spec, table);
    const auto has = [&](EstimatorTag t) {
        return std::find(spec.estimators.begin(), spec.estimators.end(), t) != spec.estimators.end();
    };
    if (has(EstimatorTag::Algo1)) run_algo1_grid(spec, table);
    if (has(EstimatorTag::Algo2)) run_algo2_grid(spec, table);
    return table;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string opt_field(const std::optional<double> &v) { return v ? fmt(*v) : std::string(); }

std::ofstream open_out(const std::filesystem::path &path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return os;
}

void check_written(std::ofstream &os, const std::filesystem::path &path) {
    os.flush();
    if (!os) throw std::runtime_error("write to '" + path.string() + "' failed");
}

} // namespace

void emit_csv(const ResultTable &table, std::ostream &os) {
    os << kCsvHeader << '\n';
    for (const ResultRow &r : table.rows) {
        os << fmt(r.u) << ',' << fmt(r.lambda_f) << ',' << fmt(r.lambda_n) << ',' << fmt(r.n) << ','
           << fmt(r.t_window) << ',' << fmt(r.p_f) << ',' << fmt(r.p_m) << ',' << r.estimator << ',';
        if (r.error) {
            os << "error,,,,\n";
            continue;
        }
        os << fmt(r.mc_rms) << ',' << fmt(r.mc_se) << ',' << opt_field(r.cf_rms) << ',' << opt_field(r.crb_rms)
           << ',' << opt_field(r.oracle_rms) << '\n';
    }
}

void emit_csv(const ResultTable &table, const std::filesystem::path &path) {
    auto os = open_out(path);
    emit_csv(table, os);
    check_written(os, path);
}

std::vector<ResultRow> parse_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) throw DomainError("missing or unexpected CSV header");
    std::vector<ResultRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 13) throw DomainError("line " + std::to_string(lineno) + ": expected 13 fields");
        auto num = [&](const std::string &s) {
            char *end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (s.empty() || *end != '\0') throw DomainError("line " + std::to_string(lineno) + ": bad number '" + s + "'");
            return v;
        };
        auto opt = [&](const std::string &s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            return num(s);
        };
        ResultRow r;
        r.u = num(f[0]);
        r.lambda_f = num(f[1]);
        r.lambda_n = num(f[2]);
        r.n = num(f[3]);
        r.t_window = num(f[4]);
        r.p_f = num(f[5]);
        r.p_m = num(f[6]);
        r.estimator = f[7];
        if (f[8] == "error") {
            r.error = true;
        } else {
            r.mc_rms = num(f[8]);
            r.mc_se = num(f[9]);
            r.cf_rms = opt(f[10]);
            r.crb_rms = opt(f[11]);
            r.oracle_rms = opt(f[12]);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit_plotdata(const ResultTable &table, ExperimentKind kind, std::ostream &os) {
    enum class X { N, T, U };
    X x = X::N;
    if (kind == ExperimentKind::AsymptoteVsT) x = X::T;
    if (kind == ExperimentKind::RmsVsU || kind == ExperimentKind::Algo1TargetError ||
        kind == ExperimentKind::Algo2Joint)
        x = X::U;
    auto xval = [&](const ResultRow &r) { return x == X::N ? r.n : x == X::T ? r.t_window : r.u; };
    // Algorithm rows carry mean N and T, so they are keyed on everything else.
    auto key = [&](const ResultRow &r) {
        std::string k = "estimator=" + r.estimator;
        if (x != X::U) k += " u=" + fmt_short(r.u);
        k += " lambda_f=" + fmt_short(r.lambda_f);
        if (x != X::N && r.estimator.rfind("algo", 0) != 0) k += " N=" + fmt_short(r.n);
        if (x != X::T && r.estimator.rfind("algo", 0) != 0) k += " T=" + fmt_short(r.t_window);
        k += " Pf=" + fmt_short(r.p_f) + " Pm=" + fmt_short(r.p_m);
        return k;
    };
    for (const auto &[k, v] : table.metadata) os << "# " << k << " = " << v << '\n';
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ResultRow *>> curves;
    for (const ResultRow &r : table.rows) {
        if (r.error) continue;
        const std::string k = key(r);
        if (!curves.count(k)) order.push_back(k);
        curves[k].push_back(&r);
    }
    auto block = [&](const std::string &title, const std::vector<const ResultRow *> &rows,
                     const std::function<std::optional<double>(const ResultRow &)> &y, bool with_err) {
        std::vector<const ResultRow *> pts;
        for (const ResultRow *r : rows)
            if (y(*r)) pts.push_back(r);
        if (pts.empty()) return;
        os << "\n# curve: " << title << '\n';
        for (const ResultRow *r : pts)
            os << fmt(xval(*r)) << ' ' << fmt(*y(*r)) << ' ' << fmt(with_err ? r->mc_se : 0.0) << '\n';
    };
    for (const std::string &k : order) {
        const auto &rows = curves[k];
        block(k + " (monte carlo)", rows, [](const ResultRow &r) { return std::optional<double>(r.mc_rms); }, true);
        block(k + " (closed form)", rows, [](const ResultRow &r) { return r.cf_rms; }, false);
        block(k + " (CR bound)", rows, [](const ResultRow &r) { return r.crb_rms; }, false);
        block(k + " (oracle)", rows, [](const ResultRow &r) { return r.oracle_rms; }, false);
    }
}

void emit_plotdata(const ResultTable &table, ExperimentKind kind, const std::filesystem::path &path) {
    auto os = open_out(path);
    emit_plotdata(table, kind, os);
    check_written(os, path);
}

} // namespace putraffic
