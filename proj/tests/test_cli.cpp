#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "putraffic/accuracy.hpp"
#include "putraffic/cli.hpp"
#include "putraffic/harness.hpp"
#include "putraffic/traffic_io.hpp"

using namespace putraffic;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args) {
    args.insert(args.begin(), "putraffic");
    std::vector<char *> argv;
    for (auto &a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    auto *old_out = std::cout.rdbuf(out.rdbuf());
    auto *old_err = std::cerr.rdbuf(err.rdbuf());
    const int code = cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string &name) {
    return std::filesystem::temp_directory_path() / ("putraffic_test_" + name);
}

} // namespace

TEST(Cli, BoundEqualsLibrary) {
    const CliResult r = run({"bound", "--formula", "crb_u", "--u", "0.3", "--lambda-f", "0.9", "--N", "100", "--T", "50"});
    ASSERT_EQ(r.code, 0) << r.err;
    const double lib = crb_u(TrafficParams::from_u_lambda_f(0.3, 0.9), 100, 50.0 / 99).rms;
    EXPECT_EQ(std::stod(r.out), lib);
}

TEST(Cli, BoundAcceptsAnyTwoTrafficParameters) {
    const CliResult a = run({"bound", "-f", "mse_avg_uniform", "--u", "0.3", "--lambda-n", "2.1", "-N", "50", "-T", "20"});
    const CliResult b = run({"bound", "-f", "mse_avg_uniform", "--lambda-f", "0.9", "--lambda-n", "2.1", "-N", "50", "-T", "20"});
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0);
    EXPECT_NEAR(std::stod(a.out), std::stod(b.out), 1e-14);
    EXPECT_EQ(run({"bound", "-f", "required_samples", "--u", "0.3", "--lambda-f", "0.9", "-T", "50", "--beta", "1.05"}).out,
              "185\n");
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({"bound", "--no-such-flag"}).code, 2);
    EXPECT_EQ(run({"bound", "-f", "crb_u", "--u", "0.3", "-N", "10", "-T", "5"}).code, 2);
    EXPECT_EQ(run({"bound", "-f", "crb_u", "--u", "1.5", "--lambda-f", "1", "-N", "10", "-T", "5"}).code, 2);
    EXPECT_EQ(run({"bound", "-f", "nonsense", "--u", "0.3", "--lambda-f", "1", "-N", "10", "-T", "5"}).code, 2);
    EXPECT_EQ(run({"estimate", "-i", temp_file("missing.csv").string(), "-e", "avg"}).code, 1);
}

TEST(Cli, ConfigFileAndOverride) {
    const auto cfg = temp_file("bound.cfg");
    {
        std::ofstream os(cfg);
        os << "# bound settings\nformula = mse_avg_uniform\nu = 0.3\nlambda_f = 0.9\nN = 100\nT = 50\n";
    }
    const CliResult a = run({"bound", "--config", cfg.string()});
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_DOUBLE_EQ(std::stod(a.out), mse_avg_uniform(TrafficParams::from_u_lambda_f(0.3, 0.9), 100, 50.0).rms);
    const CliResult b = run({"bound", "--config", cfg.string(), "--N", "40"});
    EXPECT_DOUBLE_EQ(std::stod(b.out), mse_avg_uniform(TrafficParams::from_u_lambda_f(0.3, 0.9), 40, 50.0).rms);
    {
        std::ofstream os(cfg);
        os << "bogus_key = 1\n";
    }
    EXPECT_EQ(run({"bound", "--config", cfg.string()}).code, 2);
    std::filesystem::remove(cfg);
}

TEST(Cli, SimulateThenEstimate) {
    const auto path = temp_file("stream.csv");
    const CliResult s = run({"simulate", "--u", "0.3", "--lambda-f", "0.9", "-T", "50", "-N", "101", "--seed", "7", "-o",
                       path.string()});
    ASSERT_EQ(s.code, 0) << s.err;
    std::ifstream is(path);
    const SampleStream stream = read_stream(is);
    ASSERT_EQ(stream.size(), 101u);
    double ones = 0;
    for (auto b : stream.values) ones += b;
    const CliResult e = run({"estimate", "-i", path.string(), "-e", "avg"});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto at = e.out.find("\nvalue = ");
    ASSERT_NE(at, std::string::npos);
    const auto pos = at + 9;
    EXPECT_DOUBLE_EQ(std::stod(e.out.substr(pos)), ones / 101);
    const CliResult again = run({"simulate", "--u", "0.3", "--lambda-f", "0.9", "-T", "50", "-N", "101", "--seed", "7"});
    std::ifstream is2(path);
    std::stringstream file;
    file << is2.rdbuf();
    EXPECT_EQ(again.out, file.str());
    std::filesystem::remove(path);
}

TEST(Cli, FigureMatchesLibrary) {
    const CliResult r = run({"figure", "fig_rms_vs_N", "--replicates", "30", "--seed", "7"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ostringstream expect;
    emit_csv(run_experiment(make_preset("fig_rms_vs_N", 30, 7)), expect);
    EXPECT_EQ(r.out, expect.str());
    EXPECT_EQ(run({"figure", "no_such_preset"}).code, 2);
}

TEST(Cli, DesignAndBlind) {
    const CliResult d = run({"design", "--what", "schedule", "--u", "0.4", "--lambda-f", "0.6", "-N", "5", "-T", "3"});
    ASSERT_EQ(d.code, 0) << d.err;
    EXPECT_NE(d.out.find("# k = "), std::string::npos);
    const CliResult b = run({"blind", "-a", "1", "--u", "0.6", "--lambda-f", "0.9", "--t0", "10", "--n0", "5", "--alpha", "5",
                       "--n-th", "100", "--seed", "3"});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_NE(b.out.find("terminated_by = "), std::string::npos);
}

TEST(Cli, VerifySuite) {
    std::fflush(stdout);
    const CliResult r = run({"verify", "--suite", "oracle", "--max-n", "10", "--configs", "20"});
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(run({"verify", "--suite", "everything"}).code, 2);
}
