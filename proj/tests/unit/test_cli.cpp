#include "cli.hpp"
#include "helpers.hpp"

#include "ssmreduce/error.hpp"
#include "ssmreduce/io.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>

using namespace ssmreduce;
namespace fs = std::filesystem;

namespace {

cli::RunConfig config(const std::string& command, const std::string& preset, const std::string& out) {
    cli::RunConfig c;
    c.command = command;
    c.preset = preset;
    c.out = out;
    return c;
}

int run_args(std::vector<std::string> args) {
    args.insert(args.begin(), "ssmreduce");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST(Cli, ReduceWritesModelAndResonanceReport) {
    const std::string out = ssmtest::scratch_dir("cli_reduce");
    EXPECT_EQ(cli::execute(config("reduce", "analytic2dof", out)), 0);
    EXPECT_TRUE(fs::exists(out + "/model.json"));
    EXPECT_TRUE(fs::exists(out + "/resonance.json"));
    const auto model = read_json(out + "/model.json");
    EXPECT_FALSE(model.empty());
}

TEST(Cli, ReduceCompareWritesTable) {
    const std::string out = ssmtest::scratch_dir("cli_compare");
    auto c = config("reduce", "chain12-hardening", out);
    c.method = "lsm";
    c.compare = true;
    EXPECT_EQ(cli::execute(c), 0);
    EXPECT_TRUE(fs::exists(out + "/comparison.csv"));
    EXPECT_TRUE(fs::exists(out + "/comparison.json"));
}

TEST(Cli, NearResonantPresetExitsTwo) {
    const std::string out = ssmtest::scratch_dir("cli_nearres");
    EXPECT_EQ(cli::execute(config("check", "analytic2dof-nearres", out)), 2);
    EXPECT_EQ(cli::execute(config("reduce", "analytic2dof-nearres", out)), 2);
    EXPECT_EQ(cli::execute(config("check", "analytic2dof", out)), 0);
    EXPECT_TRUE(fs::exists(out + "/check.json"));
}

TEST(Cli, ResonanceToleranceOverride) {
    const std::string out = ssmtest::scratch_dir("cli_restol");
    auto c = config("reduce", "chain12-damped", out);
    EXPECT_EQ(cli::execute(c), 2);
    c.resonance_tol = 1e-4;
    EXPECT_EQ(cli::execute(c), 0);
}

TEST(Cli, InputErrorsExitOne) {
    const std::string out = ssmtest::scratch_dir("cli_input");
    EXPECT_EQ(cli::execute(config("reduce", "no-such-preset", out)), 1);
    auto c = config("reduce", "", out);
    c.input = out + "/missing.json";
    EXPECT_EQ(cli::execute(c), 1);
    c.preset = "analytic2dof";
    EXPECT_EQ(cli::execute(c), 1);
    EXPECT_EQ(run_args({}), 1);
    EXPECT_EQ(run_args({"reduce", "--preset", "analytic2dof", "--bogus"}), 1);
    EXPECT_EQ(run_args({"frc", "--preset", "chain12-hardening", "--direction", "sideways", "--out", out}), 1);
}

TEST(Cli, InputFileRoundTrip) {
    const std::string out = ssmtest::scratch_dir("cli_file");
    save_system(ssmtest::one_mode(1.0, std::sqrt(6.0), {.p1I = 1.0, .q20 = 1.0}), out + "/sys.json");
    cli::RunConfig c = config("reduce", "", out);
    c.input = out + "/sys.json";
    c.method = "lsm";
    EXPECT_EQ(cli::execute(c), 0);
    const auto model = read_json(out + "/model.json");
    EXPECT_NEAR(model.at("a3").get<double>(), -1.0 / 3.0, 1e-12);
}

TEST(Cli, ZeroNonlinearityReducesToLinearModel) {
    const std::string out = ssmtest::scratch_dir("cli_linear");
    save_system(ssmtest::one_mode(1.0, 3.3), out + "/sys.json");
    cli::RunConfig c = config("reduce", "", out);
    c.input = out + "/sys.json";
    c.method = "lsm";
    EXPECT_EQ(cli::execute(c), 0);
    const auto model = read_json(out + "/model.json");
    EXPECT_EQ(model.at("a2").get<double>(), 0.0);
    EXPECT_EQ(model.at("a3").get<double>(), 0.0);
    EXPECT_EQ(model.at("b12").get<double>(), 0.0);
}

TEST(Cli, BackboneZeroAmplitudeSingleRow) {
    const std::string out = ssmtest::scratch_dir("cli_backbone");
    auto c = config("backbone", "chain12-hardening", out);
    c.r_max = 0.0;
    EXPECT_EQ(cli::execute(c), 0);
    EXPECT_EQ(read_csv(out + "/backbone.csv").size(), 1u);
}

TEST(Cli, BackboneVerifyAddsShootingColumn) {
    const std::string out = ssmtest::scratch_dir("cli_verify");
    auto c = config("backbone", "chain12-hardening", out);
    c.verify = true;
    c.steps = 4;
    EXPECT_EQ(cli::execute(c), 0);
    std::vector<std::string> header;
    const auto rows = read_csv(out + "/backbone.csv", &header);
    EXPECT_EQ(rows.size(), 5u);
    EXPECT_NE(std::find(header.begin(), header.end(), "omega_shooting"), header.end());
    EXPECT_TRUE(fs::exists(out + "/fe.csv"));
    EXPECT_TRUE(fs::exists(out + "/plots.json"));
}

TEST(Cli, FrcWithZeroForcing) {
    const std::string out = ssmtest::scratch_dir("cli_frc");
    auto c = config("frc", "chain12-hardening", out);
    c.eps = 0.0;
    c.steps = 5;
    c.method = "sweep";
    EXPECT_EQ(cli::execute(c), 0);
    std::vector<std::string> header;
    const auto rows = read_csv(out + "/frc.csv", &header);
    ASSERT_FALSE(rows.empty());
    const auto col = std::find(header.begin(), header.end(), "amplitude") - header.begin();
    for (const auto& r : rows) EXPECT_EQ(std::stod(r[static_cast<std::size_t>(col)]), 0.0);
}

TEST(Cli, SimulateZeroDurationSingleSample) {
    const std::string out = ssmtest::scratch_dir("cli_sim0");
    auto c = config("simulate", "analytic2dof", out);
    c.t_end = 0.0;
    c.method = "ssm";
    EXPECT_EQ(cli::execute(c), 0);
    EXPECT_EQ(read_csv(out + "/trajectory.csv").size(), 1u);
}

TEST(Cli, SimulateCompareOrdersReductionMethods) {
    const std::string out = ssmtest::scratch_dir("cli_simcmp");
    auto c = config("simulate", "chain12-damped", out);
    c.compare = true;
    c.t_end = 100.0;
    EXPECT_EQ(cli::execute(c), 0);
    const auto meta = read_json(out + "/trajectory.json");
    EXPECT_TRUE(meta.at("comparison").at("ordering_ssm_md_linear").get<bool>());
    EXPECT_TRUE(fs::exists(out + "/comparison_trajectory.csv"));
}

TEST(Cli, ThreadsFallBackToEnvironment) {
    ::unsetenv("SSMREDUCE_THREADS");
    EXPECT_EQ(cli::resolve_threads(std::nullopt), 1);
    ::setenv("SSMREDUCE_THREADS", "3", 1);
    EXPECT_EQ(cli::resolve_threads(std::nullopt), 3);
    EXPECT_EQ(cli::resolve_threads(2), 2);
    ::setenv("SSMREDUCE_THREADS", "zero", 1);
    EXPECT_THROW(cli::resolve_threads(std::nullopt), InputError);
    ::unsetenv("SSMREDUCE_THREADS");
    EXPECT_THROW(cli::resolve_threads(0), InputError);
}

TEST(Cli, ArgumentParsingDrivesSubcommands) {
    const std::string out = ssmtest::scratch_dir("cli_argv");
    EXPECT_EQ(run_args({"backbone", "--preset", "chain12-softening", "--steps", "3", "--out", out}), 0);
    EXPECT_TRUE(fs::exists(out + "/backbone.json"));
}
