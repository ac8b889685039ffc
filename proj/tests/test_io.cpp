#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mixedflow/io/config.hpp"
#include "mixedflow/io/presets.hpp"
#include "mixedflow/io/snapshot.hpp"
#include "test_support.hpp"

using namespace mixedflow;
using namespace mixedflow::io;

namespace {

int error_line(const std::string& text)
{
    try {
        (void)parse_config_text(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("mixedflow_test_io_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST(Config, ValidExample)
{
    const auto cfg = parse_config_text("n = 2\nR = 1\nk = -1\nspeed = mean\ninit = harmonic:2,1,1e-4\n");
    EXPECT_EQ(cfg.flow.n, 2);
    EXPECT_EQ(cfg.flow.R, 1.0);
    EXPECT_EQ(cfg.flow.k, -1);
    ASSERT_EQ(cfg.init.size(), 1u);
    EXPECT_EQ(cfg.init[0].kind, InitTerm::Kind::harmonic);
    EXPECT_EQ(cfg.init[0].args, (std::vector<double>{2.0, 1.0, 1e-4}));
    EXPECT_EQ(cfg.flow.speed.umbilic_derivative(), 1.0);
}

TEST(Config, ConstraintIndexOutOfRange)
{
    try {
        (void)parse_config_text("n = 2\n# comment\nk = 5\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_NE(std::string(e.what()).find("k=5"), std::string::npos);
    }
}

TEST(Config, PowerMeanSpeed)
{
    const auto cfg = parse_config_text("n = 2\nR = 1\nspeed = power_mean m=1 beta=2\n");
    EXPECT_DOUBLE_EQ(cfg.flow.speed.umbilic_derivative(), 1.0);
    const auto el = parse_config_text("n = 2\nR = 2\nspeed = elementary l=2\n");
    EXPECT_DOUBLE_EQ(el.flow.speed.umbilic_derivative(), 0.5);
}

TEST(Config, Errors)
{
    EXPECT_EQ(error_line("n = 2\nfoo = 1\n"), 2);
    EXPECT_EQ(error_line("n = 2\nR = 1\nR = 2\n"), 3);
    // Missing keys are reported at the end of the input.
    EXPECT_EQ(error_line("R = 1\n"), 2);
    EXPECT_EQ(error_line("n = 3\n"), 1);
    EXPECT_EQ(error_line("n = 2\ndt =\n"), 2);
    EXPECT_EQ(error_line("n = 2\nno equals sign\n"), 2);
    EXPECT_EQ(error_line("n = 2\nspeed = power_mean m=3 beta=1\n"), 2);
    EXPECT_EQ(error_line("n = 2\nspeed = power_mean m=1\n"), 2);
    EXPECT_EQ(error_line("n = 2\nspeed = mean beta=2\n"), 2);
    EXPECT_EQ(error_line("n = 2\nspeed = harmonic\n"), 2);
    EXPECT_EQ(error_line("n = 2\nintegrator = euler\n"), 2);
    EXPECT_EQ(error_line("n = 2\nL_max = 8\ninit = harmonic:9,1,1\n"), 3);
    EXPECT_EQ(error_line("n = 2\ninit = harmonic:2,6,1\n"), 2);
    EXPECT_EQ(error_line("n = 2\ninit = harmonic:2.5,1,1\n"), 2);
    EXPECT_EQ(error_line("n = 2\ninit = random:0.1,6\n"), 2);
    EXPECT_EQ(error_line("n = 2\ninit = sphere:0,0,0\n"), 2);
    EXPECT_EQ(error_line("n = 1\ninit = sphere:0,0,0,0\n"), 2);
    EXPECT_EQ(error_line("n = 2\ninit = cube:1\n"), 2);
    EXPECT_EQ(error_line("n = 2\nT = -1\n"), 2);
    EXPECT_EQ(error_line("n = 2\ndt = 1e-3x\n"), 2);
    EXPECT_EQ(error_line("n = 1\nk = 1\n"), 2);
    EXPECT_THROW(parse_config("/nonexistent/mixedflow.cfg"), InvalidArgument);
}

TEST(Config, EchoIsCanonical)
{
    const auto cfg = parse_config_text("  init=const:0.1 # c\nn=1\n");
    EXPECT_EQ(cfg.echo, (std::vector<std::string>{"n = 1", "init = const:0.1"}));
}

TEST(Config, InitTermsSum)
{
    const auto cfg = parse_config_text("n = 2\nL_max = 8\ninit = const:0.1; harmonic:2,1,1e-3; harmonic:2,1,2e-3\n");
    const auto g = harmonic::build_grid(2, 8, 2);
    const auto a = initial_height(cfg.init, g, 1.0);
    auto mean_only = a;
    std::fill(mean_only.begin() + 1, mean_only.end(), 0.0);
    for (double v : harmonic::synthesize(mean_only, g, 1.0)) EXPECT_NEAR(v, 0.1, 1e-15);
    EXPECT_DOUBLE_EQ(a[harmonic::coeff_index(2, 2, 1)], 3e-3);
}

TEST(Config, SphereInitMatchesFit)
{
    const auto cfg = parse_config_text("n = 2\nL_max = 24\ninit = sphere:0.01,0.02,-0.01,0.03\n");
    const auto g = harmonic::build_grid(2, 24, 2);
    const auto a = initial_height(cfg.init, g, 1.0);
    const auto fit = analysis::fit_sphere_coeffs(a, g, 1.0);
    const std::vector<double> z{0.01, 0.02, -0.01, 0.03};
    EXPECT_LE(testsupport::max_abs_diff(fit.coords.z, z), 1e-12);
}

TEST(Config, RandomInitIsSeededAndBandLimited)
{
    const auto g = harmonic::build_grid(2, 12, 2);
    const auto a = random_height(g, 1.0, 0.05, 6, 42);
    EXPECT_EQ(a, random_height(g, 1.0, 0.05, 6, 42));
    EXPECT_NE(a, random_height(g, 1.0, 0.05, 6, 43));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int l = harmonic::degree_of(2, i);
        if (l < 2 || l > 6) {
            EXPECT_EQ(a[i], 0.0);
        }
    }
    // Same field regardless of the run's truncation.
    const auto g16 = harmonic::build_grid(2, 16, 2);
    const auto b = random_height(g16, 1.0, 0.05, 6, 42);
    EXPECT_LE(testsupport::max_abs_diff(a, b), 0.0);
    const auto fine = harmonic::build_grid(2, 6, 8);
    const auto v = harmonic::synthesize(std::span<const double>(a).first(fine.num_coeffs()), fine, 1.0);
    EXPECT_NEAR(testsupport::max_abs(v), 0.05, 0.005);
}

TEST(Snapshot, RoundTripIsExact)
{
    std::mt19937_64 rng(5);
    for (int n : {1, 2}) {
        Snapshot s{n, 1.3, 10, {0.123456789, testsupport::random_coeffs(n, 10, rng)}};
        const Snapshot back = parse_snapshot_text(format_snapshot(s));
        EXPECT_EQ(back.n, n);
        EXPECT_EQ(back.R, 1.3);
        EXPECT_EQ(back.lmax, 10);
        EXPECT_EQ(back.state.t, s.state.t);
        EXPECT_EQ(back.state.rho, s.state.rho);
    }
    const auto dir = scratch_dir("snapshot");
    Snapshot s{2, 1.0, 6, {0.5, testsupport::random_coeffs(2, 6, rng)}};
    write_snapshot(s, (dir / "s.txt").string());
    EXPECT_EQ(read_snapshot((dir / "s.txt").string()).state.rho, s.state.rho);
    EXPECT_THROW(read_snapshot((dir / "missing.txt").string()), InvalidArgument);
}

TEST(Snapshot, ZeroStateWritesZeroLines)
{
    Snapshot s{2, 1.0, 3, {0.0, std::vector<double>(harmonic::basis_size(2, 3), 0.0)}};
    const std::string text = format_snapshot(s);
    std::istringstream in(text);
    std::string line;
    int coeff_lines = 0;
    int header_lines = 0;
    while (std::getline(in, line)) {
        if (header_lines < 4) {
            ++header_lines;
            continue;
        }
        std::istringstream ls(line);
        int l = -1, p = -1;
        std::string v;
        ls >> l >> p >> v;
        EXPECT_EQ(v, "0") << line;
        ++coeff_lines;
    }
    EXPECT_EQ(coeff_lines, 16);
    EXPECT_EQ(text.substr(0, 23), "n 2\nR 1\nL_max 3\nt 0\n0 1");
}

TEST(Snapshot, HandWrittenMatchesHarmonicInit)
{
    const auto snap = parse_snapshot_text("n 2\nR 1\nL_max 16\nt 0\n2 1 1e-4\n");
    const auto cfg = parse_config_text(preset_config_text(find_preset("linear-decay"), {}));
    const auto g = harmonic::build_grid(cfg.flow.n, cfg.flow.lmax, cfg.flow.oversample);
    EXPECT_EQ(snap.state.rho, initial_height(cfg.init, g, cfg.flow.R));
}

TEST(Snapshot, MalformedReportsLine)
{
    auto line_of = [](const std::string& text) {
        try {
            (void)parse_snapshot_text(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    EXPECT_EQ(line_of("n 2\nR 1\nL_max 4\nt 0\n2 1 1e-4\n2 1 2e-4\n"), 6);
    EXPECT_EQ(line_of("n 2\nR 1\nL_max 4\nt 0\n5 1 1\n"), 5);
    EXPECT_EQ(line_of("n 2\nR 1\nL_max 4\nt 0\n2 6 1\n"), 5);
    EXPECT_EQ(line_of("n 2\nL_max 4\n"), 2);
    EXPECT_EQ(line_of("n 2\nR 1\nL_max 4\nt 0\n2 1 abc\n"), 5);
    EXPECT_EQ(line_of("n 2\nR 1\nL_max 4\n"), 4);
}

TEST(Presets, OverridesReplaceLines)
{
    const auto& p = find_preset("conservation");
    const auto cfg = parse_config_text(preset_config_text(p, {"k=-1", "T = 0.01", "L_max=10"}));
    EXPECT_EQ(cfg.flow.k, -1);
    EXPECT_EQ(cfg.flow.T, 0.01);
    EXPECT_EQ(cfg.flow.lmax, 10);
    EXPECT_EQ(cfg.flow.integrator, flow::Integrator::rk4);
    EXPECT_THROW(preset_config_text(p, {"k"}), InvalidArgument);
    EXPECT_THROW(find_preset("nope"), InvalidArgument);
    EXPECT_THROW(parse_config_text(preset_config_text(p, {"bogus=1"})), ParseError);
    for (const Preset& each : presets()) EXPECT_NO_THROW(parse_config_text(each.config)) << each.name;
}

TEST(Presets, StationarityWritesFiles)
{
    const auto dir = scratch_dir("stationarity");
    const auto rep = run_experiment("stationarity", {"out_dir=" + dir.string(), "L_max=8"});
    EXPECT_TRUE(rep.pass());
    EXPECT_EQ(rep.out_dir, dir.string());
    const std::string csv_text = slurp(dir / "run.csv");
    EXPECT_NE(csv_text.find("t,h_k,V,sup_G,sup_rho,sphere_residual_sup,mode_energy_l2"), std::string::npos);
    EXPECT_NE(csv_text.find("# mixedflow 0.1.0"), std::string::npos);
    const std::string summary = slurp(dir / "summary.txt");
    EXPECT_NE(summary.find("required <= 1e-10"), std::string::npos);
    EXPECT_NE(summary.find("result PASS"), std::string::npos);
    const auto snap = read_snapshot((dir / "final.txt").string());
    EXPECT_EQ(snap.lmax, 8);
}

TEST(Presets, RunIsDeterministic)
{
    const auto dir = scratch_dir("det");
    const std::vector<std::string> ov{"T=0.05", "L_max=8", "cadence=2", "out_dir=" + dir.string()};
    (void)run_experiment("nonlinear-convergence", ov);
    const std::string first = slurp(dir / "run.csv");
    std::filesystem::remove(dir / "run.csv");
    (void)run_experiment("nonlinear-convergence", ov);
    EXPECT_GT(first.size(), 100u);
    EXPECT_EQ(first, slurp(dir / "run.csv"));
}

TEST(Presets, EnvironmentOverridesOutDir)
{
    const auto dir = scratch_dir("env");
    ::setenv("MIXEDFLOW_OUT", dir.string().c_str(), 1);
    EXPECT_EQ(resolve_out_dir("elsewhere"), dir.string());
    ::unsetenv("MIXEDFLOW_OUT");
    EXPECT_EQ(resolve_out_dir("elsewhere"), "elsewhere");
}

TEST(Presets, FailingCheckIsReported)
{
    Check c{"x", Check::Kind::relative, 1.05, 1.0, 0.01};
    EXPECT_FALSE(c.pass());
    EXPECT_NE(c.describe().find("FAIL"), std::string::npos);
    EXPECT_TRUE((Check{"y", Check::Kind::equal, 4.0, 4.0, 0.0}).pass());
    ExperimentReport rep;
    rep.checks = {c};
    EXPECT_FALSE(rep.pass());
}
