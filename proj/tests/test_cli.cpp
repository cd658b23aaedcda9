#include "cli_app.hpp"

#include "support/oracles.hpp"
#include "support/torus_fixture.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

using namespace shrinker;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "shrinker-spectra");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("shrinker_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write_curve(const std::string& name, const CrossSection& c) const {
        std::ofstream f(path(name), std::ios::binary);
        io::write_curve(f, c);
        return path(name);
    }

    fs::path dir_;
};

TEST_F(CliTest, HelpAndUsageErrors) {
    const auto help = cli({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("solve"), std::string::npos);

    const auto none = cli({});
    EXPECT_EQ(none.code, 3);
    EXPECT_NE(none.err.find("\"usage\""), std::string::npos);
    EXPECT_EQ(cli({"spin"}).code, 3);
    EXPECT_EQ(cli({"solve", "--format", "yaml"}).code, 3);
    EXPECT_EQ(cli({"solve", "--crossings", "0"}).code, 3);
}

TEST_F(CliTest, SolveWritesCurveAndCertificate) {
    const auto r = cli({"solve", "--n", "512", "--out", path("t")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("certificate PASS"), std::string::npos);
    const auto cert = nlohmann::json::parse(slurp(path("t.certificate.json")));
    EXPECT_TRUE(cert.at("passed").get<bool>());
    EXPECT_EQ(cert.at("n_points"), 512);
    const CrossSection c = io::read_curve(fs::path(path("t.curve.csv")));
    EXPECT_EQ(c.size(), 512u);
    EXPECT_NEAR(c.sigma_length(), 1.851217, 1e-6);

    // a second run is byte-identical
    ASSERT_EQ(cli({"solve", "--n", "512", "--out", path("u")}).code, 0);
    EXPECT_EQ(slurp(path("t.curve.csv")), slurp(path("u.curve.csv")));
    EXPECT_EQ(slurp(path("t.certificate.json")), slurp(path("u.certificate.json")));
}

TEST_F(CliTest, SolveFailureExitCodes) {
    const auto small = cli({"solve", "--n", "8"});
    EXPECT_EQ(small.code, 3);
    EXPECT_NE(small.err.find("resolution floor"), std::string::npos);

    const auto bracket = cli({"solve", "--n", "512", "--bracket", "5", "6", "--out", path("b")});
    EXPECT_EQ(bracket.code, 2);
    const auto err = nlohmann::json::parse(bracket.err);
    EXPECT_EQ(err.at("error").at("kind"), "solver");
    EXPECT_EQ(err.at("error").at("reason"), "no_sign_change");
    EXPECT_FALSE(fs::exists(path("b.curve.csv")));
}

TEST_F(CliTest, MissingInputIsIoError) {
    const auto r = cli({"index", "--input", path("absent.csv")});
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(nlohmann::json::parse(r.err).at("error").at("kind"), "io");
    EXPECT_EQ(cli({"index"}).code, 3);
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
    {
        std::ofstream f(path("cfg.json"));
        f << R"({"n": 256, "format": "json", "tolerances": {"residual": 1e-3}})";
    }
    const auto from_config = cli({"solve", "--config", path("cfg.json")});
    ASSERT_EQ(from_config.code, 0) << from_config.err;
    const auto j = nlohmann::json::parse(from_config.out);
    EXPECT_EQ(j.at("n_points"), 256);
    EXPECT_EQ(j.at("checks")[0].at("threshold"), 1e-3);

    const auto overridden = cli({"solve", "--config", path("cfg.json"), "--format", "text", "--n", "128"});
    EXPECT_NE(overridden.out.find("n_points      128"), std::string::npos);

    {
        std::ofstream f(path("bad.json"));
        f << "{not json";
    }
    EXPECT_EQ(cli({"solve", "--config", path("bad.json")}).code, 3);
}

TEST_F(CliTest, IndexOnTorus) {
    const auto curve = write_curve("torus.csv", fixture::torus_at(512));
    const auto r = cli({"index", "--input", curve, "--out", path("t")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("index 5 = 3 + 2(2+1+0+0) - 4"), std::string::npos);
    EXPECT_EQ(slurp(path("t.index.txt")), r.out);
    const auto j = nlohmann::json::parse(slurp(path("t.index.json")));
    EXPECT_EQ(j.at("index_computed"), 5);
    EXPECT_EQ(j.at("index_upper_fine"), 29);
    EXPECT_TRUE(r.err.empty());

    const auto csv = cli({"index", "--input", curve, "--format", "csv"});
    EXPECT_EQ(csv.out.rfind("k,i_k,lower,upper,q_min,q_max,exceptional_flag\n0,3,1,7,", 0), 0u);
}

TEST_F(CliTest, NonShrinkerInputIsFlagged) {
    const auto curve = write_curve("circle.csv", CrossSection(oracle::circle(1.5, 0.0, 0.5, 256)));
    const auto r = cli({"index", "--input", curve});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("not a critical point"), std::string::npos);
    EXPECT_NE(r.out.find("note: bound violated: entropy"), std::string::npos);
    EXPECT_NE(r.out.find("note: not a critical point"), std::string::npos);

    const auto solve_like = cli({"entropy", "--input", curve});
    EXPECT_EQ(solve_like.code, 1); // entropy below its lower bounds
}

TEST_F(CliTest, CoarseGridCannotSeparateZeroMode) {
    // at N = 256 the k = 1 rotation mode sits on opposite sides of tau in the
    // two discretizations; the disagreement is reported, not papered over
    const auto curve = write_curve("torus.csv", fixture::torus_at(256));
    const auto r = cli({"spectrum", "--input", curve});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(nlohmann::json::parse(r.err).at("error").at("kind"), "spectral");
}

TEST_F(CliTest, BoundsAndEntropy) {
    const auto curve = write_curve("torus.csv", fixture::torus_at(512));
    const auto b = cli({"bounds", "--input", curve, "--format", "json"});
    ASSERT_EQ(b.code, 0) << b.err;
    const auto j = nlohmann::json::parse(b.out);
    EXPECT_EQ(j.at("n_refined"), 1024);
    EXPECT_EQ(j.at("fine").at("upper"), 29);

    const auto e = cli({"entropy", "--input", curve, "--format", "json"});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto ej = nlohmann::json::parse(e.out);
    EXPECT_NEAR(ej.at("entropy").get<double>(), 1.851217, 1e-6);
    EXPECT_NEAR(ej.at("coarse_lower_crossover_entropy").get<double>(), 4.491241, 1e-6);
}

TEST_F(CliTest, VerifyPassesOnTorusAndFailsWhenJittered) {
    const auto curve = write_curve("torus.csv", fixture::torus_at(1024));
    const auto ok = cli({"verify", "--input", curve, "--k-max", "5"});
    EXPECT_EQ(ok.code, 0) << ok.out;
    EXPECT_NE(ok.out.find("verify PASS"), std::string::npos);
    EXPECT_NE(ok.out.find("inertia_k5"), std::string::npos);

    // smooth random normal perturbation of size 1e-2; the torus is a critical
    // point of sigma-length, so the length moves only at second order
    const auto& base = fixture::torus_at(1024);
    std::vector<HalfPlanePoint> pts(base.points().begin(), base.points().end());
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double amp[6], phase[6];
    for (int m = 0; m < 6; ++m) {
        amp[m] = 1e-2 * unit(rng) / 6.0;
        phase[m] = 3.0 * unit(rng);
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(pts.size());
        double d = 0.0;
        for (int m = 0; m < 6; ++m) {
            d += amp[m] * std::cos((m + 1) * t + phase[m]);
        }
        const double phi = base.tangent_angle()[i];
        pts[i].r -= d * std::sin(phi);
        pts[i].z += d * std::cos(phi);
    }
    EXPECT_NEAR(CrossSection(pts).sigma_length(), base.sigma_length(), 1e-3);
    const auto bad = write_curve("jittered.csv", CrossSection(pts));
    const auto fail = cli({"verify", "--input", bad, "--format", "json"});
    EXPECT_EQ(fail.code, 1) << fail.err;
    const auto j = nlohmann::json::parse(fail.out);
    EXPECT_FALSE(j.at("passed").get<bool>());
    int residuals = 0, inertias = 0;
    for (const auto& item : j.at("items")) {
        const auto name = item.at("name").get<std::string>();
        if (name.rfind("residual_", 0) == 0 && name != "residual_k1_inverse_sigma") {
            EXPECT_FALSE(item.at("passed").get<bool>()) << name;
            ++residuals;
        }
        if (name.rfind("inertia_k", 0) == 0) {
            EXPECT_TRUE(item.at("passed").get<bool>()) << name;
            ++inertias;
        }
    }
    EXPECT_EQ(residuals, 3);
    EXPECT_GE(inertias, 5);
}

TEST_F(CliTest, SpectrumEigenfunctionAndFigure) {
    const auto curve = write_curve("torus.csv", fixture::torus_at(512));
    const auto s = cli({"spectrum", "--input", curve, "--mode", "0", "--position", "1", "--out", path("t"),
                        "--format", "json"});
    ASSERT_EQ(s.code, 0) << s.err;
    const auto j = nlohmann::json::parse(s.out);
    ASSERT_EQ(j.size(), 5u);
    EXPECT_EQ(j[0].at("negative_count"), 3);
    const auto f = io::read_grid_function(fs::path(path("t.eigenfunction.csv")));
    EXPECT_EQ(f.u.size(), 512u);

    const auto fig = cli({"figure", "--input", curve, "--eigenfunction", path("t.eigenfunction.csv"), "--out",
                          path("t")});
    ASSERT_EQ(fig.code, 0) << fig.err;
    EXPECT_TRUE(fig.out.empty());
    EXPECT_NE(slurp(path("t.quiver.svg")).find("<g "), std::string::npos);
    EXPECT_EQ(slurp(path("t.curve.svg")).find("<g "), std::string::npos);

    const auto to_stdout = cli({"figure", "--input", curve, "--variation", "sigma-inv"});
    EXPECT_EQ(to_stdout.out.rfind("<svg ", 0), 0u);
    EXPECT_EQ(to_stdout.out, cli({"figure", "--input", curve, "--variation", "sigma-inv"}).out);

    const auto mismatch = write_curve("small.csv", fixture::torus_at(128));
    EXPECT_EQ(cli({"figure", "--input", mismatch, "--eigenfunction", path("t.eigenfunction.csv")}).code, 3);
}

} // namespace
