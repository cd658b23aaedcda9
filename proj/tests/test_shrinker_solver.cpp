#include "shrinker/shrinker_solver.hpp"

#include "support/oracles.hpp"
#include "support/torus_fixture.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <string>

using namespace shrinker;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

TEST(GeodesicRhs, ClosedFormValues) {
    const auto a = geodesic_rhs({std::sqrt(2.0), 0.0, kHalfPi, 0.0});
    EXPECT_NEAR(a.dphi, 0.0, 1e-15);
    EXPECT_NEAR(a.dr, 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(a.dz, 1.0);
    EXPECT_DOUBLE_EQ(a.ds, 1.0);
    const auto b = geodesic_rhs({1.0, 0.0, kHalfPi, 0.0});
    EXPECT_NEAR(b.dphi, -0.5, 1e-15);
    EXPECT_THROW(geodesic_rhs({0.0, 0.0, 0.0, 0.0}), DomainError);
}

TEST(GeodesicRhs, CurvatureEqualsNormalDerivativeOfLogSigma) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> rs(0.2, 3.0), zs(-2.0, 2.0), ph(-4.0, 4.0);
    for (int i = 0; i < 50; ++i) {
        const ShootingState y{rs(rng), zs(rng), ph(rng), 0.0};
        const Vec2 g = grad_log_sigma({y.r, y.z});
        const double expected = -std::sin(y.phi) * g.r + std::cos(y.phi) * g.z;
        EXPECT_NEAR(geodesic_rhs(y).dphi, expected, 1e-14);
    }
}

TEST(Shooting, ConvergesToAngenentTorus) {
    const auto& res = fixture::torus();
    EXPECT_NEAR(res.curve.sigma_length(), 1.85, 0.01);
    EXPECT_LT(res.perp_defect, 1e-10);
    EXPECT_LT(res.closure_gap, 1e-8 * curve_diameter(res.curve));
    EXPECT_LT(max_shrinker_residual(res.curve), 1e-4);
    EXPECT_EQ(res.n_points, 2048u);
    EXPECT_TRUE(res.curve.is_uniform_sigma_arclength());
    EXPECT_GT(res.r0, 0.0);
    EXPECT_GT(res.r_far, res.r0);
}

TEST(Shooting, ReferenceIntegratorConfirmsPerpendicularCrossing) {
    const auto& res = fixture::torus();
    const HalfOrbit ref = reference_half_orbit(res.r0, res.integration);
    EXPECT_LT(std::abs(ref.miss), 1e-10);
    EXPECT_NEAR(ref.crossing.r, res.r_far, 1e-9);
}

TEST(Shooting, ReflectedHalfOrbitCloses) {
    const auto& res = fixture::torus();
    const HalfOrbit half = integrate_half_orbit(res.r0, res.integration, true);
    const auto pts = reflect_half_orbit(half.trajectory);
    const auto& last = pts.back();
    const auto& first = pts.front();
    // the reflected path ends one step before the start
    EXPECT_LT(std::hypot(last.r - first.r, last.z - first.z), 2.0 * res.integration.step);
    EXPECT_LT(closure_gap(res.r0, res.integration), 1e-8);
    EXPECT_LT(reference_closure_gap(res.r0, res.integration), 1e-8);
}

TEST(Shooting, FarStartDoesNotClose) {
    // Both integrators must classify r0 = 10 the same way.
    auto classify = [](auto&& run) -> std::string {
        try {
            const HalfOrbit h = run();
            return std::abs(h.miss) < 1e-6 ? "closes" : "misses";
        } catch (const SolverError& e) {
            return to_string(e.reason());
        }
    };
    const std::string rk4 = classify([] { return integrate_half_orbit(10.0); });
    const std::string ref = classify([] { return reference_half_orbit(10.0); });
    EXPECT_NE(rk4, "closes");
    EXPECT_EQ(rk4, ref);
}

TEST(Shooting, AxisAndCapErrors) {
    ShootingOptions tight;
    tight.arclength_cap = 0.5;
    EXPECT_THROW(
        {
            try {
                integrate_half_orbit(0.437, tight);
            } catch (const SolverError& e) {
                EXPECT_EQ(e.reason(), SolverError::Reason::arclength_cap);
                throw;
            }
        },
        SolverError);
    EXPECT_THROW(integrate_half_orbit(0.0), DomainError);
}

TEST(Shooting, ResolutionIndependentLength) {
    const double l1024 = shoot_closed_torus(1024).curve.sigma_length();
    const double l2048 = fixture::torus().curve.sigma_length();
    const double l4096 = shoot_closed_torus(4096).curve.sigma_length();
    EXPECT_LT(std::abs(l1024 - l4096) / l4096, 1e-6);
    const double richardson = (4.0 * l4096 - l2048) / 3.0;
    for (double l : {l1024, l2048, l4096}) {
        EXPECT_LT(std::abs(l - richardson) / richardson, 1e-6);
    }
}

TEST(Shooting, BracketWithoutSignChange) {
    ShootSettings s;
    s.bracket = {5.0, 6.0, 0.05};
    try {
        shoot_closed_torus(s, 512);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.reason(), SolverError::Reason::no_sign_change);
    }
}

TEST(Shooting, Deterministic) {
    const auto a = shoot_closed_torus(512);
    const auto b = shoot_closed_torus(512);
    EXPECT_EQ(a.r0, b.r0);
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
        EXPECT_EQ(a.curve.point(i), b.curve.point(i));
    }
}

TEST(Shooting, EuclideanSpeedIsInverseSigma) {
    const auto& c = fixture::torus_at(2048);
    const double l = c.sigma_length();
    const auto dr = oracle::spectral_derivative(c.r_values(), l, 1);
    const auto dz = oracle::spectral_derivative(c.z_values(), l, 1);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double speed = std::hypot(dr[i], dz[i]);
        EXPECT_NEAR(speed * c.sigma_values()[i], 1.0, 1e-8) << "i=" << i;
    }
}

TEST(Shooting, SpectralShrinkerResidual) {
    const auto& c = fixture::torus_at(2048);
    const double l = c.sigma_length();
    const auto r1 = oracle::spectral_derivative(c.r_values(), l, 1);
    const auto z1 = oracle::spectral_derivative(c.z_values(), l, 1);
    const auto r2 = oracle::spectral_derivative(c.r_values(), l, 2);
    const auto z2 = oracle::spectral_derivative(c.z_values(), l, 2);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double speed = std::hypot(r1[i], z1[i]);
        const double kappa = (r1[i] * z2[i] - z1[i] * r2[i]) / (speed * speed * speed);
        const double nr = -z1[i] / speed;
        const double nz = r1[i] / speed;
        const auto& p = c.point(i);
        const double residual = -kappa - 0.5 * (p.r * nr + p.z * nz) + nr / p.r;
        EXPECT_LT(std::abs(residual), 1e-6) << "i=" << i;
    }
}

TEST(Shooting, ReflectionSymmetry) {
    const auto& c = fixture::torus_at(2048);
    const std::size_t n = c.size();
    EXPECT_EQ(c.point(0).z, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_LT(std::abs(c.point(i).z + c.point((n - i) % n).z), 1e-6);
    }
}

TEST(Certify, ConvergedTorusPasses) {
    const Certificate cert = certify(fixture::torus());
    EXPECT_TRUE(cert.passed());
    for (const char* name : {"shrinker_residual", "closure_gap", "perp_defect", "reference_sigma_length",
                             "reference_shrinker_residual", "reference_closure_gap"}) {
        const auto* check = cert.find(name);
        ASSERT_NE(check, nullptr) << name;
        EXPECT_TRUE(check->passed) << name << " = " << check->value;
    }
    EXPECT_TRUE(cert.warnings.empty());
}

TEST(Certify, JitteredCurveFailsResidual) {
    ShootingResult jittered = fixture::torus();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    std::vector<HalfPlanePoint> pts(jittered.curve.points().begin(), jittered.curve.points().end());
    for (auto& p : pts) {
        p.r += u(rng);
        p.z += u(rng);
    }
    jittered.curve = CrossSection(pts);
    CertifyOptions opt;
    opt.reference_check = false;
    const Certificate cert = certify(jittered, opt);
    EXPECT_FALSE(cert.find("shrinker_residual")->passed);
    EXPECT_FALSE(cert.passed());
}

TEST(Certify, LowResolutionWarns) {
    const auto res = shoot_closed_torus(16);
    CertifyOptions opt;
    opt.reference_check = false;
    const Certificate cert = certify(res, opt);
    ASSERT_FALSE(cert.warnings.empty());
    EXPECT_NE(cert.warnings.front().find("resolution"), std::string::npos);
}

} // namespace
