#include "shrinker/conformal_geometry.hpp"

#include "support/oracles.hpp"
#include "support/torus_fixture.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace shrinker;

namespace {

const double kE = std::numbers::e;

TEST(Sigma, ClosedFormValues) {
    EXPECT_NEAR(sigma({std::sqrt(2.0), 0.0}), 1.0 / std::sqrt(2.0 * kE), 1e-15);
    EXPECT_NEAR(sigma({std::sqrt(2.0), 0.0}), 0.428882, 1e-6);
    EXPECT_NEAR(sigma({2.0, 0.0}), 1.0 / kE, 1e-15);
    EXPECT_NEAR(sigma({1.0, 1.0}), 0.5 * std::exp(-0.5), 1e-15);
    EXPECT_NEAR(sigma({1.0, 1.0}), 0.303265, 1e-6);
    EXPECT_DOUBLE_EQ(kSigmaMax, 1.0 / std::sqrt(2.0 * kE));
}

TEST(Sigma, RejectsNonPositiveRadius) {
    EXPECT_THROW(sigma({0.0, 0.0}), DomainError);
    EXPECT_THROW(sigma({-1.0, 0.5}), DomainError);
    EXPECT_THROW(grad_log_sigma({0.0, 1.0}), DomainError);
    EXPECT_THROW(gauss_curvature({-0.1, 0.0}), DomainError);
}

TEST(GradLogSigma, ClosedFormValues) {
    const Vec2 a = grad_log_sigma({std::sqrt(2.0), 0.0});
    EXPECT_NEAR(a.r, 0.0, 1e-15);
    EXPECT_NEAR(a.z, 0.0, 1e-15);
    const Vec2 b = grad_log_sigma({1.0, 0.0});
    EXPECT_DOUBLE_EQ(b.r, 0.5);
    EXPECT_DOUBLE_EQ(b.z, 0.0);
    const Vec2 c = grad_log_sigma({2.0, 2.0});
    EXPECT_DOUBLE_EQ(c.r, -0.5);
    EXPECT_DOUBLE_EQ(c.z, -1.0);
}

TEST(GaussCurvature, ClosedFormValues) {
    EXPECT_NEAR(gauss_curvature({std::sqrt(2.0), 0.0}), 3.0 * kE, 1e-12);
    EXPECT_NEAR(gauss_curvature({std::sqrt(2.0), 0.0}), 8.15485, 1e-5);
    EXPECT_NEAR(gauss_curvature({2.0, 0.0}), kE * kE * 1.25, 1e-12);
    EXPECT_NEAR(gauss_curvature({2.0, 0.0}), 9.23633, 1e-5);
    EXPECT_NEAR(gauss_curvature({1.0, 1.0}), 8.0 * kE, 1e-12);
    EXPECT_NEAR(gauss_curvature({1.0, 1.0}), 21.7463, 1e-4);
}

TEST(GaussCurvature, MatchesFiniteDifferenceLaplacianOfLogSigma) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> rs(0.3, 3.5), zs(-2.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const HalfPlanePoint p{rs(rng), zs(rng)};
        const double s = sigma(p);
        const double fd = -oracle::fd_laplacian_log_sigma(p.r, p.z, 1e-3) / (s * s);
        EXPECT_NEAR(gauss_curvature(p), fd, 1e-5) << "at (" << p.r << ", " << p.z << ")";
    }
}

TEST(CrossSection, SmallCircleSigmaLength) {
    const double rc = std::sqrt(2.0);
    const CrossSection c(oracle::circle(rc, 0.0, 0.1, 64));
    const double first_order = 2.0 * std::numbers::pi * 0.1 * sigma({rc, 0.0});
    EXPECT_NEAR(c.sigma_length(), first_order, 0.02 * first_order);
    const double dense = oracle::circle_sigma_length(rc, 0.0, 0.1);
    EXPECT_NEAR(c.sigma_length(), dense, 1e-6 * dense);
}

TEST(CrossSection, SegmentLengthsSumToTotal) {
    std::mt19937_64 rng(3);
    const CrossSection c(oracle::random_smooth_curve(rng, 300));
    double sum = 0.0;
    for (double s : c.segment_sigma_lengths()) {
        EXPECT_GT(s, 0.0);
        sum += s;
    }
    EXPECT_NEAR(sum, c.sigma_length(), 1e-14 * c.sigma_length());
    EXPECT_GT(c.sigma_length(), 0.0);
}

TEST(CrossSection, ValidatesInput) {
    EXPECT_THROW(CrossSection(oracle::circle(1.5, 0.0, 0.5, 15)), CurveError);
    EXPECT_NO_THROW(CrossSection(oracle::circle(1.5, 0.0, 0.5, 16)));

    auto dup = oracle::circle(1.5, 0.0, 0.5, 32);
    dup.insert(dup.begin() + 5, dup[5]);
    EXPECT_THROW(CrossSection{dup}, CurveError);

    auto closed = oracle::circle(1.5, 0.0, 0.5, 32);
    closed.push_back(closed.front());
    EXPECT_THROW(CrossSection{closed}, CurveError);

    auto axis = oracle::circle(0.4, 0.0, 0.5, 32);
    EXPECT_THROW(CrossSection{axis}, CurveError);

    auto bad = oracle::circle(1.5, 0.0, 0.5, 32);
    bad[3].z = std::nan("");
    EXPECT_THROW(CrossSection{bad}, CurveError);

    EXPECT_THROW(CrossSection(std::vector<HalfPlanePoint>{{1.0, 0.0}}), CurveError);
}

TEST(CrossSection, CircleCurvatureAndTurning) {
    const CrossSection c(oracle::circle(2.0, 0.0, 1.0, 256));
    for (double k : c.euclid_curvature()) {
        EXPECT_NEAR(k, 1.0, 1e-7);
    }
    EXPECT_NEAR(c.total_turning(), 2.0 * std::numbers::pi, 1e-9);
    EXPECT_NEAR(reversed(c).total_turning(), -2.0 * std::numbers::pi, 1e-9);
}

TEST(CrossSection, TorusSigmaLength) {
    const auto& c = fixture::torus().curve;
    EXPECT_EQ(c.size(), 2048u);
    EXPECT_TRUE(c.is_uniform_sigma_arclength());
    EXPECT_NEAR(c.sigma_length(), 1.85, 0.01);
    EXPECT_NEAR(std::abs(c.total_turning()), 2.0 * std::numbers::pi, 1e-9);
}

TEST(Resample, IdempotentOnUniformCurve) {
    const auto& c = fixture::torus_at(512);
    const CrossSection again = resample_sigma_arclength(c, 512);
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_NEAR(again.point(i).r, c.point(i).r, 1e-10);
        EXPECT_NEAR(again.point(i).z, c.point(i).z, 1e-10);
    }
}

TEST(Resample, MakesNonUniformCurveUniform) {
    std::mt19937_64 rng(11);
    const CrossSection raw(oracle::random_smooth_curve(rng, 512));
    EXPECT_FALSE(raw.is_uniform_sigma_arclength());
    const CrossSection c = resample_sigma_arclength(raw, 512);
    EXPECT_TRUE(c.is_uniform_sigma_arclength());
    const double target = c.sigma_length() / 512.0;
    for (double s : c.segment_sigma_lengths()) {
        EXPECT_NEAR(s, target, 1e-8 * c.sigma_length());
    }
    EXPECT_EQ(c.point(0), raw.point(0));
}

TEST(Resample, PreservesSigmaLength) {
    const auto& c2048 = fixture::torus_at(2048);
    const auto& c4096 = fixture::torus_at(4096);
    EXPECT_LT(std::abs(c4096.sigma_length() - c2048.sigma_length()) / c2048.sigma_length(), 1e-6);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const CrossSection raw(oracle::random_smooth_curve(rng, 600));
        for (std::size_t n : {512u, 1024u}) {
            const CrossSection c = resample_sigma_arclength(raw, n);
            EXPECT_LT(std::abs(c.sigma_length() - raw.sigma_length()) / raw.sigma_length(), 1e-6);
        }
    }
}

TEST(Resample, RejectsTooFewPoints) {
    EXPECT_THROW(resample_sigma_arclength(fixture::torus_at(512), 8), CurveError);
}

TEST(GeometricScalars, SmallCircle) {
    const double rc = std::sqrt(2.0);
    const auto g = geometric_scalars(CrossSection(oracle::circle(rc, 0.0, 0.1, 256)));
    EXPECT_NEAR(g.r_min, rc - 0.1, 1e-12);
    EXPECT_NEAR(g.r_max, rc + 0.1, 1e-12);
    EXPECT_NEAR(g.R, rc + 0.1, 1e-12);
}

TEST(GeometricScalars, SigmaSandwichOnTorusAndRandomCurves) {
    std::vector<CrossSection> curves{fixture::torus_at(2048)};
    std::mt19937_64 rng(17);
    for (int i = 0; i < 10; ++i) {
        curves.emplace_back(oracle::random_smooth_curve(rng, 200));
    }
    for (const auto& c : curves) {
        const auto g = geometric_scalars(c);
        EXPECT_GT(g.r_min, 0.0);
        EXPECT_LE(g.r_min, g.r_max);
        EXPECT_LE(g.r_max, g.R);
        const double floor = 0.5 * g.r_min * std::exp(-g.R * g.R / 4.0);
        EXPECT_LE(floor, g.sigma_min);
        for (double s : c.sigma_values()) {
            EXPECT_GE(s, floor - 1e-12);
            EXPECT_LE(s, kSigmaMax + 1e-12);
        }
    }
}

TEST(NormalProjections, CircleSignsFollowLeftNormal) {
    // counterclockwise unit circle about (2, 0); point 0 is (3, 0)
    const CrossSection c(oracle::circle(2.0, 0.0, 1.0, 256));
    const auto np = normal_projections(c);
    EXPECT_NEAR(c.tangent_angle()[0], std::numbers::pi / 2.0, 1e-9);
    EXPECT_NEAR(np.e_r_perp[0], -1.0, 1e-9);
    EXPECT_NEAR(np.x_perp[0], -3.0, 1e-9);
    EXPECT_NEAR(np.h_gamma[0], -1.0, 1e-7);
    EXPECT_NEAR(np.h_sigma_restricted[0], -1.0 - 1.0 / 3.0, 1e-7);
}

TEST(NormalProjections, StraightStretchHasZeroCurvature) {
    // stadium: two half circles joined by straight sides of length 4
    std::vector<HalfPlanePoint> pts;
    const double step = 0.02;
    for (double z = -2.0; z < 2.0 - 1e-12; z += step) {
        pts.push_back({3.0, z});
    }
    for (int i = 0; i < 79; ++i) {
        const double t = std::numbers::pi * i / 79.0;
        pts.push_back({2.5 + 0.5 * std::cos(t), 2.0 + 0.5 * std::sin(t)});
    }
    for (double z = 2.0; z > -2.0 + 1e-12; z -= step) {
        pts.push_back({2.0, z});
    }
    for (int i = 0; i < 79; ++i) {
        const double t = std::numbers::pi + std::numbers::pi * i / 79.0;
        pts.push_back({2.5 + 0.5 * std::cos(t), -2.0 + 0.5 * std::sin(t)});
    }
    const CrossSection c(pts);
    const auto np = normal_projections(c);
    for (std::size_t i = 20; i < 180; ++i) {
        EXPECT_NEAR(np.h_gamma[i], 0.0, 1e-9) << "i=" << i;
    }
}

TEST(NormalProjections, ReversalCovariance) {
    std::mt19937_64 rng(23);
    for (const CrossSection& c : {fixture::torus_at(1024), CrossSection(oracle::random_smooth_curve(rng, 256))}) {
        const CrossSection r = reversed(c);
        const auto a = normal_projections(c);
        const auto b = normal_projections(r);
        const std::size_t n = c.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (n - i) % n;
            EXPECT_NEAR(b.e_r_perp[j], -a.e_r_perp[i], 1e-12);
            EXPECT_NEAR(b.x_perp[j], -a.x_perp[i], 1e-12);
            EXPECT_NEAR(b.h_gamma[j], -a.h_gamma[i], 1e-9 * (1.0 + std::abs(a.h_gamma[i])));
        }
        EXPECT_NEAR(r.sigma_length(), c.sigma_length(), 1e-13 * c.sigma_length());
        const auto ga = geometric_scalars(c);
        const auto gb = geometric_scalars(r);
        EXPECT_EQ(ga.r_min, gb.r_min);
        EXPECT_EQ(ga.r_max, gb.r_max);
        EXPECT_EQ(ga.R, gb.R);
        EXPECT_EQ(ga.sigma_min, gb.sigma_min);
        EXPECT_EQ(ga.sigma_max, gb.sigma_max);
    }
}

TEST(NormalProjections, TorusShrinkerResidual) {
    EXPECT_LT(max_shrinker_residual(fixture::torus().curve), 1e-4);
}

} // namespace
