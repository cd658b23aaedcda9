#pragma once

// Conformal weight sigma = (1/2) r exp(-|x|^2/4) on the half-plane r > 0 and
// the discrete closed curves ("cross-sections") that live in it.

#include "shrinker/error.hpp"
#include "shrinker/periodic_spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace shrinker {

/// Point (r, z) of the open half-plane; r is the distance to the rotation axis.
struct HalfPlanePoint {
    double r = 0.0;
    double z = 0.0;

    friend bool operator==(const HalfPlanePoint&, const HalfPlanePoint&) = default;
};

struct Vec2 {
    double r = 0.0;
    double z = 0.0;
};

/// Global maximum of sigma over the half-plane, attained at (sqrt 2, 0).
inline const double kSigmaMax = 1.0 / std::sqrt(2.0 * std::numbers::e);

namespace detail {

inline void require_half_plane(const HalfPlanePoint& p, const char* where) {
    if (!(p.r > 0.0) || !std::isfinite(p.r) || !std::isfinite(p.z)) {
        std::ostringstream msg;
        msg << where << ": point (" << p.r << ", " << p.z << ") is not in the open half-plane r > 0";
        throw DomainError(msg.str());
    }
}

inline double sigma_unchecked(double r, double z) {
    return 0.5 * r * std::exp(-0.25 * (r * r + z * z));
}

} // namespace detail

inline double sigma(const HalfPlanePoint& p) {
    detail::require_half_plane(p, "sigma");
    return detail::sigma_unchecked(p.r, p.z);
}

/// grad log sigma = e_r / r - x / 2.
inline Vec2 grad_log_sigma(const HalfPlanePoint& p) {
    detail::require_half_plane(p, "grad_log_sigma");
    return {1.0 / p.r - 0.5 * p.r, -0.5 * p.z};
}

/// Gaussian curvature of g = sigma^2 (dr^2 + dz^2), i.e. -sigma^-2 Laplacian(log sigma).
inline double gauss_curvature(const HalfPlanePoint& p) {
    const double s = sigma(p);
    return (1.0 + 1.0 / (p.r * p.r)) / (s * s);
}

namespace detail {

// 4-point Gauss-Legendre rule on [0, 1].
struct GaussLegendre4 {
    std::array<double, 4> nodes;
    std::array<double, 4> weights;
};

inline const GaussLegendre4& gauss_legendre4() {
    static const GaussLegendre4 rule = [] {
        const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
        const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
        const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
        return GaussLegendre4{{0.5 * (1.0 - b), 0.5 * (1.0 - a), 0.5 * (1.0 + a), 0.5 * (1.0 + b)},
                              {0.5 * wb, 0.5 * wa, 0.5 * wa, 0.5 * wb}};
    }();
    return rule;
}

// Fourth-order periodic central differences with respect to the point index.
inline double periodic_d1(std::span<const double> f, std::size_t i) {
    const std::size_t n = f.size();
    const double fp1 = f[(i + 1) % n];
    const double fp2 = f[(i + 2) % n];
    const double fm1 = f[(i + n - 1) % n];
    const double fm2 = f[(i + n - 2) % n];
    return (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / 12.0;
}

inline double periodic_d2(std::span<const double> f, std::size_t i) {
    const std::size_t n = f.size();
    const double fp1 = f[(i + 1) % n];
    const double fp2 = f[(i + 2) % n];
    const double fm1 = f[(i + n - 1) % n];
    const double fm2 = f[(i + n - 2) % n];
    return (-fp2 + 16.0 * fp1 - 30.0 * f[i] + 16.0 * fm1 - fm2) / 12.0;
}

} // namespace detail

/// A closed discrete curve in the half-plane together with the geometric
/// fields the spectral code needs. Immutable after construction.
///
/// The points are joined by a C2 periodic cubic interpolant parametrized by
/// cumulative chord length; per-segment sigma-lengths integrate sigma |gamma'|
/// along that interpolant with 4-point Gauss-Legendre. Tangent angles and
/// Euclidean curvature come from fourth-order central differences in the
/// point index, which is a smooth parameter for every curve we produce.
class CrossSection {
public:
    static constexpr std::size_t kMinPoints = 16;
    /// Relative deviation from l/N below which the curve counts as uniform.
    static constexpr double kUniformTolerance = 1e-8;

    explicit CrossSection(std::vector<HalfPlanePoint> points) : points_(std::move(points)) {
        validate();
        build_interpolant();
        compute_sigma_lengths();
        compute_differential_geometry();
    }

    std::size_t size() const noexcept { return points_.size(); }
    std::span<const HalfPlanePoint> points() const noexcept { return points_; }
    const HalfPlanePoint& point(std::size_t i) const { return points_[i]; }
    std::span<const double> r_values() const noexcept { return r_; }
    std::span<const double> z_values() const noexcept { return z_; }
    std::span<const double> sigma_values() const noexcept { return sigma_; }
    std::span<const double> tangent_angle() const noexcept { return tangent_angle_; }
    std::span<const double> euclid_curvature() const noexcept { return curvature_; }

    /// sigma-length of segment i, from point i to point i+1 (mod N).
    std::span<const double> segment_sigma_lengths() const noexcept { return segment_lengths_; }
    double sigma_length() const noexcept { return sigma_length_; }
    bool is_uniform_sigma_arclength() const noexcept { return uniform_; }

    /// Largest |segment - l/N| relative to l.
    double uniformity_defect() const noexcept { return uniformity_defect_; }

    /// Total turning of the unwrapped tangent angle; +-2 pi for an embedded
    /// curve. Diagnostic only: immersed cross-sections may differ.
    double total_turning() const noexcept { return total_turning_; }

    /// Chord-length parameter of each point and the closing period.
    std::span<const double> parameter_knots() const noexcept { return r_spline_.knots(); }
    double parameter_period() const noexcept { return r_spline_.period(); }

    HalfPlanePoint interpolate(double t) const { return {r_spline_.value(t), z_spline_.value(t)}; }

    /// sigma(gamma(t)) |gamma'(t)| inside a known segment.
    double sigma_speed(std::size_t segment, double offset) const {
        const double r = r_spline_.eval_in_segment<0>(segment, offset);
        const double z = z_spline_.eval_in_segment<0>(segment, offset);
        const double dr = r_spline_.eval_in_segment<1>(segment, offset);
        const double dz = z_spline_.eval_in_segment<1>(segment, offset);
        return detail::sigma_unchecked(r, z) * std::hypot(dr, dz);
    }

    /// sigma-length from the start of `segment` to `offset` inside it.
    double partial_sigma_length(std::size_t segment, double offset) const {
        const auto& gl = detail::gauss_legendre4();
        double sum = 0.0;
        for (std::size_t q = 0; q < 4; ++q) {
            sum += gl.weights[q] * sigma_speed(segment, gl.nodes[q] * offset);
        }
        return sum * offset;
    }

private:
    void validate() const {
        const std::size_t n = points_.size();
        if (n < kMinPoints) {
            std::ostringstream msg;
            msg << "cross-section needs at least " << kMinPoints << " points, got " << n;
            throw CurveError(msg.str());
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = points_[i];
            if (!std::isfinite(p.r) || !std::isfinite(p.z)) {
                throw CurveError("cross-section point " + std::to_string(i) + " is not finite");
            }
            if (!(p.r > 0.0)) {
                throw CurveError("cross-section point " + std::to_string(i) + " has r <= 0");
            }
            if (p == points_[(i + 1) % n]) {
                throw CurveError("cross-section points " + std::to_string(i) + " and " +
                                 std::to_string((i + 1) % n) + " coincide");
            }
        }
    }

    void build_interpolant() {
        const std::size_t n = points_.size();
        r_.resize(n);
        z_.resize(n);
        std::vector<double> knots(n);
        double t = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            r_[i] = points_[i].r;
            z_[i] = points_[i].z;
            knots[i] = t;
            const auto& next = points_[(i + 1) % n];
            t += std::hypot(next.r - points_[i].r, next.z - points_[i].z);
        }
        r_spline_ = PeriodicCubicSpline(knots, r_, t);
        z_spline_ = PeriodicCubicSpline(knots, z_, t);
    }

    void compute_sigma_lengths() {
        const std::size_t n = points_.size();
        sigma_.resize(n);
        segment_lengths_.resize(n);
        sigma_length_ = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sigma_[i] = detail::sigma_unchecked(r_[i], z_[i]);
            segment_lengths_[i] = partial_sigma_length(i, r_spline_.spacing(i));
            sigma_length_ += segment_lengths_[i];
        }
        const double mean = sigma_length_ / static_cast<double>(n);
        double worst = 0.0;
        for (double seg : segment_lengths_) {
            worst = std::max(worst, std::abs(seg - mean));
        }
        uniformity_defect_ = worst / sigma_length_;
        uniform_ = uniformity_defect_ < kUniformTolerance;
    }

    void compute_differential_geometry() {
        const std::size_t n = points_.size();
        tangent_angle_.resize(n);
        curvature_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dr = detail::periodic_d1(r_, i);
            const double dz = detail::periodic_d1(z_, i);
            const double ddr = detail::periodic_d2(r_, i);
            const double ddz = detail::periodic_d2(z_, i);
            const double speed = std::hypot(dr, dz);
            curvature_[i] = (dr * ddz - dz * ddr) / (speed * speed * speed);
            const double raw = std::atan2(dz, dr);
            tangent_angle_[i] =
                (i == 0) ? raw
                         : tangent_angle_[i - 1] + std::remainder(raw - tangent_angle_[i - 1], 2.0 * std::numbers::pi);
        }
        total_turning_ = tangent_angle_[n - 1] - tangent_angle_[0] +
                         std::remainder(tangent_angle_[0] - tangent_angle_[n - 1], 2.0 * std::numbers::pi);
    }

    std::vector<HalfPlanePoint> points_;
    std::vector<double> r_, z_;
    std::vector<double> sigma_;
    std::vector<double> tangent_angle_;
    std::vector<double> curvature_;
    std::vector<double> segment_lengths_;
    PeriodicCubicSpline r_spline_, z_spline_;
    double sigma_length_ = 0.0;
    double uniformity_defect_ = 0.0;
    double total_turning_ = 0.0;
    bool uniform_ = false;
};

inline CrossSection build_cross_section(std::vector<HalfPlanePoint> points) {
    return CrossSection(std::move(points));
}

/// Same curve traversed backwards; point 0 stays at index 0 and point i
/// moves to index N - i.
inline CrossSection reversed(const CrossSection& c) {
    const std::size_t n = c.size();
    std::vector<HalfPlanePoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = c.point((n - i) % n);
    }
    return CrossSection(std::move(pts));
}

namespace detail {

// Parameter t inside `segment` whose partial sigma-length equals `target`.
inline double invert_partial_length(const CrossSection& c, std::size_t segment, double target, double seg_length) {
    const double h = (segment + 1 < c.size()) ? c.parameter_knots()[segment + 1] - c.parameter_knots()[segment]
                                              : c.parameter_knots()[0] + c.parameter_period() -
                                                    c.parameter_knots()[segment];
    if (target <= 0.0) {
        return 0.0;
    }
    if (target >= seg_length) {
        return h;
    }
    double lo = 0.0;
    double hi = h;
    double t = h * target / seg_length;
    for (int iter = 0; iter < 50; ++iter) {
        const double f = c.partial_sigma_length(segment, t) - target;
        if (f > 0.0) {
            hi = t;
        } else {
            lo = t;
        }
        if (std::abs(f) <= 1e-16 * seg_length + 1e-300) {
            break;
        }
        double next = t - f / c.sigma_speed(segment, t);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (next == t) {
            break;
        }
        t = next;
    }
    return t;
}

// One resampling pass. New points lie on the periodic cubic interpolant of
// the input; a short fixed-point loop then evens out the segments of the new
// curve's own interpolant.
inline CrossSection resample_once(const CrossSection& c, std::size_t n_out) {
    const std::size_t n_in = c.size();
    const auto knots = c.parameter_knots();
    const auto segs = c.segment_sigma_lengths();
    std::vector<double> cumulative(n_in + 1, 0.0);
    for (std::size_t i = 0; i < n_in; ++i) {
        cumulative[i + 1] = cumulative[i] + segs[i];
    }
    const double l = cumulative.back();

    // Parameter (on the input interpolant) of each target point.
    std::vector<double> params(n_out);
    for (std::size_t j = 0; j < n_out; ++j) {
        const double target = l * static_cast<double>(j) / static_cast<double>(n_out);
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        std::size_t seg = static_cast<std::size_t>(std::distance(cumulative.begin(), it)) - 1;
        seg = std::min(seg, n_in - 1);
        params[j] = knots[seg] + detail::invert_partial_length(c, seg, target - cumulative[seg], segs[seg]);
    }

    auto make = [&](const std::vector<double>& ts) {
        std::vector<HalfPlanePoint> pts(ts.size());
        for (std::size_t j = 0; j < ts.size(); ++j) {
            pts[j] = c.interpolate(ts[j]);
        }
        pts[0] = c.point(0); // ts[0] is the first knot; keep it bit-exact
        return CrossSection(std::move(pts));
    };

    CrossSection out = make(params);
    double previous_defect = out.uniformity_defect();
    for (int iter = 0; iter < 20 && out.uniformity_defect() > 1e-13; ++iter) {
        const auto out_segs = out.segment_sigma_lengths();
        std::vector<double> out_cum(n_out + 1, 0.0);
        for (std::size_t j = 0; j < n_out; ++j) {
            out_cum[j + 1] = out_cum[j] + out_segs[j];
        }
        const double l_out = out_cum.back();
        std::vector<double> closed_params(params);
        closed_params.push_back(params[0] + c.parameter_period());

        std::vector<double> next(n_out);
        next[0] = params[0];
        std::size_t seg = 0;
        for (std::size_t j = 1; j < n_out; ++j) {
            const double target = l_out * static_cast<double>(j) / static_cast<double>(n_out);
            while (seg + 1 < n_out && out_cum[seg + 1] <= target) {
                ++seg;
            }
            const double w = (target - out_cum[seg]) / (out_cum[seg + 1] - out_cum[seg]);
            next[j] = closed_params[seg] + w * (closed_params[seg + 1] - closed_params[seg]);
        }
        CrossSection candidate = make(next);
        if (!(candidate.uniformity_defect() < previous_defect)) {
            break;
        }
        previous_defect = candidate.uniformity_defect();
        params = std::move(next);
        out = std::move(candidate);
    }
    return out;
}

} // namespace detail

/// Resamples to n_out points equally spaced in sigma-arclength, keeping
/// point 0. A rough input (noise near the grid scale) is not uniform after one
/// pass because the spline through the new points differs from the old one;
/// further passes on the output converge, at the price of mild smoothing.
inline CrossSection resample_sigma_arclength(const CrossSection& c, std::size_t n_out) {
    if (n_out < CrossSection::kMinPoints) {
        throw CurveError("resample_sigma_arclength: n_out must be at least " +
                         std::to_string(CrossSection::kMinPoints));
    }
    CrossSection out = detail::resample_once(c, n_out);
    for (int pass = 0; pass < 20 && !out.is_uniform_sigma_arclength(); ++pass) {
        out = detail::resample_once(out, n_out);
    }
    return out;
}

/// Extrema entering the coarse bounds.
struct GeometricScalars {
    double r_min = 0.0;
    double r_max = 0.0;
    double R = 0.0; ///< max |x| = sqrt(r^2 + z^2)
    double sigma_min = 0.0;
    double sigma_max = 0.0;
};

inline GeometricScalars geometric_scalars(const CrossSection& c) {
    GeometricScalars g;
    g.r_min = g.sigma_min = std::numeric_limits<double>::infinity();
    g.r_max = g.R = g.sigma_max = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& p = c.point(i);
        const double s = c.sigma_values()[i];
        g.r_min = std::min(g.r_min, p.r);
        g.r_max = std::max(g.r_max, p.r);
        g.R = std::max(g.R, std::hypot(p.r, p.z));
        g.sigma_min = std::min(g.sigma_min, s);
        g.sigma_max = std::max(g.sigma_max, s);
    }
    return g;
}

/// Signed normal quantities against the left normal n = (-sin phi, cos phi).
struct NormalProjections {
    std::vector<double> e_r_perp;           ///< <e_r, n>
    std::vector<double> x_perp;             ///< <x, n>
    std::vector<double> h_gamma;            ///< -kappa (H = -tr A)
    std::vector<double> h_sigma_restricted; ///< H_Gamma + e_r_perp / r
};

inline NormalProjections normal_projections(const CrossSection& c) {
    const std::size_t n = c.size();
    NormalProjections np;
    np.e_r_perp.resize(n);
    np.x_perp.resize(n);
    np.h_gamma.resize(n);
    np.h_sigma_restricted.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = c.point(i);
        const double phi = c.tangent_angle()[i];
        const double nr = -std::sin(phi);
        const double nz = std::cos(phi);
        np.e_r_perp[i] = nr;
        np.x_perp[i] = p.r * nr + p.z * nz;
        np.h_gamma[i] = -c.euclid_curvature()[i];
        np.h_sigma_restricted[i] = np.h_gamma[i] + nr / p.r;
    }
    return np;
}

/// Pointwise H_Gamma - x_perp / 2 + e_r_perp / r; zero on a shrinker cross-section.
inline std::vector<double> shrinker_residual(const CrossSection& c) {
    const auto np = normal_projections(c);
    std::vector<double> res(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        res[i] = np.h_gamma[i] - 0.5 * np.x_perp[i] + np.e_r_perp[i] / c.point(i).r;
    }
    return res;
}

inline double max_shrinker_residual(const CrossSection& c) {
    double worst = 0.0;
    for (double v : shrinker_residual(c)) {
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

} // namespace shrinker
