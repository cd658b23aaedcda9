#pragma once

// Closed geodesics of (r > 0, sigma^2 (dr^2 + dz^2)) by shooting from the
// symmetry line z = 0. A geodesic leaving z = 0 perpendicularly and hitting it
// perpendicularly again closes up after reflection in z, because sigma is even
// in z. Closed geodesics are exactly the cross-sections of rotationally
// symmetric self-shrinking tori.

#include "shrinker/conformal_geometry.hpp"
#include "shrinker/error.hpp"

#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace shrinker {

/// Integration state in Euclidean arclength s.
struct ShootingState {
    double r = 0.0;
    double z = 0.0;
    double phi = 0.0;      ///< angle of the Euclidean unit tangent
    double s_euclid = 0.0; ///< Euclidean arclength elapsed
};

struct StateDerivative {
    double dr = 0.0;
    double dz = 0.0;
    double dphi = 0.0;
    double ds = 1.0;
};

/// Geodesic equation of g^sigma in Euclidean arclength: the Euclidean
/// curvature equals the normal derivative of log sigma along the left normal.
inline StateDerivative geodesic_rhs(const ShootingState& y) {
    if (!(y.r > 0.0)) {
        throw DomainError("geodesic_rhs: r must be positive");
    }
    const double c = std::cos(y.phi);
    const double s = std::sin(y.phi);
    return {c, s, -s * (1.0 / y.r - 0.5 * y.r) - c * (0.5 * y.z), 1.0};
}

struct ShootingOptions {
    double step = 1e-4;          ///< fixed RK4 step in Euclidean arclength
    double arclength_cap = 50.0; ///< give up after this much arclength
    double axis_floor = 1e-3;    ///< abort when r drops below this
    double escape_radius = 20.0; ///< abort when |x| exceeds this
    int crossings = 1;           ///< transversal z = 0 crossings per half orbit
};

namespace detail {

inline ShootingState rk4_step(const ShootingState& y, double h) {
    auto shifted = [&](const StateDerivative& k, double f) {
        return ShootingState{y.r + f * k.dr, y.z + f * k.dz, y.phi + f * k.dphi, y.s_euclid + f};
    };
    const StateDerivative k1 = geodesic_rhs(y);
    const StateDerivative k2 = geodesic_rhs(shifted(k1, 0.5 * h));
    const StateDerivative k3 = geodesic_rhs(shifted(k2, 0.5 * h));
    const StateDerivative k4 = geodesic_rhs(shifted(k3, h));
    return {y.r + h / 6.0 * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr),
            y.z + h / 6.0 * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz),
            y.phi + h / 6.0 * (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi), y.s_euclid + h};
}

// Cubic Hermite interpolant of z across one step, theta in [0, 1].
inline double hermite_z(const ShootingState& a, const ShootingState& b, double h, double theta) {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    return (2 * t3 - 3 * t2 + 1) * a.z + (t3 - 2 * t2 + theta) * h * std::sin(a.phi) + (-2 * t3 + 3 * t2) * b.z +
           (t3 - t2) * h * std::sin(b.phi);
}

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

/// Root of f on [a, b] by TOMS 748 to absolute width `tol`.
template <class F>
double bracketed_root(F f, double a, double b, double fa, double fb, double tol) {
    if (fa == 0.0) {
        return a;
    }
    if (fb == 0.0) {
        return b;
    }
    std::uintmax_t max_iter = 200;
    auto stop = [tol](double lo, double hi) { return std::abs(hi - lo) <= tol; };
    const auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, stop, max_iter);
    return 0.5 * (lo + hi);
}

inline void check_state(const ShootingState& y, const ShootingOptions& opt) {
    if (!(y.r >= opt.axis_floor)) {
        std::ostringstream msg;
        msg << "orbit reached the rotation axis (r = " << y.r << " < " << opt.axis_floor << ") at s = " << y.s_euclid;
        throw SolverError(SolverError::Reason::axis, msg.str());
    }
    if (!(std::hypot(y.r, y.z) <= opt.escape_radius)) {
        std::ostringstream msg;
        msg << "orbit left the search window |x| <= " << opt.escape_radius << " at s = " << y.s_euclid;
        throw SolverError(SolverError::Reason::escaped, msg.str());
    }
    if (y.s_euclid > opt.arclength_cap) {
        std::ostringstream msg;
        msg << "no closing crossing within arclength " << opt.arclength_cap;
        throw SolverError(SolverError::Reason::arclength_cap, msg.str());
    }
}

} // namespace detail

/// Deviation of phi from the perpendicular directions pi/2 + j pi, in (-pi/2, pi/2].
inline double perpendicular_miss(double phi) {
    return std::remainder(phi - 0.5 * std::numbers::pi, std::numbers::pi);
}

/// Trajectory from (r0, 0) with phi = pi/2 up to the requested z = 0 crossing.
struct HalfOrbit {
    std::vector<ShootingState> trajectory; ///< empty unless requested; last entry is the crossing
    ShootingState crossing;                ///< state at the final located crossing
    double miss = 0.0;                     ///< perpendicular_miss(crossing.phi)
};

/// RK4 integration until the `crossing_count`-th transversal crossing of
/// z = 0 (default: opt.crossings). The crossing is bracketed between two
/// steps, located on the Hermite interpolant of z, and then reached with one
/// exact-length RK4 sub-step.
inline HalfOrbit integrate_half_orbit(double r0, const ShootingOptions& opt = {}, bool keep_trajectory = false,
                                      std::optional<int> crossing_count = std::nullopt) {
    if (!(r0 > 0.0)) {
        throw DomainError("integrate_half_orbit: r0 must be positive");
    }
    const int wanted = crossing_count.value_or(opt.crossings);
    if (wanted < 1) {
        throw DomainError("integrate_half_orbit: crossing count must be at least 1");
    }
    const double h = opt.step;
    HalfOrbit out;
    ShootingState y{r0, 0.0, 0.5 * std::numbers::pi, 0.0};
    if (keep_trajectory) {
        out.trajectory.reserve(static_cast<std::size_t>(8.0 / h));
        out.trajectory.push_back(y);
    }
    int last_sign = 0;
    int found = 0;
    while (true) {
        ShootingState next = detail::rk4_step(y, h);
        detail::check_state(next, opt);
        const int s_prev = detail::sign_of(y.z);
        const int s_next = detail::sign_of(next.z);
        if (last_sign == 0) {
            last_sign = s_next;
        } else if (s_next != 0 && s_next != last_sign) {
            ++found;
            last_sign = s_next;
            if (found == wanted) {
                auto z_of = [&](double theta) { return detail::hermite_z(y, next, h, theta); };
                double theta = 1.0;
                if (s_prev != 0) {
                    theta = detail::bracketed_root(z_of, 0.0, 1.0, y.z, next.z, 1e-12 / h);
                } else {
                    theta = 0.0;
                }
                ShootingState cross = (theta > 0.0) ? detail::rk4_step(y, theta * h) : y;
                if (keep_trajectory) {
                    // Drop the last step point if it nearly coincides with the crossing.
                    if (theta * h < 1e-3 * h && out.trajectory.size() > 1) {
                        out.trajectory.pop_back();
                    }
                    out.trajectory.push_back(cross);
                }
                out.crossing = cross;
                out.miss = perpendicular_miss(cross.phi);
                return out;
            }
        }
        y = next;
        if (keep_trajectory) {
            out.trajectory.push_back(y);
        }
    }
}

inline double miss_function(double r0, const ShootingOptions& opt = {}) {
    return integrate_half_orbit(r0, opt).miss;
}

/// Reference integrator: Dormand-Prince 5(4) with dense output at a tight
/// tolerance, independent of the fixed-step RK4 path. Used to verify results.
struct ReferenceOptions {
    double abs_tol = 1e-13;
    double rel_tol = 1e-13;
    double initial_step = 1e-3;
    double sample_spacing = 1e-3; ///< Euclidean spacing of stored samples
};

namespace detail {

using OdeState = std::array<double, 3>;

struct GeodesicSystem {
    void operator()(const OdeState& y, OdeState& dy, double /*s*/) const {
        const auto d = geodesic_rhs({y[0], y[1], y[2], 0.0});
        dy = {d.dr, d.dz, d.dphi};
    }
};

} // namespace detail

/// Same contract as integrate_half_orbit, computed with the adaptive oracle.
inline HalfOrbit reference_half_orbit(double r0, const ShootingOptions& opt = {}, const ReferenceOptions& ref = {},
                                      bool keep_trajectory = false, std::optional<int> crossing_count = std::nullopt) {
    namespace odeint = boost::numeric::odeint;
    if (!(r0 > 0.0)) {
        throw DomainError("reference_half_orbit: r0 must be positive");
    }
    const int wanted = crossing_count.value_or(opt.crossings);
    auto stepper = odeint::make_dense_output(ref.abs_tol, ref.rel_tol, odeint::runge_kutta_dopri5<detail::OdeState>());
    stepper.initialize(detail::OdeState{r0, 0.0, 0.5 * std::numbers::pi}, 0.0, ref.initial_step);
    detail::GeodesicSystem system;

    HalfOrbit out;
    auto state_at = [&](double s) {
        detail::OdeState y;
        stepper.calc_state(s, y);
        return ShootingState{y[0], y[1], y[2], s};
    };
    if (keep_trajectory) {
        out.trajectory.push_back({r0, 0.0, 0.5 * std::numbers::pi, 0.0});
    }
    double next_sample = ref.sample_spacing;
    int last_sign = 0;
    int found = 0;
    while (true) {
        const auto [s0, s1] = stepper.do_step(system);
        const auto& y1 = stepper.current_state();
        const ShootingState end{y1[0], y1[1], y1[2], s1};
        detail::check_state(end, opt);
        const int s_next = detail::sign_of(end.z);
        double crossing_s = std::numeric_limits<double>::quiet_NaN();
        if (last_sign == 0) {
            last_sign = s_next;
        } else if (s_next != 0 && s_next != last_sign) {
            ++found;
            last_sign = s_next;
            if (found == wanted) {
                const auto& y0 = stepper.previous_state();
                auto z_of = [&](double s) { return state_at(s).z; };
                crossing_s = detail::bracketed_root(z_of, s0, s1, y0[1], end.z, 1e-12);
            }
        }
        const double sample_end = std::isnan(crossing_s) ? s1 : crossing_s;
        if (keep_trajectory) {
            while (next_sample < sample_end) {
                out.trajectory.push_back(state_at(next_sample));
                next_sample += ref.sample_spacing;
            }
        }
        if (!std::isnan(crossing_s)) {
            ShootingState cross = state_at(crossing_s);
            if (keep_trajectory) {
                if (crossing_s - out.trajectory.back().s_euclid < 1e-3 * ref.sample_spacing &&
                    out.trajectory.size() > 1) {
                    out.trajectory.pop_back();
                }
                out.trajectory.push_back(cross);
            }
            out.crossing = cross;
            out.miss = perpendicular_miss(cross.phi);
            return out;
        }
    }
}

/// Distance between the start (r0, 0) and the point where the orbit
/// returns to z = 0 after 2 * crossings crossings, integrated without
/// using the reflection symmetry.
inline double closure_gap(double r0, const ShootingOptions& opt = {}) {
    const auto full = integrate_half_orbit(r0, opt, false, 2 * opt.crossings);
    return std::hypot(full.crossing.r - r0, full.crossing.z);
}

inline double reference_closure_gap(double r0, const ShootingOptions& opt = {}, const ReferenceOptions& ref = {}) {
    const auto full = reference_half_orbit(r0, opt, ref, false, 2 * opt.crossings);
    return std::hypot(full.crossing.r - r0, full.crossing.z);
}

/// Closed curve from a half orbit: the trajectory followed by its mirror
/// image in z = 0, traversed back to the start. Point 0 is (r0, 0).
inline std::vector<HalfPlanePoint> reflect_half_orbit(const std::vector<ShootingState>& half) {
    std::vector<HalfPlanePoint> pts;
    pts.reserve(2 * half.size());
    for (const auto& st : half) {
        pts.push_back({st.r, st.z});
    }
    for (std::size_t j = half.size() - 2; j >= 1; --j) {
        pts.push_back({half[j].r, -half[j].z});
    }
    return pts;
}

struct ShootBracket {
    double lo = 0.4;
    double hi = 1.4;
    double scan_step = 0.05;
};

struct ShootSettings {
    ShootingOptions integration;
    ShootBracket bracket;
    double miss_tolerance = 1e-10;
    int max_iterations = 200;
};

struct ShootingResult {
    double r0 = 0.0;           ///< converged starting radius on z = 0
    CrossSection curve;        ///< closed curve, uniform in sigma-arclength
    double closure_gap = 0.0;  ///< |end - start| of the unsymmetrized full orbit
    double perp_defect = 0.0;  ///< |phi - pi/2| (mod pi) at the far crossing
    std::size_t n_points = 0;
    double r_far = 0.0;        ///< radius of the far z = 0 crossing
    int iterations = 0;        ///< bisection + secant iterations
    int miss_evaluations = 0;
    ShootingOptions integration;
};

/// Scans the bracket for a sign change of the miss function, bisects, polishes
/// with secant steps, then assembles and resamples the closed curve.
inline ShootingResult shoot_closed_torus(const ShootSettings& settings, std::size_t n_points) {
    const auto& opt = settings.integration;
    const auto& br = settings.bracket;
    if (!(br.lo > 0.0) || !(br.hi > br.lo)) {
        throw DomainError("shoot_closed_torus: bracket must satisfy 0 < lo < hi");
    }
    if (n_points < CrossSection::kMinPoints) {
        throw CurveError("shoot_closed_torus: n_points must be at least " + std::to_string(CrossSection::kMinPoints));
    }
    int evaluations = 0;
    auto miss = [&](double r0) -> std::optional<double> {
        ++evaluations;
        try {
            return miss_function(r0, opt);
        } catch (const SolverError&) {
            return std::nullopt;
        }
    };

    std::vector<double> grid;
    const int steps = std::max(1, static_cast<int>(std::ceil((br.hi - br.lo) / br.scan_step - 1e-9)));
    for (int j = 0; j <= steps; ++j) {
        grid.push_back(std::min(br.hi, br.lo + j * br.scan_step));
    }
    std::vector<std::optional<double>> values;
    values.reserve(grid.size());
    for (double r0 : grid) {
        values.push_back(miss(r0));
    }

    int iterations = 0;
    bool any_sign_change = false;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        if (!values[j] || !values[j + 1]) {
            continue;
        }
        double a = grid[j];
        double b = grid[j + 1];
        double fa = *values[j];
        double fb = *values[j + 1];
        if (fa * fb > 0.0) {
            continue;
        }
        any_sign_change = true;
        // Bisection; jumps of the wrapped miss function converge to |m| ~ pi/2
        // and are rejected below.
        bool failed = false;
        while (std::min(std::abs(fa), std::abs(fb)) > settings.miss_tolerance && b - a > 1e-15 * b) {
            if (++iterations > settings.max_iterations) {
                throw SolverError(SolverError::Reason::not_converged,
                                  "shoot_closed_torus: no convergence within " +
                                      std::to_string(settings.max_iterations) + " iterations");
            }
            const double mid = 0.5 * (a + b);
            const auto fm = miss(mid);
            if (!fm) {
                failed = true;
                break;
            }
            if (*fm == 0.0) {
                a = b = mid;
                fa = fb = 0.0;
                break;
            }
            if (fa * *fm < 0.0) {
                b = mid;
                fb = *fm;
            } else {
                a = mid;
                fa = *fm;
            }
        }
        if (failed) {
            continue;
        }
        double r0 = std::abs(fa) <= std::abs(fb) ? a : b;
        double m0 = std::abs(fa) <= std::abs(fb) ? fa : fb;
        // Secant polish inside the final bracket.
        for (int k = 0; k < 4 && fa != fb && m0 != 0.0; ++k) {
            const double cand = b - fb * (b - a) / (fb - fa);
            if (!(cand >= std::min(a, b) && cand <= std::max(a, b))) {
                break;
            }
            const auto fc = miss(cand);
            ++iterations;
            if (!fc || std::abs(*fc) >= std::abs(m0)) {
                break;
            }
            r0 = cand;
            m0 = *fc;
            a = b;
            fa = fb;
            b = cand;
            fb = *fc;
        }
        if (std::abs(m0) > settings.miss_tolerance) {
            continue;
        }

        const HalfOrbit half = integrate_half_orbit(r0, opt, true);
        const CrossSection dense(reflect_half_orbit(half.trajectory));
        ShootingResult result{r0,
                              resample_sigma_arclength(dense, n_points),
                              closure_gap(r0, opt),
                              std::abs(half.miss),
                              n_points,
                              half.crossing.r,
                              iterations,
                              evaluations,
                              opt};
        return result;
    }
    if (!any_sign_change) {
        std::ostringstream msg;
        msg << "miss function does not change sign on [" << br.lo << ", " << br.hi << "]";
        throw SolverError(SolverError::Reason::no_sign_change, msg.str());
    }
    throw SolverError(SolverError::Reason::not_converged,
                      "sign changes of the miss function were found but none converged to a closed orbit");
}

inline ShootingResult shoot_closed_torus(std::size_t n_points = 2048) {
    return shoot_closed_torus(ShootSettings{}, n_points);
}

/// Largest pairwise distance between curve points.
inline double curve_diameter(const CrossSection& c) {
    double best = 0.0;
    const auto pts = c.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            best = std::max(best, std::hypot(pts[i].r - pts[j].r, pts[i].z - pts[j].z));
        }
    }
    return best;
}

struct CertificateCheck {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
};

struct Certificate {
    double r0 = 0.0;
    double sigma_length = 0.0;
    double closure_gap = 0.0;
    double perp_defect = 0.0;
    double max_shrinker_residual = 0.0;
    std::size_t n_points = 0;
    std::vector<CertificateCheck> checks;
    std::vector<std::string> warnings;

    bool passed() const {
        for (const auto& c : checks) {
            if (!c.passed) {
                return false;
            }
        }
        return true;
    }

    const CertificateCheck* find(const std::string& name) const {
        for (const auto& c : checks) {
            if (c.name == name) {
                return &c;
            }
        }
        return nullptr;
    }
};

struct CertifyOptions {
    double residual_tolerance = 1e-4;
    double closure_relative_tolerance = 1e-8; ///< relative to the curve diameter
    double perp_tolerance = 1e-10;
    double length_relative_tolerance = 1e-6;
    std::size_t resolution_floor = 512;
    bool reference_check = true; ///< re-integrate with the adaptive oracle at 2N
    ReferenceOptions reference;
};

/// Re-checks a shooting result. Never throws on a failed check; every check
/// is recorded with its measured value and threshold.
inline Certificate certify(const ShootingResult& result, const CertifyOptions& opt = {}) {
    Certificate cert;
    cert.r0 = result.r0;
    cert.sigma_length = result.curve.sigma_length();
    cert.closure_gap = result.closure_gap;
    cert.perp_defect = result.perp_defect;
    cert.n_points = result.curve.size();
    cert.max_shrinker_residual = max_shrinker_residual(result.curve);

    const double diameter = curve_diameter(result.curve);
    auto add = [&](std::string name, double value, double threshold) {
        cert.checks.push_back({std::move(name), value < threshold, value, threshold});
    };
    add("shrinker_residual", cert.max_shrinker_residual, opt.residual_tolerance);
    add("closure_gap", cert.closure_gap, opt.closure_relative_tolerance * diameter);
    add("perp_defect", cert.perp_defect, opt.perp_tolerance);

    if (cert.n_points < opt.resolution_floor) {
        cert.warnings.push_back("resolution " + std::to_string(cert.n_points) + " is below the recommended " +
                                std::to_string(opt.resolution_floor) + " points");
    }

    if (opt.reference_check) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        try {
            const HalfOrbit half = reference_half_orbit(result.r0, result.integration, opt.reference, true);
            const CrossSection dense(reflect_half_orbit(half.trajectory));
            const CrossSection doubled = resample_sigma_arclength(dense, 2 * cert.n_points);
            const double rel = std::abs(doubled.sigma_length() - cert.sigma_length) / cert.sigma_length;
            add("reference_sigma_length", rel, opt.length_relative_tolerance);
            add("reference_shrinker_residual", max_shrinker_residual(doubled), opt.residual_tolerance);
            add("reference_closure_gap", reference_closure_gap(result.r0, result.integration, opt.reference),
                opt.closure_relative_tolerance * diameter);
        } catch (const Error& e) {
            add("reference_sigma_length", nan, opt.length_relative_tolerance);
            cert.warnings.push_back(std::string("reference integration failed: ") + e.what());
        }
    }
    return cert;
}

} // namespace shrinker
