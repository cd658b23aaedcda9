#pragma once

// Fourier-mode stability operators on a cross-section. Everything is
// discretized on the uniform sigma-arclength grid s_i = i h, h = l / N, with
// eigenvalues reported in the -L f = lambda f convention: a negative matrix
// eigenvalue is a negative eigenvalue of L_k.

#include "shrinker/conformal_geometry.hpp"
#include "shrinker/cyclic_tridiagonal.hpp"
#include "shrinker/error.hpp"
#include "shrinker/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shrinker {

inline constexpr std::size_t kMinSpectralPoints = 64;

/// P_k(s_i) = sigma^-2 (1 + (1 - k^2) / r^2) on the grid.
struct ModePotential {
    int k = 0;
    std::vector<double> values;
    double grid_spacing = 0.0;
};

namespace detail {

inline void require_spectral_curve(const CrossSection& c, int k) {
    if (k < 0) {
        throw DomainError("Fourier mode must be nonnegative, got " + std::to_string(k));
    }
    if (c.size() < kMinSpectralPoints) {
        throw CurveError("spectral assembly needs at least " + std::to_string(kMinSpectralPoints) +
                         " points, got " + std::to_string(c.size()));
    }
    if (!c.is_uniform_sigma_arclength()) {
        throw CurveError("spectral assembly needs a uniform sigma-arclength curve (defect " +
                         std::to_string(c.uniformity_defect()) + "); resample first");
    }
}

} // namespace detail

inline ModePotential mode_potential(const CrossSection& c, int k) {
    detail::require_spectral_curve(c, k);
    ModePotential p;
    p.k = k;
    p.grid_spacing = c.sigma_length() / static_cast<double>(c.size());
    p.values.resize(c.size());
    const double kk = static_cast<double>(k) * k;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double r = c.point(i).r;
        const double s = c.sigma_values()[i];
        p.values[i] = (1.0 + (1.0 - kk) / (r * r)) / (s * s);
    }
    return p;
}

/// Central-difference discretization of -d^2/ds^2 - P on a periodic grid of
/// total length `length`.
inline CyclicTridiagonal assemble_periodic_operator(std::span<const double> potential, double length) {
    const std::size_t n = potential.size();
    if (n < 3 || !(length > 0.0)) {
        throw DomainError("periodic operator needs n >= 3 and positive length");
    }
    const double h = length / static_cast<double>(n);
    const double inv_h2 = 1.0 / (h * h);
    std::vector<double> diag(n), off(n, -inv_h2);
    for (std::size_t i = 0; i < n; ++i) {
        diag[i] = 2.0 * inv_h2 - potential[i];
    }
    return {std::move(diag), std::move(off)};
}

/// Discretization of -L_k^sigma.
inline CyclicTridiagonal assemble_conjugated(const CrossSection& c, int k) {
    const auto p = mode_potential(c, k);
    return assemble_periodic_operator(p.values, c.sigma_length());
}

/// A eta = lambda D eta with A = -L_k^sigma and D = diag(sigma^-2).
struct GeneralizedPair {
    CyclicTridiagonal a;
    std::vector<double> d;

    /// D^{-1/2} A D^{-1/2} = sigma A sigma, which discretizes -L_k acting on u.
    CyclicTridiagonal reduced() const {
        std::vector<double> w(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            w[i] = 1.0 / std::sqrt(d[i]);
        }
        return a.congruence(w);
    }
};

inline GeneralizedPair assemble_generalized(const CrossSection& c, int k) {
    GeneralizedPair g{assemble_conjugated(c, k), {}};
    g.d.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double s = c.sigma_values()[i];
        g.d[i] = 1.0 / (s * s);
    }
    return g;
}

/// 1e-8 times the infinity-norm estimate of ||A||.
inline double default_tau(const CyclicTridiagonal& a, double relative = 1e-8) {
    return relative * a.inf_norm();
}

/// Number of entries of `eigenvalues` below -tau.
inline std::size_t count_below(std::span<const double> eigenvalues, double tau) {
    return static_cast<std::size_t>(
        std::count_if(eigenvalues.begin(), eigenvalues.end(), [tau](double v) { return v < -tau; }));
}

/// Count of eigenvalues < -tau from the inertia of M + tau I. Empty when the
/// factorization hit a near-zero pivot.
inline std::optional<std::size_t> inertia_negative_count(const CyclicTridiagonal& m, double tau) {
    const Inertia in = inertia(m.shifted(tau));
    if (in.breakdown) {
        return std::nullopt;
    }
    return in.negative;
}

struct NegativeCount {
    std::size_t count = 0;
    std::size_t eigen_count = 0;
    std::optional<std::size_t> inertia_count; ///< empty on factorization breakdown
    bool factorization_breakdown = false;
};

namespace detail {

inline NegativeCount reconcile_counts(std::size_t eigen_count, std::optional<std::size_t> inertia_count,
                                      const char* what) {
    NegativeCount out;
    out.eigen_count = eigen_count;
    out.inertia_count = inertia_count;
    out.factorization_breakdown = !inertia_count.has_value();
    if (inertia_count && *inertia_count != eigen_count) {
        throw SpectralError(std::string(what) + ": eigendecomposition counts " + std::to_string(eigen_count) +
                            " negative eigenvalues but the inertia gives " + std::to_string(*inertia_count));
    }
    out.count = eigen_count;
    return out;
}

} // namespace detail

/// Eigenvalues below -tau, by dense eigendecomposition and by inertia. The two
/// must agree; on factorization breakdown the dense count is used.
inline NegativeCount negative_count(const CyclicTridiagonal& m, double tau) {
    if (!(tau >= 0.0)) {
        throw DomainError("zero tolerance must be nonnegative");
    }
    const auto ev = dense_eigenvalues(m);
    return detail::reconcile_counts(count_below(ev, tau), inertia_negative_count(m, tau), "negative_count");
}

struct SpectralOptions {
    std::optional<double> tau;   ///< absolute zero tolerance; default 1e-8 ||A_conj||
    double tau_relative = 1e-8;
    bool dense_conjugated = false; ///< also count the conjugated operator densely
};

struct ModeSpectrum {
    int k = 0;
    std::size_t n = 0;
    double tau = 0.0;
    std::vector<double> eigenvalues; ///< sorted, of -L_k in the weighted sense
    std::size_t negative_count = 0;
    std::size_t conjugated_negative_count = 0;
    double nearest_to_zero = 0.0; ///< eigenvalue of smallest magnitude
    bool factorization_breakdown = false;
};

inline ModeSpectrum mode_spectrum(const CrossSection& c, int k, const SpectralOptions& opt = {}) {
    const GeneralizedPair g = assemble_generalized(c, k);
    const CyclicTridiagonal b = g.reduced();

    ModeSpectrum out;
    out.k = k;
    out.n = c.size();
    out.tau = opt.tau ? *opt.tau : default_tau(g.a, opt.tau_relative);
    if (!(out.tau >= 0.0)) {
        throw DomainError("zero tolerance must be nonnegative");
    }
    out.eigenvalues = dense_eigenvalues(b);

    const auto gen = detail::reconcile_counts(count_below(out.eigenvalues, out.tau),
                                              inertia_negative_count(b, out.tau), "generalized problem");
    std::optional<std::size_t> conj = inertia_negative_count(g.a, out.tau);
    if (opt.dense_conjugated || !conj) {
        conj = detail::reconcile_counts(count_below(dense_eigenvalues(g.a), out.tau), conj, "conjugated operator")
                   .count;
    }
    out.negative_count = gen.count;
    out.conjugated_negative_count = *conj;
    out.factorization_breakdown = gen.factorization_breakdown;
    if (out.negative_count != out.conjugated_negative_count) {
        throw SpectralError("mode k=" + std::to_string(k) + ": generalized problem has " +
                            std::to_string(out.negative_count) + " negative eigenvalues, conjugated operator has " +
                            std::to_string(out.conjugated_negative_count));
    }
    out.nearest_to_zero = *std::min_element(out.eigenvalues.begin(), out.eigenvalues.end(),
                                            [](double x, double y) { return std::abs(x) < std::abs(y); });
    return out;
}

/// Spectra for k = 0..k_max, one task per mode.
inline std::vector<ModeSpectrum> mode_spectra(const CrossSection& c, int k_max, const SpectralOptions& opt = {},
                                              std::size_t threads = thread_cap()) {
    if (k_max < 0) {
        throw DomainError("k_max must be nonnegative");
    }
    return parallel_map(
        static_cast<std::size_t>(k_max) + 1,
        [&](std::size_t k) { return mode_spectrum(c, static_cast<int>(k), opt); }, threads);
}

/// ||(-L_k) u - lambda u|| / ||u|| with the generalized discretization; the
/// grid is uniform in sigma-arclength so the plain 2-norm is the weighted one.
inline double eigenfunction_residual(const CrossSection& c, std::span<const double> u, double lambda, int k) {
    if (u.size() != c.size()) {
        throw DomainError("eigenfunction has " + std::to_string(u.size()) + " values for a curve of " +
                          std::to_string(c.size()) + " points");
    }
    double norm2 = 0.0;
    for (double v : u) {
        norm2 += v * v;
    }
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
        throw DomainError("eigenfunction residual needs a nonzero finite vector");
    }
    const auto bu = assemble_generalized(c, k).reduced().apply(u);
    double res2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = bu[i] - lambda * u[i];
        res2 += r * r;
    }
    return std::sqrt(res2 / norm2);
}

/// Eigenfunction u of -L_k with the given position in the sorted spectrum,
/// normalized to unit 2-norm with its largest-magnitude entry positive.
struct ModeEigenfunction {
    int k = 0;
    std::size_t position = 0;
    double eigenvalue = 0.0;
    std::vector<double> s; ///< sigma-arclength of each grid point
    std::vector<double> u;
};

inline ModeEigenfunction mode_eigenfunction(const CrossSection& c, int k, std::size_t position) {
    const auto sys = dense_eigensystem(assemble_generalized(c, k).reduced());
    if (position >= sys.eigenvalues.size()) {
        throw DomainError("eigenvalue position " + std::to_string(position) + " out of range");
    }
    ModeEigenfunction f;
    f.k = k;
    f.position = position;
    f.eigenvalue = sys.eigenvalues[position];
    const auto col = sys.eigenvectors.col(static_cast<Eigen::Index>(position));
    Eigen::Index peak = 0;
    col.cwiseAbs().maxCoeff(&peak);
    const double sign = col(peak) < 0.0 ? -1.0 : 1.0;
    const double h = c.sigma_length() / static_cast<double>(c.size());
    f.s.resize(c.size());
    f.u.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        f.s[i] = h * static_cast<double>(i);
        f.u[i] = sign * col(static_cast<Eigen::Index>(i));
    }
    return f;
}

// ---------------------------------------------------------------------------
// Fourier-Galerkin cross-check

/// Default Galerkin truncation: the product of two band-limited functions
/// with |j| <= M needs 4M < N samples to avoid aliasing the potential.
inline int default_galerkin_modes(std::size_t n) {
    return std::max(1, std::min(96, static_cast<int>(n / 4) - 1));
}

/// Eigenvalues of -d^2/ds^2 - P on the span of exp(2 pi i j s / l), |j| <= M,
/// with P sampled on a uniform periodic grid. The matrix entries are
/// (2 pi j / l)^2 delta_jm - P^_{j-m}, P^ the discrete Fourier coefficients.
inline std::vector<double> fourier_galerkin_eigenvalues(std::span<const double> potential, double length,
                                                        int modes) {
    const std::size_t n = potential.size();
    if (modes < 1 || static_cast<std::size_t>(4 * modes) >= n) {
        throw DomainError("Galerkin truncation M=" + std::to_string(modes) + " needs 1 <= M and 4M < N=" +
                          std::to_string(n));
    }
    const int span = 2 * modes;
    std::vector<std::complex<double>> coef(static_cast<std::size_t>(2 * span + 1));
    for (int d = -span; d <= span; ++d) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(d) * static_cast<double>(i) /
                                 static_cast<double>(n);
            acc += potential[i] * std::polar(1.0, angle);
        }
        coef[static_cast<std::size_t>(d + span)] = acc / static_cast<double>(n);
    }
    const Eigen::Index dim = 2 * modes + 1;
    Eigen::MatrixXcd h(dim, dim);
    for (Eigen::Index a = 0; a < dim; ++a) {
        for (Eigen::Index b = 0; b < dim; ++b) {
            const int d = static_cast<int>(a - b);
            h(a, b) = -coef[static_cast<std::size_t>(d + span)];
        }
        const double wave = 2.0 * std::numbers::pi * static_cast<double>(a - modes) / length;
        h(a, a) += wave * wave;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw SpectralError("Galerkin eigensolver did not converge");
    }
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

struct GalerkinSpectrum {
    int k = 0;
    int modes = 0;
    double tau = 0.0;
    std::vector<double> eigenvalues; ///< of -L_k^sigma
    std::size_t negative_count = 0;
};

/// Galerkin spectrum of -L_k^sigma. Without an explicit tau, the default is
/// 1e-8 times the largest diagonal magnitude of the Galerkin matrix.
inline GalerkinSpectrum fourier_galerkin_spectrum(const CrossSection& c, int k, std::optional<int> modes = {},
                                                  std::optional<double> tau = {}) {
    const auto p = mode_potential(c, k);
    GalerkinSpectrum g;
    g.k = k;
    g.modes = modes ? *modes : default_galerkin_modes(c.size());
    g.eigenvalues = fourier_galerkin_eigenvalues(p.values, c.sigma_length(), g.modes);
    if (tau) {
        g.tau = *tau;
    } else {
        const double wave = 2.0 * std::numbers::pi * g.modes / c.sigma_length();
        const double pmax = std::abs(*std::max_element(p.values.begin(), p.values.end(),
                                                       [](double x, double y) { return std::abs(x) < std::abs(y); }));
        g.tau = 1e-8 * (wave * wave + pmax);
    }
    g.negative_count = count_below(g.eigenvalues, g.tau);
    return g;
}

// ---------------------------------------------------------------------------
// Index aggregation

/// Smallest integer k with k >= sqrt(1 + r_max^2); modes from here on have
/// nonpositive potential and no negative eigenvalues.
inline int required_k_max(double r_max) {
    const double bound = 1.0 + r_max * r_max;
    int k = static_cast<int>(std::ceil(std::sqrt(bound)));
    while (k > 0 && static_cast<double>(k - 1) * (k - 1) >= bound) {
        --k;
    }
    while (static_cast<double>(k) * k < bound) {
        ++k;
    }
    return k;
}

struct IndexCounts {
    std::vector<std::size_t> counts; ///< i_k for k = 0, 1, ...
    int k_required = 0;
    long raw = 0;   ///< i_0 + 2 sum_{k>=1} i_k
    long index = 0; ///< raw - 4 (translations and dilation excluded)
};

/// Aggregates per-mode counts. Spectra must cover every k up to
/// required_k_max(r_max), each exactly once.
inline IndexCounts index_aggregate(std::span<const ModeSpectrum> spectra, double r_max) {
    IndexCounts out;
    out.k_required = required_k_max(r_max);
    int k_top = out.k_required;
    for (const auto& s : spectra) {
        if (s.k < 0) {
            throw DomainError("negative Fourier mode in spectra");
        }
        k_top = std::max(k_top, s.k);
    }
    std::vector<int> seen(static_cast<std::size_t>(k_top) + 1, 0);
    out.counts.assign(seen.size(), 0);
    for (const auto& s : spectra) {
        const auto k = static_cast<std::size_t>(s.k);
        if (seen[k]++) {
            throw CoverageError("mode k=" + std::to_string(s.k) + " supplied twice");
        }
        out.counts[k] = s.negative_count;
    }
    for (int k = 0; k <= out.k_required; ++k) {
        if (!seen[static_cast<std::size_t>(k)]) {
            throw CoverageError("missing spectrum for mode k=" + std::to_string(k) + "; modes up to k=" +
                                std::to_string(out.k_required) + " are required for r_max=" + std::to_string(r_max));
        }
    }
    for (std::size_t k = 0; k < out.counts.size(); ++k) {
        out.raw += static_cast<long>(k == 0 ? 1 : 2) * static_cast<long>(out.counts[k]);
    }
    out.index = out.raw - 4;
    return out;
}

} // namespace shrinker
