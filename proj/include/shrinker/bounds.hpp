#pragma once

#include "shrinker/conformal_geometry.hpp"
#include "shrinker/error.hpp"
#include "shrinker/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shrinker {

/// Integer bounds on i_k from the extrema of
///   q_k = (l / 2 pi) sigma^-1 sqrt(1 + (1 - k^2) / r^2)
/// over the grid points where the radicand is nonnegative.
struct ModeBounds {
    int k = 0;
    std::optional<long> lower; ///< absent when k^2 > 1 + r_min^2
    long upper = 0;            ///< 0 when k^2 >= 1 + r_max^2
    bool constant_integer = false; ///< q_k constant and integral; lower uses 2q - 1
    bool exceptional_flag = false; ///< constant_integer, or an extremum within the integer tolerance
    std::optional<double> q_min; ///< present when the radicand is nonnegative everywhere
    std::optional<double> q_max; ///< present when the radicand is positive somewhere
};

struct BoundTolerances {
    double integer = 1e-8; ///< distance to an integer treated as "is an integer"
    double constant = 1e-8; ///< range of q_k treated as "constant"
};

namespace detail {

inline bool near_integer(double x, double tol) {
    return std::abs(x - std::round(x)) < tol;
}

} // namespace detail

inline ModeBounds fine_mode_bounds(const CrossSection& c, int k, const BoundTolerances& tol = {}) {
    if (k < 0) {
        throw DomainError("Fourier mode must be nonnegative, got " + std::to_string(k));
    }
    const double scale = c.sigma_length() / (2.0 * std::numbers::pi);
    const double kk = static_cast<double>(k) * k;
    const auto g = geometric_scalars(c);

    double q_min = std::numeric_limits<double>::infinity();
    double q_max = -std::numeric_limits<double>::infinity();
    bool everywhere = true;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double r = c.point(i).r;
        const double radicand = 1.0 + (1.0 - kk) / (r * r);
        if (radicand < 0.0) {
            everywhere = false;
            continue;
        }
        const double q = scale / c.sigma_values()[i] * std::sqrt(radicand);
        q_min = std::min(q_min, q);
        q_max = std::max(q_max, q);
    }

    ModeBounds b;
    b.k = k;
    if (kk <= 1.0 + g.r_min * g.r_min && everywhere) {
        b.q_min = q_min;
        b.constant_integer = (q_max - q_min) < tol.constant && detail::near_integer(q_min, tol.integer);
        b.lower = b.constant_integer ? 2 * std::lround(q_min) - 1
                                     : 2 * static_cast<long>(std::floor(q_min)) + 1;
        if (detail::near_integer(q_min, tol.integer)) {
            b.exceptional_flag = true;
        }
    }
    if (kk < 1.0 + g.r_max * g.r_max) {
        b.q_max = q_max;
        b.upper = 2 * static_cast<long>(std::ceil(q_max)) - 1;
        if (detail::near_integer(q_max, tol.integer)) {
            b.exceptional_flag = true;
        }
    }
    b.exceptional_flag = b.exceptional_flag || b.constant_integer;
    return b;
}

inline std::vector<ModeBounds> fine_mode_bounds_up_to(const CrossSection& c, int k_max,
                                                      const BoundTolerances& tol = {}) {
    std::vector<ModeBounds> out;
    for (int k = 0; k <= k_max; ++k) {
        out.push_back(fine_mode_bounds(c, k, tol));
    }
    return out;
}

struct FineIndexBounds {
    long lower_raw = 0; ///< -4 + lower_0 + 2 sum lower_k, absent lowers counted as 0
    long lower = 0;     ///< max(lower_raw, 0): the index is a count
    long upper = 0;     ///< -4 + upper_0 + 2 sum upper_k
    bool clamped = false;
    std::optional<int> exceptional_k; ///< mode with constant-integer q, if any
};

/// Aggregates per-mode bounds with i = -4 + i_0 + 2 sum_{k>=1} i_k. The list
/// must contain k = 0, 1, ... up to the first mode whose upper bound vanishes
/// because k^2 >= 1 + r_max^2.
inline FineIndexBounds fine_index_bounds(std::span<const ModeBounds> per_mode) {
    std::vector<const ModeBounds*> by_k;
    for (const auto& b : per_mode) {
        if (b.k < 0) {
            throw DomainError("negative Fourier mode in bounds");
        }
        if (static_cast<std::size_t>(b.k) >= by_k.size()) {
            by_k.resize(static_cast<std::size_t>(b.k) + 1, nullptr);
        }
        if (by_k[static_cast<std::size_t>(b.k)]) {
            throw CoverageError("bounds for mode k=" + std::to_string(b.k) + " supplied twice");
        }
        by_k[static_cast<std::size_t>(b.k)] = &b;
    }

    FineIndexBounds out;
    long lower = -4;
    long upper = -4;
    bool vanished = false;
    for (std::size_t k = 0; k < by_k.size() && !vanished; ++k) {
        if (!by_k[k]) {
            throw CoverageError("missing bounds for mode k=" + std::to_string(k));
        }
        const ModeBounds& b = *by_k[k];
        const long weight = k == 0 ? 1 : 2;
        lower += weight * b.lower.value_or(0);
        upper += weight * b.upper;
        if (b.constant_integer && !out.exceptional_k) {
            out.exceptional_k = b.k;
        }
        vanished = !b.q_max.has_value();
    }
    if (!vanished) {
        throw CoverageError("mode bounds stop at k=" + std::to_string(by_k.size() - 1) +
                            " before reaching a mode with k^2 >= 1 + r_max^2");
    }
    out.lower_raw = lower;
    out.lower = std::max(lower, 0L);
    out.clamped = lower < 0;
    out.upper = upper;
    return out;
}

struct CoarseIndexBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// (3 sqrt(2e) / pi) F - 7  <  i  <  (2 / pi)(F / r_min) e^{R^2/4} (3 + 1/r_min + 2R) + 2R - 1.
inline CoarseIndexBounds coarse_index_bounds(double entropy, double r_min, double R) {
    if (!(entropy > 0.0) || !std::isfinite(entropy)) {
        throw DomainError("coarse bounds need a positive finite entropy");
    }
    if (!(r_min > 0.0) || !(r_min <= R) || !std::isfinite(R)) {
        throw DomainError("coarse bounds need 0 < r_min <= R < infinity");
    }
    const double pi = std::numbers::pi;
    CoarseIndexBounds b;
    b.lower = 3.0 * std::sqrt(2.0 * std::numbers::e) / pi * entropy - 7.0;
    b.upper = 2.0 / pi * (entropy / r_min) * std::exp(R * R / 4.0) * (3.0 + 1.0 / r_min + 2.0 * R) + 2.0 * R - 1.0;
    return b;
}

/// Entropy above which the coarse lower bound exceeds 3.
inline double coarse_lower_crossover_entropy() {
    return 10.0 * std::numbers::pi / (3.0 * std::sqrt(2.0 * std::numbers::e));
}

struct EntropyLowerBounds {
    double translation = 0.0; ///< pi sqrt(2) min r e^{-|x|^2/4}
    double dilation = 0.0;    ///< pi min r^2 e^{-|x|^2/4}
};

inline EntropyLowerBounds entropy_lower_bounds(const CrossSection& c) {
    double min_t = std::numeric_limits<double>::infinity();
    double min_d = std::numeric_limits<double>::infinity();
    for (const auto& p : c.points()) {
        const double g = std::exp(-(p.r * p.r + p.z * p.z) / 4.0);
        min_t = std::min(min_t, p.r * g);
        min_d = std::min(min_d, p.r * p.r * g);
    }
    return {std::numbers::pi * std::numbers::sqrt2 * min_t, std::numbers::pi * min_d};
}

struct ModeReport {
    int k = 0;
    std::size_t computed = 0;
    ModeBounds bounds;
};

struct IndexReport {
    std::vector<ModeReport> per_mode;
    long index_computed = 0;
    long index_raw = 0;
    FineIndexBounds fine;
    CoarseIndexBounds coarse;
    double entropy = 0.0;
    EntropyLowerBounds entropy_bounds;
    GeometricScalars geometry;
    std::size_t n = 0;
    std::vector<std::string> notes;
};

/// Cross-checks computed counts against the bounds. With `strict`, any
/// violation is a hard error: on a shrinker it falsifies either the spectra or
/// the bound evaluation. Without it (input not a critical point, where the
/// bounds need not hold) violations are recorded as notes.
inline IndexReport consistency_report(std::span<const ModeSpectrum> spectra, std::span<const ModeBounds> fine,
                                      const CoarseIndexBounds& coarse, double entropy,
                                      const EntropyLowerBounds& entropy_bounds, const GeometricScalars& geometry,
                                      bool strict = true) {
    const IndexCounts counts = index_aggregate(spectra, geometry.r_max);
    std::vector<std::string> violations;
    auto violate = [&](int mode, const std::string& what) {
        if (strict) {
            throw BoundViolation(mode, what);
        }
        violations.push_back("bound violated: " + what);
    };

    IndexReport rep;
    rep.fine = fine_index_bounds(fine);
    rep.coarse = coarse;
    rep.entropy = entropy;
    rep.entropy_bounds = entropy_bounds;
    rep.geometry = geometry;
    rep.index_computed = counts.index;
    rep.index_raw = counts.raw;
    rep.n = spectra.empty() ? 0 : spectra.front().n;

    for (std::size_t k = 0; k < counts.counts.size(); ++k) {
        const auto it = std::find_if(fine.begin(), fine.end(),
                                     [k](const ModeBounds& b) { return b.k == static_cast<int>(k); });
        ModeBounds b;
        if (it != fine.end()) {
            b = *it;
        } else if (k >= static_cast<std::size_t>(counts.k_required)) {
            b.k = static_cast<int>(k); // past vanishing: upper 0
        } else {
            throw CoverageError("missing bounds for mode k=" + std::to_string(k));
        }
        const auto i_k = static_cast<long>(counts.counts[k]);
        const std::string where = "mode k=" + std::to_string(k) + ": computed i_k=" + std::to_string(i_k);
        if (b.lower && i_k < *b.lower) {
            violate(static_cast<int>(k), where + " below the fine lower bound " + std::to_string(*b.lower));
        }
        if (i_k > b.upper) {
            violate(static_cast<int>(k), where + " above the fine upper bound " + std::to_string(b.upper));
        }
        rep.per_mode.push_back({static_cast<int>(k), counts.counts[k], b});
        if (b.exceptional_flag) {
            rep.notes.push_back("mode k=" + std::to_string(k) + ": q_k extremum within tolerance of an integer");
        }
    }

    if (!(rep.fine.lower_raw <= rep.index_computed && rep.index_computed <= rep.fine.upper)) {
        violate(-1, "index " + std::to_string(rep.index_computed) + " outside fine bounds [" +
                                     std::to_string(rep.fine.lower_raw) + ", " + std::to_string(rep.fine.upper) + "]");
    }
    const auto index = static_cast<double>(rep.index_computed);
    if (!(coarse.lower < index && index < coarse.upper)) {
        violate(-1, "index " + std::to_string(rep.index_computed) + " outside coarse bounds (" +
                                     std::to_string(coarse.lower) + ", " + std::to_string(coarse.upper) + ")");
    }
    if (entropy < entropy_bounds.translation || entropy < entropy_bounds.dilation) {
        violate(-1, "entropy " + std::to_string(entropy) + " below its lower bounds " +
                                     std::to_string(entropy_bounds.translation) + ", " +
                                     std::to_string(entropy_bounds.dilation));
    }
    if (rep.fine.clamped) {
        rep.notes.push_back("fine lower bound " + std::to_string(rep.fine.lower_raw) + " is vacuous; clamped to 0");
    }
    rep.notes.insert(rep.notes.end(), violations.begin(), violations.end());
    return rep;
}

/// Full report from a curve and its spectra. Spectra must cover k = 0 up to
/// required_k_max(r_max).
inline IndexReport index_report(const CrossSection& c, std::span<const ModeSpectrum> spectra,
                                const BoundTolerances& tol = {}) {
    const auto g = geometric_scalars(c);
    int k_top = required_k_max(g.r_max);
    for (const auto& s : spectra) {
        k_top = std::max(k_top, s.k);
    }
    const auto fine = fine_mode_bounds_up_to(c, k_top, tol);
    const auto coarse = coarse_index_bounds(c.sigma_length(), g.r_min, g.R);
    return consistency_report(spectra, fine, coarse, c.sigma_length(), entropy_lower_bounds(c), g);
}

struct BoundRefinement {
    std::size_t n_coarse = 0;
    std::size_t n_fine = 0;
    std::vector<ModeBounds> coarse; ///< bounds on the given grid
    std::vector<ModeBounds> fine;   ///< bounds on the doubled grid; these govern
    std::vector<int> changed_modes;
};

/// Re-evaluates the per-mode bounds on a grid of twice the size. Grid extrema
/// converge from inside, so the doubled grid is the governing value.
inline BoundRefinement refine_bounds(const CrossSection& c, int k_max, const BoundTolerances& tol = {}) {
    BoundRefinement out;
    out.n_coarse = c.size();
    out.n_fine = 2 * c.size();
    out.coarse = fine_mode_bounds_up_to(c, k_max, tol);
    out.fine = fine_mode_bounds_up_to(resample_sigma_arclength(c, out.n_fine), k_max, tol);
    for (std::size_t k = 0; k < out.coarse.size(); ++k) {
        if (out.coarse[k].lower != out.fine[k].lower || out.coarse[k].upper != out.fine[k].upper) {
            out.changed_modes.push_back(static_cast<int>(k));
        }
    }
    return out;
}

} // namespace shrinker
