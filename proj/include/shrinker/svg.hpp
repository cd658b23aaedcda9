#pragma once

// Deterministic SVG plots of a cross-section in the (r, z) half-plane, with an
// optional quiver of a normal variation u n. Coordinates are printed with
// three decimals on a fixed 800x600 canvas.

#include "shrinker/conformal_geometry.hpp"
#include "shrinker/error.hpp"
#include "shrinker/report_text.hpp"
#include "shrinker/shrinker_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shrinker::svg {

struct FigureOptions {
    std::size_t every = 32;        ///< quiver stride in grid points
    double arrow_fraction = 0.1;   ///< longest arrow relative to the curve diameter
    double width = 800.0;
    double height = 600.0;
    double padding = 40.0;
};

struct Arrow {
    HalfPlanePoint tail;
    HalfPlanePoint tip;
};

/// Arrows u_i n_i at every `every`-th point, scaled so the longest is
/// arrow_fraction times the curve diameter. Empty when u vanishes there.
inline std::vector<Arrow> quiver_arrows(const CrossSection& c, std::span<const double> u, const FigureOptions& opt = {}) {
    if (u.size() != c.size()) {
        throw DomainError("normal variation has " + std::to_string(u.size()) + " values for a curve of " +
                          std::to_string(c.size()) + " points");
    }
    if (opt.every == 0) {
        throw DomainError("quiver stride must be positive");
    }
    double u_max = 0.0;
    for (std::size_t i = 0; i < c.size(); i += opt.every) {
        u_max = std::max(u_max, std::abs(u[i]));
    }
    std::vector<Arrow> arrows;
    if (!(u_max > 0.0) || !std::isfinite(u_max)) {
        return arrows;
    }
    const double scale = opt.arrow_fraction * curve_diameter(c) / u_max;
    for (std::size_t i = 0; i < c.size(); i += opt.every) {
        const auto& p = c.point(i);
        const double phi = c.tangent_angle()[i];
        const double len = scale * u[i];
        arrows.push_back({p, {p.r - len * std::sin(phi), p.z + len * std::cos(phi)}});
    }
    return arrows;
}

namespace detail {

struct Frame {
    double r_lo, z_hi, scale, pad;

    double x(double r) const { return pad + (r - r_lo) * scale; }
    double y(double z) const { return pad + (z_hi - z) * scale; }
};

inline std::string num(double v) { return text::fixed(v, 3); }

} // namespace detail

/// The curve, the rotation axis r = 0 and the line z = 0, plus the quiver
/// when u is given.
inline std::string render(const CrossSection& c, std::optional<std::span<const double>> u = std::nullopt,
                          const FigureOptions& opt = {}) {
    std::vector<Arrow> arrows;
    if (u) {
        arrows = quiver_arrows(c, *u, opt);
    }

    double r_lo = 0.0, r_hi = 0.0;
    double z_lo = std::numeric_limits<double>::infinity(), z_hi = -z_lo;
    auto include = [&](const HalfPlanePoint& p) {
        r_lo = std::min(r_lo, p.r);
        r_hi = std::max(r_hi, p.r);
        z_lo = std::min(z_lo, p.z);
        z_hi = std::max(z_hi, p.z);
    };
    for (const auto& p : c.points()) {
        include(p);
    }
    for (const auto& a : arrows) {
        include(a.tip);
    }
    const double inner_w = opt.width - 2.0 * opt.padding;
    const double inner_h = opt.height - 2.0 * opt.padding;
    const double scale = std::min(inner_w / (r_hi - r_lo), inner_h / (z_hi - z_lo));
    // centre the drawing vertically
    const double slack = (inner_h - (z_hi - z_lo) * scale) / 2.0;
    const detail::Frame f{r_lo, z_hi + slack / scale, scale, opt.padding};
    using detail::num;

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(opt.width) + "\" height=\"" + num(opt.height) +
           "\" viewBox=\"0 0 " + num(opt.width) + " " + num(opt.height) + "\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + num(opt.width) + "\" height=\"" + num(opt.height) +
           "\" fill=\"white\"/>\n";
    out += "<line x1=\"" + num(f.x(0.0)) + "\" y1=\"" + num(opt.padding / 2.0) + "\" x2=\"" + num(f.x(0.0)) +
           "\" y2=\"" + num(opt.height - opt.padding / 2.0) +
           "\" stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"8 4\"/>\n";
    out += "<line x1=\"" + num(f.x(0.0)) + "\" y1=\"" + num(f.y(0.0)) + "\" x2=\"" + num(opt.width - opt.padding / 2.0) +
           "\" y2=\"" + num(f.y(0.0)) + "\" stroke=\"#bbbbbb\" stroke-width=\"0.75\"/>\n";
    out += "<text x=\"" + num(f.x(0.0) + 6.0) + "\" y=\"" + num(opt.padding / 2.0 + 12.0) +
           "\" font-family=\"sans-serif\" font-size=\"14\">z</text>\n";
    out += "<text x=\"" + num(opt.width - opt.padding / 2.0 - 10.0) + "\" y=\"" + num(f.y(0.0) - 6.0) +
           "\" font-family=\"sans-serif\" font-size=\"14\">r</text>\n";

    out += "<polygon fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& p = c.point(i);
        out += (i ? " " : "") + num(f.x(p.r)) + "," + num(f.y(p.z));
    }
    out += "\"/>\n";

    if (!arrows.empty()) {
        out += "<g stroke=\"#b03020\" stroke-width=\"1.2\" fill=\"none\">\n";
        for (const auto& a : arrows) {
            const double x0 = f.x(a.tail.r), y0 = f.y(a.tail.z);
            const double x1 = f.x(a.tip.r), y1 = f.y(a.tip.z);
            out += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y1) +
                   "\"/>\n";
            const double len = std::hypot(x1 - x0, y1 - y0);
            if (len > 1.0) {
                const double head = std::min(8.0, 0.3 * len);
                const double ang = std::atan2(y1 - y0, x1 - x0);
                const double spread = 0.45;
                out += "<polyline points=\"" + num(x1 - head * std::cos(ang - spread)) + "," +
                       num(y1 - head * std::sin(ang - spread)) + " " + num(x1) + "," + num(y1) + " " +
                       num(x1 - head * std::cos(ang + spread)) + "," + num(y1 - head * std::sin(ang + spread)) +
                       "\"/>\n";
            }
        }
        out += "</g>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace shrinker::svg
