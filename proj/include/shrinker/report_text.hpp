#pragma once

// Plain-text renderings. The index table layout is fixed (see README) so that
// regression diffs stay meaningful.

#include "shrinker/bounds.hpp"
#include "shrinker/shrinker_solver.hpp"
#include "shrinker/spectral.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

namespace shrinker::text {

/// printf-style formatting into a std::string.
template <class... Args>
std::string format(const char* fmt, Args... args) {
    const int size = std::snprintf(nullptr, 0, fmt, args...);
    std::string out(static_cast<std::size_t>(size) + 1, '\0');
    std::snprintf(out.data(), out.size(), fmt, args...);
    out.pop_back();
    return out;
}

/// Drops trailing blanks before each newline.
inline std::string rstrip_lines(std::string s) {
    std::string out;
    out.reserve(s.size());
    for (char ch : s) {
        if (ch == '\n') {
            while (!out.empty() && out.back() == ' ') {
                out.pop_back();
            }
        }
        out += ch;
    }
    return out;
}

/// Fixed-point with the given decimals; never prints "-0.000...".
inline std::string fixed(double v, int decimals) {
    std::string s = format("%.*f", decimals, v);
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
        s.erase(0, 1);
    }
    return s;
}

inline std::string index_table(const IndexReport& r) {
    std::string out;
    out += format("index table  N=%zu  sigma_length=%s\n", r.n, fixed(r.entropy, 6).c_str());
    out += "   k   i_k  lower  upper      q_min      q_max  flag\n";
    for (const auto& m : r.per_mode) {
        const auto& b = m.bounds;
        out += format("%4d %5zu %6s %6ld %10s %10s  %s\n", m.k, m.computed,
                      b.lower ? std::to_string(*b.lower).c_str() : "-", b.upper,
                      b.q_min ? fixed(*b.q_min, 6).c_str() : "-", b.q_max ? fixed(*b.q_max, 6).c_str() : "-",
                      b.exceptional_flag ? "*" : "");
    }
    std::string sum;
    for (const auto& m : r.per_mode) {
        if (m.k >= 1) {
            sum += (sum.empty() ? "" : "+") + std::to_string(m.computed);
        }
    }
    const std::size_t i0 = r.per_mode.empty() ? 0 : r.per_mode.front().computed;
    out += format("index %ld = %zu + 2(%s) - 4\n", r.index_computed, i0, sum.c_str());
    out += format("fine    %ld <= index <= %ld", r.fine.lower_raw, r.fine.upper);
    out += r.fine.clamped ? format("  (lower clamped to %ld)\n", r.fine.lower) : std::string("\n");
    out += format("coarse  %s < index < %s\n", fixed(r.coarse.lower, 6).c_str(), fixed(r.coarse.upper, 6).c_str());
    out += format("entropy %s >= %s (translation), %s (dilation)\n", fixed(r.entropy, 6).c_str(),
                  fixed(r.entropy_bounds.translation, 6).c_str(), fixed(r.entropy_bounds.dilation, 6).c_str());
    for (const auto& note : r.notes) {
        out += "note: " + note + "\n";
    }
    return rstrip_lines(std::move(out));
}

inline std::string certificate_summary(const Certificate& c) {
    std::string out;
    out += format("r0            %.14f\n", c.r0);
    out += format("sigma_length  %.14f\n", c.sigma_length);
    out += format("n_points      %zu\n", c.n_points);
    for (const auto& check : c.checks) {
        out += format("%-28s %-4s %.3e < %.3e\n", check.name.c_str(), check.passed ? "PASS" : "FAIL", check.value,
                      check.threshold);
    }
    for (const auto& w : c.warnings) {
        out += "warning: " + w + "\n";
    }
    out += c.passed() ? "certificate PASS\n" : "certificate FAIL\n";
    return out;
}

inline std::string spectrum_summary(const ModeSpectrum& s, std::size_t shown = 6) {
    std::string out = format("k=%d  n=%zu  tau=%.3e  negative=%zu  conjugated=%zu  nearest_to_zero=%.6e\n", s.k, s.n,
                             s.tau, s.negative_count, s.conjugated_negative_count, s.nearest_to_zero);
    out += "  lowest:";
    for (std::size_t i = 0; i < std::min(shown, s.eigenvalues.size()); ++i) {
        out += " " + fixed(s.eigenvalues[i], 6);
    }
    out += "\n";
    return out;
}

} // namespace shrinker::text
