#pragma once

// CSV exchange format for curves and sampled functions: a header line
// (`r,z` for curves, `s,u` for eigenfunctions), then one comma-separated pair
// per row, LF line endings. Closed curves do not repeat the first point.

#include "shrinker/conformal_geometry.hpp"
#include "shrinker/error.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace shrinker::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline double parse_double(std::string_view field, std::size_t line_no) {
    field = trim(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw IoError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "' as a number");
    }
    return value;
}

/// Shortest decimal representation that round-trips.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace detail

/// Reads two-column CSV data with the given header. Blank lines are skipped.
inline std::vector<std::pair<double, double>> read_pairs(std::istream& in, std::string_view header) {
    std::string line;
    std::size_t line_no = 0;
    bool seen_header = false;
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = detail::trim(line);
        if (view.empty()) {
            continue;
        }
        if (!seen_header) {
            if (line_no == 1 && view.size() >= 3 && static_cast<unsigned char>(view[0]) == 0xEF) {
                view.remove_prefix(3); // UTF-8 byte-order mark
            }
            if (view != header) {
                throw IoError("expected header '" + std::string(header) + "', found '" + std::string(view) + "'");
            }
            seen_header = true;
            continue;
        }
        const auto comma = view.find(',');
        if (comma == std::string_view::npos || view.find(',', comma + 1) != std::string_view::npos) {
            throw IoError("line " + std::to_string(line_no) + ": expected exactly two fields");
        }
        rows.emplace_back(detail::parse_double(view.substr(0, comma), line_no),
                          detail::parse_double(view.substr(comma + 1), line_no));
    }
    if (!seen_header) {
        throw IoError("empty input: missing header '" + std::string(header) + "'");
    }
    return rows;
}

inline void write_pairs(std::ostream& out, std::string_view header, std::span<const double> first,
                        std::span<const double> second) {
    out << header << '\n';
    for (std::size_t i = 0; i < first.size(); ++i) {
        out << detail::format_double(first[i]) << ',' << detail::format_double(second[i]) << '\n';
    }
}

inline std::vector<HalfPlanePoint> read_curve_points(std::istream& in) {
    std::vector<HalfPlanePoint> pts;
    for (const auto& [r, z] : read_pairs(in, "r,z")) {
        pts.push_back({r, z});
    }
    return pts;
}

inline CrossSection read_curve(std::istream& in) {
    return CrossSection(read_curve_points(in));
}

inline CrossSection read_curve(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open curve file '" + path.string() + "'");
    }
    return read_curve(in);
}

inline void write_curve(std::ostream& out, const CrossSection& c) {
    write_pairs(out, "r,z", c.r_values(), c.z_values());
}

inline void write_curve(const std::filesystem::path& path, const CrossSection& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write curve file '" + path.string() + "'");
    }
    write_curve(out, c);
}

/// Sampled function on the uniform sigma-arclength grid.
struct GridFunction {
    std::vector<double> s;
    std::vector<double> u;
};

inline GridFunction read_grid_function(std::istream& in) {
    GridFunction f;
    for (const auto& [s, u] : read_pairs(in, "s,u")) {
        f.s.push_back(s);
        f.u.push_back(u);
    }
    return f;
}

inline GridFunction read_grid_function(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open eigenfunction file '" + path.string() + "'");
    }
    return read_grid_function(in);
}

inline void write_grid_function(std::ostream& out, const GridFunction& f) {
    write_pairs(out, "s,u", f.s, f.u);
}

} // namespace shrinker::io
