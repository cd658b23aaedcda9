#pragma once

// JSON schemas for certificates, spectra and index reports. Each to_json has
// a matching from_json so outputs round-trip.

#include "shrinker/bounds.hpp"
#include "shrinker/shrinker_solver.hpp"
#include "shrinker/spectral.hpp"

#include <nlohmann/json.hpp>

#include <optional>

namespace shrinker {

namespace detail {

template <class T>
nlohmann::json optional_json(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> optional_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<T>();
}

/// NaN and infinity have no JSON literal; they are written as null.
inline nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline double double_or_nan(const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

} // namespace detail

inline void to_json(nlohmann::json& j, const CertificateCheck& c) {
    j = {{"name", c.name},
         {"passed", c.passed},
         {"value", detail::finite_or_null(c.value)},
         {"threshold", detail::finite_or_null(c.threshold)}};
}

inline void from_json(const nlohmann::json& j, CertificateCheck& c) {
    j.at("name").get_to(c.name);
    j.at("passed").get_to(c.passed);
    c.value = detail::double_or_nan(j.at("value"));
    c.threshold = detail::double_or_nan(j.at("threshold"));
}

inline void to_json(nlohmann::json& j, const Certificate& c) {
    j = {{"r0", c.r0},
         {"sigma_length", c.sigma_length},
         {"closure_gap", c.closure_gap},
         {"perp_defect", c.perp_defect},
         {"max_shrinker_residual", c.max_shrinker_residual},
         {"n_points", c.n_points},
         {"checks", c.checks},
         {"warnings", c.warnings},
         {"passed", c.passed()}};
}

inline void from_json(const nlohmann::json& j, Certificate& c) {
    j.at("r0").get_to(c.r0);
    j.at("sigma_length").get_to(c.sigma_length);
    j.at("closure_gap").get_to(c.closure_gap);
    j.at("perp_defect").get_to(c.perp_defect);
    j.at("max_shrinker_residual").get_to(c.max_shrinker_residual);
    j.at("n_points").get_to(c.n_points);
    j.at("checks").get_to(c.checks);
    j.at("warnings").get_to(c.warnings);
}

inline void to_json(nlohmann::json& j, const ModeSpectrum& s) {
    j = {{"k", s.k},
         {"n", s.n},
         {"tau", s.tau},
         {"eigenvalues", s.eigenvalues},
         {"negative_count", s.negative_count},
         {"conjugated_negative_count", s.conjugated_negative_count},
         {"nearest_to_zero", s.nearest_to_zero}};
}

inline void from_json(const nlohmann::json& j, ModeSpectrum& s) {
    j.at("k").get_to(s.k);
    j.at("n").get_to(s.n);
    j.at("tau").get_to(s.tau);
    j.at("eigenvalues").get_to(s.eigenvalues);
    j.at("negative_count").get_to(s.negative_count);
    j.at("conjugated_negative_count").get_to(s.conjugated_negative_count);
    s.nearest_to_zero = j.value("nearest_to_zero", 0.0);
}

inline void to_json(nlohmann::json& j, const ModeBounds& b) {
    j = {{"k", b.k},
         {"lower", detail::optional_json(b.lower)},
         {"upper", b.upper},
         {"constant_integer", b.constant_integer},
         {"exceptional_flag", b.exceptional_flag},
         {"q_min", detail::optional_json(b.q_min)},
         {"q_max", detail::optional_json(b.q_max)}};
}

inline void from_json(const nlohmann::json& j, ModeBounds& b) {
    j.at("k").get_to(b.k);
    b.lower = detail::optional_from<long>(j, "lower");
    j.at("upper").get_to(b.upper);
    j.at("constant_integer").get_to(b.constant_integer);
    j.at("exceptional_flag").get_to(b.exceptional_flag);
    b.q_min = detail::optional_from<double>(j, "q_min");
    b.q_max = detail::optional_from<double>(j, "q_max");
}

inline void to_json(nlohmann::json& j, const GeometricScalars& g) {
    j = {{"r_min", g.r_min}, {"r_max", g.r_max}, {"R", g.R}, {"sigma_min", g.sigma_min}, {"sigma_max", g.sigma_max}};
}

inline void from_json(const nlohmann::json& j, GeometricScalars& g) {
    j.at("r_min").get_to(g.r_min);
    j.at("r_max").get_to(g.r_max);
    j.at("R").get_to(g.R);
    j.at("sigma_min").get_to(g.sigma_min);
    j.at("sigma_max").get_to(g.sigma_max);
}

inline void to_json(nlohmann::json& j, const FineIndexBounds& f) {
    j = {{"lower_raw", f.lower_raw},
         {"lower", f.lower},
         {"upper", f.upper},
         {"clamped", f.clamped},
         {"exceptional_k", detail::optional_json(f.exceptional_k)}};
}

inline void from_json(const nlohmann::json& j, FineIndexBounds& f) {
    j.at("lower_raw").get_to(f.lower_raw);
    j.at("lower").get_to(f.lower);
    j.at("upper").get_to(f.upper);
    j.at("clamped").get_to(f.clamped);
    f.exceptional_k = detail::optional_from<int>(j, "exceptional_k");
}

inline void to_json(nlohmann::json& j, const IndexReport& r) {
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& m : r.per_mode) {
        modes.push_back({{"k", m.k}, {"computed", m.computed}, {"bounds", m.bounds}});
    }
    j = {{"n", r.n},
         {"per_mode", modes},
         {"index_computed", r.index_computed},
         {"index_raw", r.index_raw},
         {"index_lower_fine", r.fine.lower},
         {"index_upper_fine", r.fine.upper},
         {"fine", r.fine},
         {"index_lower_coarse", r.coarse.lower},
         {"index_upper_coarse", r.coarse.upper},
         {"entropy", r.entropy},
         {"entropy_lb_translation", r.entropy_bounds.translation},
         {"entropy_lb_dilation", r.entropy_bounds.dilation},
         {"geometry", r.geometry},
         {"notes", r.notes}};
}

inline void from_json(const nlohmann::json& j, IndexReport& r) {
    r.per_mode.clear();
    for (const auto& m : j.at("per_mode")) {
        r.per_mode.push_back({m.at("k").get<int>(), m.at("computed").get<std::size_t>(),
                              m.at("bounds").get<ModeBounds>()});
    }
    j.at("n").get_to(r.n);
    j.at("index_computed").get_to(r.index_computed);
    j.at("index_raw").get_to(r.index_raw);
    j.at("fine").get_to(r.fine);
    j.at("index_lower_coarse").get_to(r.coarse.lower);
    j.at("index_upper_coarse").get_to(r.coarse.upper);
    j.at("entropy").get_to(r.entropy);
    j.at("entropy_lb_translation").get_to(r.entropy_bounds.translation);
    j.at("entropy_lb_dilation").get_to(r.entropy_bounds.dilation);
    j.at("geometry").get_to(r.geometry);
    j.at("notes").get_to(r.notes);
}

} // namespace shrinker
