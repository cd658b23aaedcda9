#pragma once

#include "shrinker/bounds.hpp"
#include "shrinker/curve_io.hpp"
#include "shrinker/report_json.hpp"
#include "shrinker/report_text.hpp"
#include "shrinker/shrinker_solver.hpp"
#include "shrinker/spectral.hpp"
#include "shrinker/svg.hpp"

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace shrinker::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_check_failed = 1, ///< verification, certificate or bound failure
    exit_solver = 2,
    exit_io = 3, ///< I/O, format or usage error
};

inline constexpr std::size_t kMinPoints = kMinSpectralPoints;

struct Tolerances {
    double residual = 1e-4;         ///< shrinker-equation residual
    double closure = 1e-8;          ///< closure gap relative to the curve diameter
    double miss = 1e-10;            ///< shooting miss function
    double eigen = 1e-3;            ///< known eigenvalues and eigenfunction residuals
    double tau_relative = 1e-8;     ///< zero tolerance relative to ||A||
    double integer = 1e-8;          ///< bound integrality test
};

struct RunConfig {
    std::string command;
    std::size_t n_points = 2048;
    bool n_explicit = false;
    std::optional<int> k_max_override;
    std::optional<std::pair<double, double>> bracket;
    int crossings = 1;                ///< solve: z = 0 crossings per half orbit
    std::optional<std::string> input_curve;
    std::optional<std::string> output;
    std::string format = "text";
    std::optional<double> tau;
    Tolerances tolerances;
    std::optional<std::string> eigenfunction; ///< figure: CSV with header s,u
    std::string variation = "none";           ///< figure: none | sigma-inv | one
    std::size_t every = 32;
    std::optional<int> mode;          ///< spectrum: eigenfunction export mode
    std::size_t position = 0;         ///< spectrum: eigenfunction export position
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::io, what) {}
};

namespace detail {

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("config file '" + path + "': " + e.what());
    }
    try {
        if (j.contains("n")) cfg.n_points = j.at("n").get<std::size_t>(), cfg.n_explicit = true;
        if (j.contains("k_max")) cfg.k_max_override = j.at("k_max").get<int>();
        if (j.contains("bracket")) {
            const auto b = j.at("bracket").get<std::vector<double>>();
            if (b.size() != 2) throw IoError("config 'bracket' needs two numbers");
            cfg.bracket = std::pair{b[0], b[1]};
        }
        if (j.contains("crossings")) cfg.crossings = j.at("crossings").get<int>();
        if (j.contains("input")) cfg.input_curve = j.at("input").get<std::string>();
        if (j.contains("out")) cfg.output = j.at("out").get<std::string>();
        if (j.contains("format")) cfg.format = j.at("format").get<std::string>();
        if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
        if (j.contains("eigenfunction")) cfg.eigenfunction = j.at("eigenfunction").get<std::string>();
        if (j.contains("variation")) cfg.variation = j.at("variation").get<std::string>();
        if (j.contains("every")) cfg.every = j.at("every").get<std::size_t>();
        if (j.contains("tolerances")) {
            const auto& t = j.at("tolerances");
            auto& tol = cfg.tolerances;
            tol.residual = t.value("residual", tol.residual);
            tol.closure = t.value("closure", tol.closure);
            tol.miss = t.value("miss", tol.miss);
            tol.eigen = t.value("eigen", tol.eigen);
            tol.tau_relative = t.value("tau_relative", tol.tau_relative);
            tol.integer = t.value("integer", tol.integer);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("config file '" + path + "': " + e.what());
    }
}

} // namespace detail

/// Parses argv into a RunConfig: flags override the config file, which
/// overrides defaults. Returns an exit code instead when parsing ends the run
/// (help, usage error).
inline std::variant<RunConfig, int> parse_args(int argc, const char* const* argv, std::ostream& out,
                                               std::ostream& err) {
    CLI::App app{"Angenent torus spectra, index and bound checks", "shrinker-spectra"};
    RunConfig flags;
    std::vector<double> bracket;
    std::string config_path;
    int k_max = 0;
    double tau = 0.0;
    int mode = 0;

    app.add_option("command", flags.command, "solve | entropy | spectrum | index | bounds | verify | figure")
        ->required()
        ->check(CLI::IsMember({"solve", "entropy", "spectrum", "index", "bounds", "verify", "figure"}));
    app.add_option("--n", flags.n_points, "grid size (default 2048)");
    app.add_option("--k-max", k_max, "highest Fourier mode");
    app.add_option("--bracket", bracket, "shooting bracket LO HI for the starting radius")->expected(2);
    app.add_option("--crossings", flags.crossings, "solve: z = 0 crossings per half orbit")
        ->check(CLI::PositiveNumber);
    app.add_option("--input", flags.input_curve, "curve CSV (header r,z)");
    app.add_option("--out", flags.output, "output path prefix");
    app.add_option("--format", flags.format, "stdout format")->check(CLI::IsMember({"json", "csv", "text"}));
    app.add_option("--tau", tau, "absolute zero tolerance for negative counts")->check(CLI::NonNegativeNumber);
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--residual-tol", flags.tolerances.residual, "shrinker residual tolerance");
    app.add_option("--closure-tol", flags.tolerances.closure, "closure gap tolerance relative to the diameter");
    app.add_option("--miss-tol", flags.tolerances.miss, "shooting miss tolerance");
    app.add_option("--eigen-tol", flags.tolerances.eigen, "known-eigenvalue and residual tolerance");
    app.add_option("--tau-rel", flags.tolerances.tau_relative, "default zero tolerance relative to ||A||");
    app.add_option("--integer-tol", flags.tolerances.integer, "integrality tolerance for the bounds");
    app.add_option("--eigenfunction", flags.eigenfunction, "figure: normal variation CSV (header s,u)");
    app.add_option("--variation", flags.variation, "figure: built-in variation")
        ->check(CLI::IsMember({"none", "sigma-inv", "one"}));
    app.add_option("--every", flags.every, "figure: quiver stride")->check(CLI::PositiveNumber);
    app.add_option("--mode", mode, "spectrum: export the eigenfunction of this mode");
    app.add_option("--position", flags.position, "spectrum: position of the exported eigenvalue");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << R"({"error":{"kind":"usage","message":)" << nlohmann::json(e.what()).dump() << "}}\n";
        return exit_io;
    }

    RunConfig cfg;
    if (!config_path.empty()) {
        try {
            detail::apply_config_file(cfg, config_path);
        } catch (const Error& e) {
            err << R"({"error":{"kind":"io","message":)" << nlohmann::json(e.what()).dump() << "}}\n";
            return exit_io;
        }
    }
    auto given = [&](const char* name) { return app.count(name) > 0; };
    cfg.command = flags.command;
    if (given("--n")) cfg.n_points = flags.n_points, cfg.n_explicit = true;
    if (given("--k-max")) cfg.k_max_override = k_max;
    if (given("--bracket")) cfg.bracket = std::pair{bracket[0], bracket[1]};
    if (given("--crossings")) cfg.crossings = flags.crossings;
    if (given("--input")) cfg.input_curve = flags.input_curve;
    if (given("--out")) cfg.output = flags.output;
    if (given("--format")) cfg.format = flags.format;
    if (given("--tau")) cfg.tau = tau;
    if (given("--residual-tol")) cfg.tolerances.residual = flags.tolerances.residual;
    if (given("--closure-tol")) cfg.tolerances.closure = flags.tolerances.closure;
    if (given("--miss-tol")) cfg.tolerances.miss = flags.tolerances.miss;
    if (given("--eigen-tol")) cfg.tolerances.eigen = flags.tolerances.eigen;
    if (given("--tau-rel")) cfg.tolerances.tau_relative = flags.tolerances.tau_relative;
    if (given("--integer-tol")) cfg.tolerances.integer = flags.tolerances.integer;
    if (given("--eigenfunction")) cfg.eigenfunction = flags.eigenfunction;
    if (given("--variation")) cfg.variation = flags.variation;
    if (given("--every")) cfg.every = flags.every;
    if (given("--mode")) cfg.mode = mode;
    if (given("--position")) cfg.position = flags.position;
    return cfg;
}

/// Files produced by a command, written together once the command succeeds.
struct Outputs {
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    std::string stdout_text;
    std::vector<std::string> warnings;
    int exit_code = exit_ok;

    void file(const RunConfig& cfg, const std::string& suffix, std::string content) {
        if (cfg.output) {
            files.emplace_back(*cfg.output + suffix, std::move(content));
        }
    }
};

namespace detail {

inline void require_points(std::size_t n) {
    if (n < kMinPoints) {
        throw UsageError("--n " + std::to_string(n) + " is below the resolution floor of " +
                         std::to_string(kMinPoints) + " points");
    }
}

/// Reads the input curve. It is resampled to uniform sigma-arclength when it
/// is not already uniform, or when --n asks for a different size.
inline CrossSection load_curve(const RunConfig& cfg) {
    if (!cfg.input_curve) {
        throw UsageError("command '" + cfg.command + "' needs --input PATH");
    }
    CrossSection c = [&] {
        try {
            return io::read_curve(std::filesystem::path(*cfg.input_curve));
        } catch (const CurveError& e) {
            throw IoError("invalid curve in '" + *cfg.input_curve + "': " + e.what());
        }
    }();
    const std::size_t n = cfg.n_explicit ? cfg.n_points : c.size();
    require_points(n);
    if (n != c.size() || !c.is_uniform_sigma_arclength()) {
        c = resample_sigma_arclength(c, n);
        if (!c.is_uniform_sigma_arclength()) {
            throw CurveError("input curve is too rough to resample to uniform sigma-arclength (defect " +
                             text::format("%.3e", c.uniformity_defect()) + ")");
        }
    }
    return c;
}

inline SpectralOptions spectral_options(const RunConfig& cfg) {
    SpectralOptions opt;
    opt.tau = cfg.tau;
    opt.tau_relative = cfg.tolerances.tau_relative;
    return opt;
}

inline int k_max_for(const RunConfig& cfg, const CrossSection& c) {
    const int required = required_k_max(geometric_scalars(c).r_max);
    if (!cfg.k_max_override) {
        return required;
    }
    if (*cfg.k_max_override < 0) {
        throw UsageError("--k-max must be nonnegative");
    }
    return *cfg.k_max_override;
}

inline std::string csv_number(double v) { return io::detail::format_double(v); }

} // namespace detail

inline Outputs cmd_solve(const RunConfig& cfg) {
    detail::require_points(cfg.n_points);
    ShootSettings settings;
    settings.miss_tolerance = cfg.tolerances.miss;
    if (cfg.crossings < 1) {
        throw UsageError("--crossings must be positive");
    }
    settings.integration.crossings = cfg.crossings;
    if (cfg.bracket) {
        settings.bracket.lo = cfg.bracket->first;
        settings.bracket.hi = cfg.bracket->second;
    }
    const ShootingResult result = shoot_closed_torus(settings, cfg.n_points);
    CertifyOptions copt;
    copt.residual_tolerance = cfg.tolerances.residual;
    copt.closure_relative_tolerance = cfg.tolerances.closure;
    const Certificate cert = certify(result, copt);

    std::ostringstream curve_csv;
    io::write_curve(curve_csv, result.curve);
    const nlohmann::json j = cert;

    Outputs out;
    out.file(cfg, ".curve.csv", curve_csv.str());
    out.file(cfg, ".certificate.json", detail::dump(j));
    if (cfg.format == "json") {
        out.stdout_text = detail::dump(j);
    } else if (cfg.format == "csv") {
        out.stdout_text = curve_csv.str();
    } else {
        out.stdout_text = text::certificate_summary(cert);
    }
    out.warnings = cert.warnings;
    out.exit_code = cert.passed() ? exit_ok : exit_check_failed;
    return out;
}

inline Outputs cmd_entropy(const RunConfig& cfg) {
    const CrossSection c = detail::load_curve(cfg);
    const auto g = geometric_scalars(c);
    const auto eb = entropy_lower_bounds(c);
    const auto coarse = coarse_index_bounds(c.sigma_length(), g.r_min, g.R);
    const nlohmann::json j = {{"n", c.size()},
                              {"entropy", c.sigma_length()},
                              {"entropy_lb_translation", eb.translation},
                              {"entropy_lb_dilation", eb.dilation},
                              {"index_lower_coarse", coarse.lower},
                              {"index_upper_coarse", coarse.upper},
                              {"coarse_lower_crossover_entropy", coarse_lower_crossover_entropy()},
                              {"geometry", g}};
    Outputs out;
    out.file(cfg, ".entropy.json", detail::dump(j));
    if (cfg.format == "json") {
        out.stdout_text = detail::dump(j);
    } else if (cfg.format == "csv") {
        out.stdout_text = "quantity,value\n";
        for (const char* key : {"entropy", "entropy_lb_translation", "entropy_lb_dilation", "index_lower_coarse",
                                "index_upper_coarse", "coarse_lower_crossover_entropy"}) {
            out.stdout_text += std::string(key) + "," + detail::csv_number(j.at(key).get<double>()) + "\n";
        }
    } else {
        out.stdout_text = text::format("entropy %s  (N=%zu)\n", text::fixed(c.sigma_length(), 10).c_str(), c.size()) +
                          text::format("lower bounds: %s (translation), %s (dilation)\n",
                                       text::fixed(eb.translation, 6).c_str(), text::fixed(eb.dilation, 6).c_str()) +
                          text::format("coarse index bounds: %s < i < %s\n", text::fixed(coarse.lower, 6).c_str(),
                                       text::fixed(coarse.upper, 6).c_str());
    }
    if (c.sigma_length() < eb.translation || c.sigma_length() < eb.dilation) {
        out.exit_code = exit_check_failed;
    }
    return out;
}

inline Outputs cmd_spectrum(const RunConfig& cfg) {
    const CrossSection c = detail::load_curve(cfg);
    const int k_max = detail::k_max_for(cfg, c);
    const auto spectra = mode_spectra(c, k_max, detail::spectral_options(cfg));
    const nlohmann::json j = spectra;

    Outputs out;
    out.file(cfg, ".spectrum.json", detail::dump(j));
    if (cfg.mode) {
        const auto f = mode_eigenfunction(c, *cfg.mode, cfg.position);
        std::ostringstream csv;
        io::write_grid_function(csv, {f.s, f.u});
        out.file(cfg, ".eigenfunction.csv", csv.str());
    }
    if (cfg.format == "json") {
        out.stdout_text = detail::dump(j);
    } else if (cfg.format == "csv") {
        out.stdout_text = "k,position,eigenvalue\n";
        for (const auto& s : spectra) {
            for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
                out.stdout_text += std::to_string(s.k) + "," + std::to_string(i) + "," +
                                   detail::csv_number(s.eigenvalues[i]) + "\n";
            }
        }
    } else {
        for (const auto& s : spectra) {
            out.stdout_text += text::spectrum_summary(s);
        }
    }
    return out;
}

namespace detail {

inline std::string bounds_csv(const IndexReport& r) {
    std::string s = "k,i_k,lower,upper,q_min,q_max,exceptional_flag\n";
    for (const auto& m : r.per_mode) {
        const auto& b = m.bounds;
        s += std::to_string(m.k) + "," + std::to_string(m.computed) + "," +
             (b.lower ? std::to_string(*b.lower) : "") + "," + std::to_string(b.upper) + "," +
             (b.q_min ? csv_number(*b.q_min) : "") + "," + (b.q_max ? csv_number(*b.q_max) : "") + "," +
             (b.exceptional_flag ? "1" : "0") + "\n";
    }
    return s;
}

} // namespace detail

inline Outputs cmd_index(const RunConfig& cfg) {
    const CrossSection c = detail::load_curve(cfg);
    const auto g = geometric_scalars(c);
    const int k_max = detail::k_max_for(cfg, c);
    const auto spectra = mode_spectra(c, k_max, detail::spectral_options(cfg));
    const BoundTolerances btol{cfg.tolerances.integer, cfg.tolerances.integer};

    // The bounds only hold on a shrinker; elsewhere violations become notes.
    Outputs out;
    const double residual = max_shrinker_residual(c);
    const bool critical = residual <= cfg.tolerances.residual;
    std::string warning;
    if (!critical) {
        warning = "not a critical point: shrinker residual " + text::format("%.3e", residual) + " exceeds " +
                  text::format("%.3e", cfg.tolerances.residual);
        out.warnings.push_back(warning);
    }

    // Grid extrema converge from inside: the doubled grid governs.
    const auto refinement = refine_bounds(c, std::max(k_max, required_k_max(g.r_max)), btol);
    IndexReport report = consistency_report(spectra, refinement.fine, coarse_index_bounds(c.sigma_length(), g.r_min, g.R),
                                            c.sigma_length(), entropy_lower_bounds(c), g, critical);
    for (int k : refinement.changed_modes) {
        report.notes.push_back("mode k=" + std::to_string(k) + ": bounds changed between N=" +
                               std::to_string(refinement.n_coarse) + " and N=" + std::to_string(refinement.n_fine) +
                               "; the doubled grid is reported");
    }
    if (!critical) {
        report.notes.push_back(warning);
    }

    const nlohmann::json j = report;
    const std::string table = text::index_table(report);
    out.file(cfg, ".index.json", detail::dump(j));
    out.file(cfg, ".index.txt", table);
    if (cfg.format == "json") {
        out.stdout_text = detail::dump(j);
    } else if (cfg.format == "csv") {
        out.stdout_text = detail::bounds_csv(report);
    } else {
        out.stdout_text = table;
    }
    return out;
}

inline Outputs cmd_bounds(const RunConfig& cfg) {
    const CrossSection c = detail::load_curve(cfg);
    const auto g = geometric_scalars(c);
    const int k_max = std::max(detail::k_max_for(cfg, c), required_k_max(g.r_max));
    const BoundTolerances btol{cfg.tolerances.integer, cfg.tolerances.integer};
    const auto refinement = refine_bounds(c, k_max, btol);
    const auto fine = fine_index_bounds(refinement.fine);
    const auto coarse = coarse_index_bounds(c.sigma_length(), g.r_min, g.R);
    const auto eb = entropy_lower_bounds(c);

    const nlohmann::json j = {{"n", c.size()},
                              {"n_refined", refinement.n_fine},
                              {"per_mode", refinement.fine},
                              {"changed_on_refinement", refinement.changed_modes},
                              {"fine", fine},
                              {"index_lower_coarse", coarse.lower},
                              {"index_upper_coarse", coarse.upper},
                              {"entropy", c.sigma_length()},
                              {"entropy_lb_translation", eb.translation},
                              {"entropy_lb_dilation", eb.dilation},
                              {"geometry", g}};
    Outputs out;
    out.file(cfg, ".bounds.json", detail::dump(j));
    if (cfg.format == "json") {
        out.stdout_text = detail::dump(j);
    } else if (cfg.format == "csv") {
        out.stdout_text = "k,lower,upper,q_min,q_max,exceptional_flag\n";
        for (const auto& b : refinement.fine) {
            out.stdout_text += std::to_string(b.k) + "," + (b.lower ? std::to_string(*b.lower) : "") + "," +
                               std::to_string(b.upper) + "," + (b.q_min ? detail::csv_number(*b.q_min) : "") + "," +
                               (b.q_max ? detail::csv_number(*b.q_max) : "") + "," +
                               (b.exceptional_flag ? "1" : "0") + "\n";
        }
    } else {
        std::string& s = out.stdout_text;
        s = text::format("fine bounds  N=%zu (refined to %zu)\n", c.size(), refinement.n_fine);
        s += "   k  lower  upper      q_min      q_max  flag\n";
        for (const auto& b : refinement.fine) {
            s += text::format("%4d %6s %6ld %10s %10s  %s\n", b.k, b.lower ? std::to_string(*b.lower).c_str() : "-",
                              b.upper, b.q_min ? text::fixed(*b.q_min, 6).c_str() : "-",
                              b.q_max ? text::fixed(*b.q_max, 6).c_str() : "-", b.exceptional_flag ? "*" : "");
        }
        s += text::format("fine    %ld <= index <= %ld\n", fine.lower_raw, fine.upper);
        s += text::format("coarse  %s < index < %s\n", text::fixed(coarse.lower, 6).c_str(),
                          text::fixed(coarse.upper, 6).c_str());
        s += text::format("entropy %s >= %s (translation), %s (dilation)\n", text::fixed(c.sigma_length(), 6).c_str(),
                          text::fixed(eb.translation, 6).c_str(), text::fixed(eb.dilation, 6).c_str());
        s = text::rstrip_lines(std::move(s));
    }
    return out;
}

struct VerifyItem {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string note;
};

inline void to_json(nlohmann::json& j, const VerifyItem& v) {
    j = {{"name", v.name},
         {"passed", v.passed},
         {"value", shrinker::detail::finite_or_null(v.value)},
         {"threshold", shrinker::detail::finite_or_null(v.threshold)},
         {"note", v.note}};
}

/// Known-eigenvalue suite, eigenfunction residuals, entropy bounds and
/// inertia invariance. Failures are recorded, never thrown.
inline std::vector<VerifyItem> verify_items(const CrossSection& c, int k_max, const RunConfig& cfg) {
    std::vector<VerifyItem> items;
    const double tol = cfg.tolerances.eigen;
    const auto g = geometric_scalars(c);
    const int required = required_k_max(g.r_max);

    const auto np = normal_projections(c);
    std::vector<double> inv_sigma(c.size()), e_z_perp(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        inv_sigma[i] = 1.0 / c.sigma_values()[i];
        e_z_perp[i] = std::cos(c.tangent_angle()[i]);
    }

    struct Known {
        const char* name;
        int k;
        double lambda;
        const std::vector<double>* u;
    };
    const Known known[] = {{"k0_dilation", 0, -1.0, &np.h_sigma_restricted},
                           {"k0_vertical_translation", 0, -0.5, &e_z_perp},
                           {"k1_horizontal_translation", 1, -0.5, &np.e_r_perp},
                           {"k1_inverse_sigma", 1, -1.0, &inv_sigma}};
    std::vector<std::vector<double>> eigenvalues(2);
    for (int k = 0; k < 2; ++k) {
        eigenvalues[static_cast<std::size_t>(k)] = dense_eigenvalues(assemble_generalized(c, k).reduced());
    }
    for (const auto& kn : known) {
        double nearest = std::numeric_limits<double>::infinity();
        for (double v : eigenvalues[static_cast<std::size_t>(kn.k)]) {
            nearest = std::min(nearest, std::abs(v - kn.lambda));
        }
        items.push_back({std::string("eigenvalue_") + kn.name, nearest < tol, nearest, tol,
                         text::format("k=%d lambda=%g", kn.k, kn.lambda)});
    }
    for (const auto& kn : known) {
        const double res = eigenfunction_residual(c, *kn.u, kn.lambda, kn.k);
        items.push_back({std::string("residual_") + kn.name, res < tol, res, tol,
                         text::format("k=%d lambda=%g", kn.k, kn.lambda)});
    }

    const auto eb = entropy_lower_bounds(c);
    items.push_back({"entropy_lb_translation", c.sigma_length() >= eb.translation, eb.translation, c.sigma_length(),
                     "lower bound <= sigma_length"});
    items.push_back({"entropy_lb_dilation", c.sigma_length() >= eb.dilation, eb.dilation, c.sigma_length(),
                     "lower bound <= sigma_length"});

    for (int k = 0; k <= k_max; ++k) {
        const std::string name = "inertia_k" + std::to_string(k);
        if (k > required) {
            items.push_back({name, true, 0.0, 0.0, "vacuous: k^2 >= 1 + r_max^2, no negative eigenvalues"});
            continue;
        }
        const auto pair = assemble_generalized(c, k);
        const auto b = pair.reduced();
        const double tau = cfg.tau ? *cfg.tau : default_tau(pair.a, cfg.tolerances.tau_relative);
        const auto gen = inertia_negative_count(b, tau);
        const auto conj = inertia_negative_count(pair.a, tau);
        const std::size_t dense = count_below(dense_eigenvalues(b), tau);
        const bool ok = gen && conj && *gen == *conj && *gen == dense;
        items.push_back({name, ok, static_cast<double>(dense), static_cast<double>(conj.value_or(0)),
                         text::format("generalized %zu, conjugated %s, dense %zu", gen.value_or(0),
                                      conj ? std::to_string(*conj).c_str() : "breakdown", dense)});
    }
    return items;
}

inline Outputs cmd_verify(const RunConfig& cfg) {
    const CrossSection c = detail::load_curve(cfg);
    const int k_max = detail::k_max_for(cfg, c);
    const auto items = verify_items(c, k_max, cfg);
    bool all = true;
    for (const auto& it : items) {
        all = all && it.passed;
    }
    const nlohmann::json j = {{"n", c.size()}, {"items", items}, {"passed", all}};

    Outputs out;
    out.file(cfg, ".verify.json", detail::dump(j));
    if (cfg.format == "json") {
        out.stdout_text = detail::dump(j);
    } else if (cfg.format == "csv") {
        out.stdout_text = "name,passed,value,threshold\n";
        for (const auto& it : items) {
            out.stdout_text += it.name + "," + (it.passed ? "1" : "0") + "," + detail::csv_number(it.value) + "," +
                               detail::csv_number(it.threshold) + "\n";
        }
    } else {
        for (const auto& it : items) {
            out.stdout_text += text::format("%-4s %-38s %.3e  %s\n", it.passed ? "PASS" : "FAIL", it.name.c_str(),
                                            it.value, it.note.c_str());
        }
        out.stdout_text += all ? "verify PASS\n" : "verify FAIL\n";
    }
    out.exit_code = all ? exit_ok : exit_check_failed;
    return out;
}

inline Outputs cmd_figure(const RunConfig& cfg) {
    const CrossSection c = detail::load_curve(cfg);
    std::optional<std::vector<double>> u;
    if (cfg.eigenfunction) {
        u = io::read_grid_function(std::filesystem::path(*cfg.eigenfunction)).u;
        if (u->size() != c.size()) {
            throw IoError("eigenfunction has " + std::to_string(u->size()) + " values for a curve of " +
                          std::to_string(c.size()) + " points");
        }
    } else if (cfg.variation == "sigma-inv") {
        u.emplace(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            (*u)[i] = 1.0 / c.sigma_values()[i];
        }
    } else if (cfg.variation == "one") {
        u.emplace(c.size(), 1.0);
    }
    svg::FigureOptions opt;
    opt.every = cfg.every;

    Outputs out;
    const std::string curve_svg = svg::render(c, std::nullopt, opt);
    out.file(cfg, ".curve.svg", curve_svg);
    std::string quiver_svg;
    if (u) {
        quiver_svg = svg::render(c, std::span<const double>(*u), opt);
        out.file(cfg, ".quiver.svg", quiver_svg);
    }
    if (!cfg.output) {
        out.stdout_text = u ? quiver_svg : curve_svg;
    }
    return out;
}

inline int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::solver: return exit_solver;
    case ErrorKind::spectral:
    case ErrorKind::coverage:
    case ErrorKind::bound_violation: return exit_check_failed;
    case ErrorKind::domain:
    case ErrorKind::invalid_curve:
    case ErrorKind::io: return exit_io;
    }
    return exit_io;
}

inline std::string error_json(const Error& e) {
    nlohmann::json j = {{"kind", dynamic_cast<const UsageError*>(&e) ? "usage" : to_string(e.kind())},
                        {"message", e.what()}};
    if (const auto* s = dynamic_cast<const SolverError*>(&e)) {
        j["reason"] = to_string(s->reason());
    }
    if (const auto* b = dynamic_cast<const BoundViolation*>(&e)) {
        j["mode"] = b->mode();
    }
    return nlohmann::json{{"error", j}}.dump() + "\n";
}

inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        Outputs result;
        if (cfg.command == "solve") result = cmd_solve(cfg);
        else if (cfg.command == "entropy") result = cmd_entropy(cfg);
        else if (cfg.command == "spectrum") result = cmd_spectrum(cfg);
        else if (cfg.command == "index") result = cmd_index(cfg);
        else if (cfg.command == "bounds") result = cmd_bounds(cfg);
        else if (cfg.command == "verify") result = cmd_verify(cfg);
        else if (cfg.command == "figure") result = cmd_figure(cfg);
        else throw UsageError("unknown command '" + cfg.command + "'");

        for (const auto& [path, content] : result.files) {
            std::ofstream f(path, std::ios::binary);
            if (!f || !(f << content) || !f.flush()) {
                throw IoError("cannot write '" + path.string() + "'");
            }
        }
        for (const auto& w : result.warnings) {
            err << "warning: " << w << "\n";
        }
        out << result.stdout_text;
        return result.exit_code;
    } catch (const Error& e) {
        err << error_json(e);
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << R"({"error":{"kind":"internal","message":)" << nlohmann::json(e.what()).dump() << "}}\n";
        return exit_io;
    }
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    auto parsed = parse_args(argc, argv, out, err);
    if (const int* code = std::get_if<int>(&parsed)) {
        return *code;
    }
    return run(std::get<RunConfig>(parsed), out, err);
}

} // namespace shrinker::cli
