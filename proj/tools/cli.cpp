#include "sdwave/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "sdwave/errors.hpp"
#include "sdwave/integrators.hpp"

namespace sdwave::cli {

namespace {

using nlohmann::json;

enum class Kind { real, integer, unsigned64, text };

struct Key {
    const char* name;
    Kind kind;
    const char* help;
};

// Every key is accepted in the config file, as --flag (underscores become
// dashes) and as SDWAVE_<NAME>.
const std::vector<Key>& keys() {
    static const std::vector<Key> k{
        {"alpha", Kind::real, "damping coefficient (> 0)"},
        {"modes", Kind::integer, "Galerkin dimension N"},
        {"steps", Kind::integer, "time steps for simulate"},
        {"t_end", Kind::real, "final time T"},
        {"samples", Kind::integer, "Monte-Carlo samples"},
        {"seed", Kind::unsigned64, "master seed"},
        {"noise", Kind::text, "white | fractional | none"},
        {"exponent", Kind::real, "s in Q = A^-s for fractional noise"},
        {"regularity_gamma", Kind::real, "noise regularity gamma used for predicted rates"},
        {"scheme", Kind::text, "aee | lie | both"},
        {"axis", Kind::text, "spatial | temporal"},
        {"out", Kind::text, "output directory"},
        {"threads", Kind::integer, "worker threads for studies"},
        {"nonlinearity", Kind::text, "rational | none"},
        {"quadrature_points", Kind::integer, "collocation points (0: 4N+1)"},
        {"initial", Kind::text, "zero | e1"},
        {"grid_points", Kind::integer, "physical-grid samples written by simulate"},
        {"level_min", Kind::integer, "first level exponent"},
        {"level_max", Kind::integer, "last level exponent"},
        {"ref_level", Kind::integer, "reference exponent (k_ref = 2^-i or N_ref = 2^j)"},
        {"ref_time_level", Kind::integer, "spatial studies: shared k = 2^-i"},
    };
    return k;
}

const Key* find_key(const std::string& name) {
    for (const auto& k : keys()) {
        if (name == k.name) {
            return &k;
        }
    }
    return nullptr;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T value{};
    in >> value;
    if (in.fail() || !(in >> std::ws).eof()) {
        throw ConfigError(key, "cannot parse '" + text + "' as a number");
    }
    return value;
}

void assign(RunConfig& c, const std::string& key, const std::string& text) {
    const Key* k = find_key(key);
    if (!k) {
        throw ConfigError(key, "unknown key");
    }
    auto real = [&] { return parse_number<double>(key, text); };
    auto integer = [&] { return parse_number<int>(key, text); };
    if (key == "alpha") c.alpha = real();
    else if (key == "modes") c.modes = integer();
    else if (key == "steps") c.steps = integer();
    else if (key == "t_end") c.t_end = real();
    else if (key == "samples") c.samples = integer();
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, text);
    else if (key == "noise") c.noise = text;
    else if (key == "exponent") c.exponent = real();
    else if (key == "regularity_gamma") c.regularity_gamma = real();
    else if (key == "scheme") c.scheme = text;
    else if (key == "axis") c.axis = text;
    else if (key == "out") c.out = text;
    else if (key == "threads") c.threads = integer();
    else if (key == "nonlinearity") c.nonlinearity = text;
    else if (key == "quadrature_points") c.quadrature_points = integer();
    else if (key == "initial") c.initial = text;
    else if (key == "grid_points") c.grid_points = integer();
    else if (key == "level_min") c.level_min = integer();
    else if (key == "level_max") c.level_max = integer();
    else if (key == "ref_level") c.ref_level = integer();
    else if (key == "ref_time_level") c.ref_time_level = integer();
}

std::string json_value_text(const std::string& key, const json& v) {
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_number_unsigned()) {
        return std::to_string(v.get<std::uint64_t>());
    }
    if (v.is_number_integer()) {
        return std::to_string(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
        return fmt::format("{:.17g}", v.get<double>());
    }
    throw ConfigError(key, "config values must be numbers or strings");
}

void require_one_of(const std::string& key, const std::string& value, std::initializer_list<const char*> options) {
    for (const char* o : options) {
        if (value == o) {
            return;
        }
    }
    std::string list;
    for (const char* o : options) {
        list += list.empty() ? "" : ", ";
        list += o;
    }
    throw ConfigError(key, "'" + value + "' is not one of " + list);
}

}  // namespace

RunConfig resolve_config(const std::string& command, const std::map<std::string, std::string>& overrides,
                         const std::string& config_file_json) {
    RunConfig c;
    c.command = command;
    std::set<std::string> given;
    if (!config_file_json.empty()) {
        json doc;
        try {
            doc = json::parse(config_file_json);
        } catch (const json::parse_error& e) {
            throw ConfigError("config", std::string("invalid JSON: ") + e.what());
        }
        if (!doc.is_object()) {
            throw ConfigError("config", "the config file must hold a flat JSON object");
        }
        for (const auto& [key, value] : doc.items()) {
            assign(c, key, json_value_text(key, value));
            given.insert(key);
        }
    }
    for (const auto& [key, value] : overrides) {
        assign(c, key, value);
        given.insert(key);
    }

    require_one_of("noise", c.noise, {"white", "fractional", "none"});
    require_one_of("axis", c.axis, {"spatial", "temporal"});
    require_one_of("scheme", c.scheme, {"auto", "aee", "lie", "both"});
    require_one_of("nonlinearity", c.nonlinearity, {"rational", "none"});
    require_one_of("initial", c.initial, {"zero", "e1"});

    if (c.scheme == "auto") {
        c.scheme = (command == "study" && c.axis == "temporal") ? "both" : "aee";
    }
    if (!given.count("regularity_gamma")) {
        c.regularity_gamma = 0.0;
        c.regularity_gamma = c.noise_spec().regularity_gamma;
    }
    const bool spatial = c.axis == "spatial";
    if (c.level_min == 0) c.level_min = spatial ? 1 : 3;
    if (c.level_max == 0) c.level_max = spatial ? 5 : 8;
    if (c.ref_level == 0) c.ref_level = spatial ? 8 : 12;
    if (c.ref_time_level == 0) c.ref_time_level = 14;

    if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) throw ConfigError("alpha", "must be a positive finite number");
    if (c.modes < 1) throw ConfigError("modes", "must be >= 1");
    if (c.steps < 1) throw ConfigError("steps", "must be >= 1");
    if (!(c.t_end > 0.0) || !std::isfinite(c.t_end)) throw ConfigError("t_end", "must be positive");
    if (c.samples < 2) throw ConfigError("samples", "must be >= 2");
    if (c.threads < 1) throw ConfigError("threads", "must be >= 1");
    if (c.exponent < 0.0) throw ConfigError("exponent", "must be >= 0");
    if (c.quadrature_points < 0) throw ConfigError("quadrature_points", "must be >= 0");
    if (c.grid_points < 0 || c.grid_points == 1) throw ConfigError("grid_points", "must be 0 or >= 2");
    if (c.level_min < 0 || c.level_max < c.level_min) throw ConfigError("level_max", "must be >= level_min");
    if (c.ref_level > 30 || c.ref_time_level > 30 || c.level_max > 30) {
        throw ConfigError("ref_level", "exponents above 30 are not supported");
    }
    if ((command == "simulate" || command == "validate") && c.scheme == "both") {
        throw ConfigError("scheme", "simulate runs a single scheme");
    }
    if (c.out.empty()) throw ConfigError("out", "must not be empty");
    return c;
}

NoiseSpec RunConfig::noise_spec() const {
    NoiseSpec s = noise == "white" ? NoiseSpec::white()
                  : noise == "fractional" ? NoiseSpec::fractional(exponent)
                                          : NoiseSpec::none();
    if (regularity_gamma != 0.0) {
        s.regularity_gamma = regularity_gamma;
    }
    return s;
}

ProblemConfig RunConfig::problem() const {
    ProblemConfig p;
    p.alpha = alpha;
    p.n_modes = modes;
    p.t_end = t_end;
    p.noise = noise_spec();
    p.nonlinearity = nonlinearity == "rational" ? rational_nonlinearity(quadrature_points) : zero_nonlinearity();
    p.nonlinearity.quadrature_points = quadrature_points;
    return p;
}

std::vector<Scheme> RunConfig::schemes() const {
    if (scheme == "both") {
        return {Scheme::aee, Scheme::lie};
    }
    return {scheme == "lie" ? Scheme::lie : Scheme::aee};
}

StudySpec RunConfig::study() const {
    StudySpec s;
    s.axis = axis == "spatial" ? Axis::spatial : Axis::temporal;
    s.levels.clear();
    for (int i = level_min; i <= level_max; ++i) {
        s.levels.push_back(s.axis == Axis::spatial ? std::ldexp(1.0, i) : std::ldexp(1.0, -i));
    }
    if (s.axis == Axis::spatial) {
        s.reference_modes = 1 << ref_level;
        s.reference_step = std::ldexp(1.0, -ref_time_level);
    } else {
        s.reference_step = std::ldexp(1.0, -ref_level);
    }
    s.samples = samples;
    s.seed = seed;
    s.schemes = schemes();
    s.threads = threads;
    return s;
}

std::string RunConfig::to_json() const {
    json j;
    j["alpha"] = alpha;
    j["modes"] = modes;
    j["steps"] = steps;
    j["t_end"] = t_end;
    j["samples"] = samples;
    j["seed"] = seed;
    j["noise"] = noise;
    j["exponent"] = exponent;
    j["regularity_gamma"] = regularity_gamma;
    j["scheme"] = scheme;
    j["axis"] = axis;
    j["out"] = out;
    j["threads"] = threads;
    j["nonlinearity"] = nonlinearity;
    j["quadrature_points"] = quadrature_points;
    j["initial"] = initial;
    j["grid_points"] = grid_points;
    j["level_min"] = level_min;
    j["level_max"] = level_max;
    j["ref_level"] = ref_level;
    j["ref_time_level"] = ref_time_level;
    return j.dump(2) + "\n";
}

bool ValidationReport::all_pass() const noexcept { return first_failure() == nullptr; }

const ValidationRow* ValidationReport::first_failure() const noexcept {
    for (const auto& r : rows) {
        if (!r.pass) {
            return &r;
        }
    }
    return nullptr;
}

namespace {

double max_abs_diff(const SemigroupMatrix& a, const SemigroupMatrix& b) {
    return std::max({std::abs(a.s1 - b.s1), std::abs(a.s2 - b.s2), std::abs(a.s3 - b.s3), std::abs(a.s4 - b.s4)});
}

}  // namespace

ValidationReport run_validation(const ValidationOptions& options) {
    ValidationReport report;
    auto covariance = options.covariance ? options.covariance : increment_covariance;
    const std::vector<double> times{0.1, 0.25, 0.5};
    auto add = [&](std::string check, const ModeData& m, double t, std::string entry, double error, double tol) {
        report.rows.push_back({std::move(check), m.j, m.alpha, t, std::move(entry), error, tol, error <= tol});
    };

    for (double alpha : options.alphas) {
        for (int j : options.modes) {
            const ModeData m = dirichlet_mode(j, alpha, options.noise.eigenvalue(eigenvalue(j)));

            add("semigroup_identity", m, 0.0, "S(0)", max_abs_diff(semigroup_coeffs(m, 0.0), SemigroupMatrix{}), 1e-10);
            double comp = 0.0, det = 0.0, route = 0.0;
            for (double s : times) {
                for (double t : times) {
                    comp = std::max(comp, max_abs_diff(semigroup_coeffs(m, s + t),
                                                       semigroup_coeffs(m, s) * semigroup_coeffs(m, t)));
                }
                const SemigroupMatrix st = semigroup_coeffs(m, s);
                det = std::max(det, std::abs(st.det() - std::exp(-alpha * m.lambda * s)));
                const ComplexSemigroup c = semigroup_coeffs_complex(m, s);
                const double scale =
                    std::max(1.0, std::sqrt(st.s1 * st.s1 + st.s2 * st.s2 + st.s3 * st.s3 + st.s4 * st.s4));
                route = std::max(route, std::max({std::abs(c.s1.real() - st.s1), std::abs(c.s2.real() - st.s2),
                                                  std::abs(c.s3.real() - st.s3), std::abs(c.s4.real() - st.s4)}) /
                                            scale);
            }
            add("semigroup_composition", m, 0.0, "S(s+t)-S(s)S(t)", comp, 1e-10);
            add("semigroup_determinant", m, 0.0, "det-exp(-alpha*lambda*t)", det, 1e-10);
            add("semigroup_complex_route", m, 0.0, "real form vs expansion", route, 1e-10);

            for (double k : options.steps) {
                const IncrementCovariance closed = covariance(m, k);
                const IncrementCovariance oracle = covariance_quadrature_oracle(m, k);
                const double scale = m.gamma * k;
                const std::array<std::pair<const char*, double>, 6> diffs{{
                    {"var_eta", closed.var_eta - oracle.var_eta},
                    {"var_etahat", closed.var_etahat - oracle.var_etahat},
                    {"cov_eta_etahat", closed.cov_eta_etahat - oracle.cov_eta_etahat},
                    {"cov_eta_dw", closed.cov_eta_dw - oracle.cov_eta_dw},
                    {"cov_etahat_dw", closed.cov_etahat_dw - oracle.cov_etahat_dw},
                    {"var_dw", closed.var_dw - oracle.var_dw},
                }};
                const char* worst = "var_eta";
                double worst_err = 0.0;
                for (const auto& [name, d] : diffs) {
                    const double e = scale > 0.0 ? std::abs(d) / scale : std::abs(d);
                    if (e > worst_err || (std::isnan(e) && !std::isnan(worst_err))) {
                        worst_err = e;
                        worst = name;
                    }
                }
                add("covariance_vs_quadrature", m, k, worst, worst_err, scale > 0.0 ? 1e-9 : 0.0);

                double recon = 0.0;
                std::string entry = "L*L^T-C";
                try {
                    const auto c = closed.matrix();
                    const CholeskyFactor f = cholesky(c, 3);
                    for (int r = 0; r < 3; ++r) {
                        for (int q = 0; q < 3; ++q) {
                            double v = 0.0;
                            for (int p = 0; p < 3; ++p) {
                                v += f.lower[r][p] * f.lower[q][p];
                            }
                            recon = std::max(recon, std::abs(v - c[r][q]));
                        }
                    }
                } catch (const NotPositiveSemidefinite&) {
                    recon = std::numeric_limits<double>::infinity();
                    entry = "not positive semidefinite";
                }
                add("cholesky_reconstruction", m, k, entry, recon, 1e-12);
            }
        }
    }
    return report;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config", "cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text) || !f.flush()) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

std::filesystem::path prepare_out(const RunConfig& c) {
    const std::filesystem::path dir(c.out);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    write_text(dir / "config.json", c.to_json());
    return dir;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const ProblemConfig problem = c.problem();
    problem.validate();
    const StepPlan plan = make_plan(c.t_end, c.steps, c.scheme == "lie" ? Scheme::lie : Scheme::aee);
    IntegrateOptions options;
    State init(static_cast<std::size_t>(c.modes));
    if (c.initial == "e1") {
        init.u[0] = 1.0;
    }
    options.initial = init;
    const State final_state = integrate(problem, plan, 0, c.seed, options);

    const auto dir = prepare_out(c);
    std::string csv = "j,u,v\n";
    for (std::size_t j = 0; j < final_state.size(); ++j) {
        csv += fmt::format("{},{:.17g},{:.17g}\n", j + 1, final_state.u[j], final_state.v[j]);
    }
    write_text(dir / "state.csv", csv);
    if (c.grid_points > 0) {
        std::string field = "x,u,v\n";
        for (int i = 0; i < c.grid_points; ++i) {
            const double x = static_cast<double>(i) / (c.grid_points - 1);
            double u = 0.0, v = 0.0;
            for (std::size_t j = 0; j < final_state.size(); ++j) {
                const double phi = eigenfunction_value(static_cast<int>(j + 1), x);
                u += final_state.u[j] * phi;
                v += final_state.v[j] * phi;
            }
            field += fmt::format("{:.17g},{:.17g},{:.17g}\n", x, u, v);
        }
        write_text(dir / "field.csv", field);
    }
    out << fmt::format("simulate: {} steps of {} with N = {}, wrote {}\n", c.steps, c.scheme, c.modes,
                       (dir / "state.csv").string());
    return exit_ok;
}

std::string fits_csv(const StudyResult& r) {
    std::string csv = "scheme,field,slope,intercept,r_squared\n";
    for (const auto& f : r.fits) {
        csv += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", to_string(f.scheme), to_string(f.field), f.fit.slope,
                           f.fit.intercept, f.fit.r_squared);
    }
    return csv;
}

void write_study(const RunConfig& c, const StudyResult& result, const std::filesystem::path& dir) {
    const NoiseSpec noise = c.noise_spec();
    const Axis axis = c.axis == "spatial" ? Axis::spatial : Axis::temporal;
    std::vector<double> guides;
    for (Field f : {Field::displacement, Field::velocity}) {
        const double p = predicted_slope(axis, f, noise.regularity_gamma);
        if (std::find(guides.begin(), guides.end(), p) == guides.end()) {
            guides.push_back(p);
        }
    }
    emit_results(result.records, result.fits, dir, guides);
    write_text(dir / "fits.csv", fits_csv(result));
}

int cmd_study(const RunConfig& c, std::ostream& out, std::ostream& err) {
    if (c.noise == "fractional" || c.noise == "white") {
        if (!c.noise_spec().regularity_consistent()) {
            err << "warning: regularity_gamma " << c.regularity_gamma << " is not below exponent + 1/2\n";
        }
    }
    const ProblemConfig problem = c.problem();
    const StudySpec spec = c.study();
    spec.validate(problem);
    const auto dir = prepare_out(c);
    try {
        const StudyResult result = run_study(spec, problem);
        write_study(c, result, dir);
        out << fmt::format("study ({} axis, {} samples) wrote {}\n", c.axis, c.samples,
                           (dir / "results.csv").string());
        for (const auto& f : result.fits) {
            out << fmt::format("  {}-{}  slope {:+.4f}  r^2 {:.4f}\n", to_string(f.scheme),
                               f.field == Field::displacement ? "D" : "V", f.fit.slope, f.fit.r_squared);
        }
        return exit_ok;
    } catch (const StudyFailure& e) {
        write_study(c, e.partial(), dir);
        err << "error: " << e.what() << " (partial results from " << e.completed_samples() << " samples written)\n";
        return exit_failure;
    }
}

int cmd_validate(const RunConfig& c, bool inject_fault, std::ostream& out) {
    ValidationOptions options;
    options.noise = c.noise_spec();
    if (inject_fault) {
        options.covariance = [](const ModeData& m, double k) {
            IncrementCovariance cov = increment_covariance(m, k);
            cov.var_eta *= 1.0 + 1e-6;
            cov.cov_eta_dw *= 1.0 + 1e-6;
            return cov;
        };
    }
    const ValidationReport report = run_validation(options);
    out << fmt::format("{:<26} {:>5} {:>6} {:>12}  {:<26} {:>11} {:>9}  {}\n", "check", "mode", "alpha", "k",
                       "worst entry", "error", "tol", "status");
    for (const auto& r : report.rows) {
        out << fmt::format("{:<26} {:>5} {:>6g} {:>12.6g}  {:<26} {:>11.3e} {:>9.1e}  {}\n", r.check, r.mode, r.alpha,
                           r.t, r.entry, r.error, r.tolerance, r.pass ? "PASS" : "FAIL");
    }
    if (const ValidationRow* f = report.first_failure()) {
        out << fmt::format("first failure: {} mode={} alpha={:g} k={:g} entry={}\n", f->check, f->mode, f->alpha,
                           f->t, f->entry);
        return exit_failure;
    }
    out << fmt::format("all {} checks passed\n", report.rows.size());
    return exit_ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic strongly damped wave equation: simulation, convergence studies, validation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    bool inject_fault = false;
    app.add_option("--config", config_path, "flat JSON config file");
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::Option*> flag_options;
    for (const auto& k : keys()) {
        std::string flag = k.name;
        std::replace(flag.begin(), flag.end(), '_', '-');
        flag_options[k.name] = app.add_option("--" + flag, flag_values[k.name], k.help);
    }
    app.add_flag("--inject-covariance-fault", inject_fault)->group("");
    auto* simulate = app.add_subcommand("simulate", "integrate one trajectory and write the final state");
    auto* study = app.add_subcommand("study", "Monte-Carlo strong convergence study");
    auto* validate = app.add_subcommand("validate", "check semigroup and covariance identities");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config;
    }

    const std::string command = simulate->parsed() ? "simulate" : study->parsed() ? "study" : "validate";
    (void)validate;
    try {
        std::map<std::string, std::string> overrides;
        for (const auto& k : keys()) {
            std::string env = std::string(env_prefix) + k.name;
            std::transform(env.begin(), env.end(), env.begin(), [](unsigned char ch) { return std::toupper(ch); });
            if (const char* v = std::getenv(env.c_str())) {
                overrides[k.name] = v;
            }
        }
        for (const auto& [name, opt] : flag_options) {
            if (opt->count() > 0) {
                overrides[name] = flag_values[name];
            }
        }
        const RunConfig config =
            resolve_config(command, overrides, config_path.empty() ? std::string{} : read_file(config_path));
        if (command == "simulate") {
            return cmd_simulate(config, out);
        }
        if (command == "study") {
            return cmd_study(config, out, err);
        }
        return cmd_validate(config, inject_fault, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

}  // namespace sdwave::cli
