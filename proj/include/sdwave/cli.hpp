#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sdwave/experiments.hpp"
#include "sdwave/noise.hpp"
#include "sdwave/problem.hpp"

namespace sdwave::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_config = 2;

/// Prefix of environment overrides: SDWAVE_SAMPLES=4 sets "samples".
inline constexpr const char* env_prefix = "SDWAVE_";

/// Fully resolved run configuration. Precedence, lowest first: built-in
/// defaults, --config file, environment, command-line flags.
struct RunConfig {
    std::string command;
    double alpha = 1.0;
    int modes = 64;
    int steps = 256;
    double t_end = 1.0;
    int samples = 100;
    std::uint64_t seed = 42;
    std::string noise = "white";        // white | fractional | none
    double exponent = 0.5005;
    double regularity_gamma = 0.0;      // resolved from the noise when unset
    std::string scheme = "auto";        // aee | lie | both
    std::string axis = "temporal";      // spatial | temporal
    std::string out = "out";
    int threads = 1;
    std::string nonlinearity = "rational";  // rational | none
    int quadrature_points = 0;
    std::string initial = "zero";       // zero | e1
    int grid_points = 0;
    int level_min = 0;                  // temporal: k = 2^-i; spatial: N = 2^j
    int level_max = 0;
    int ref_level = 0;                  // temporal: k_ref = 2^-i; spatial: N_ref = 2^j
    int ref_time_level = 0;             // spatial: shared k = 2^-i

    ProblemConfig problem() const;
    NoiseSpec noise_spec() const;
    StudySpec study() const;
    std::vector<Scheme> schemes() const;

    /// Flat JSON document of every key.
    std::string to_json() const;
};

/// Builds a RunConfig from a flat key/value map of overrides applied on top
/// of the defaults, then resolves the axis- and command-dependent defaults.
/// Throws ConfigError naming the offending key.
RunConfig resolve_config(const std::string& command, const std::map<std::string, std::string>& overrides,
                         const std::string& config_file_json);

struct ValidationOptions {
    NoiseSpec noise = NoiseSpec::white();
    std::vector<int> modes{1, 2, 4, 16, 64, 256};
    std::vector<double> alphas{0.1, 1.0, 10.0};
    std::vector<double> steps{0x1.0p-2, 0x1.0p-6, 0x1.0p-10};
    /// Replaces the closed-form covariance; used to check that faults are caught.
    std::function<IncrementCovariance(const ModeData&, double)> covariance;
};

struct ValidationRow {
    std::string check;
    int mode = 0;
    double alpha = 0.0;
    double t = 0.0;
    std::string entry;
    double error = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    bool all_pass() const noexcept;
    const ValidationRow* first_failure() const noexcept;
};

/// Semigroup identities, complex-route agreement, covariance against the
/// quadrature oracle, and Cholesky reconstruction over the grid.
ValidationReport run_validation(const ValidationOptions& options);

/// Entry point: returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdwave::cli
