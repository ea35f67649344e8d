#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdwave/errors.hpp"
#include "sdwave/integrators.hpp"
#include "sdwave/problem.hpp"

namespace sdwave {

enum class Axis { spatial, temporal };
enum class Field { displacement, velocity };

std::string_view to_string(Axis a) noexcept;
std::string_view to_string(Field f) noexcept;

/// Convergence-study protocol. Levels run coarse to fine: increasing N on
/// the spatial axis, decreasing k on the temporal axis. Every spatial run
/// uses `reference_step`; every temporal run uses config.n_modes.
struct StudySpec {
    Axis axis = Axis::temporal;
    std::vector<double> levels;
    int reference_modes = 256;
    double reference_step = 0x1.0p-12;
    int samples = 100;
    std::uint64_t seed = 0;
    std::vector<Scheme> schemes{Scheme::aee};
    int threads = 1;

    /// N = 2^1..2^5, N_ref = 2^8, k = 2^-14.
    static StudySpec spatial_default();
    /// k = 2^-3..2^-8, k_ref = 2^-12.
    static StudySpec temporal_default();

    /// Throws ConfigError on unordered levels, a reference that is not finer
    /// than every level, a temporal level not divisible by the reference
    /// step, or fewer than two samples.
    void validate(const ProblemConfig& config) const;
};

struct SquaredError {
    double u = 0.0;
    double v = 0.0;
};

/// Squared L2 errors of one sample via Parseval, zero-padding `approx` to
/// the reference dimension. Throws DimensionMismatch if approx is larger.
SquaredError ms_error(const State& ref, const State& approx);

struct MeanSquareError {
    double err_u = 0.0;
    double err_v = 0.0;
    double stderr_u = 0.0;
    double stderr_v = 0.0;
};

/// Root of the sample mean of squared errors. The standard error follows
/// from the delta method: se(sqrt(m)) = se(m) / (2 sqrt(m)).
MeanSquareError aggregate(std::span<const SquaredError> samples);

struct ErrorRecord {
    Scheme scheme = Scheme::aee;
    Axis axis = Axis::temporal;
    double level = 0.0;
    double err_u = 0.0;
    double stderr_u = 0.0;
    double err_v = 0.0;
    double stderr_v = 0.0;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least squares of log(error) against log(level). Throws DegenerateFit for
/// fewer than three points or a non-positive error.
SlopeFit fit_slope(std::span<const double> levels, std::span<const double> errors);

struct SeriesFit {
    Scheme scheme = Scheme::aee;
    Field field = Field::displacement;
    SlopeFit fit;
};

struct StudyResult {
    std::vector<ErrorRecord> records;
    std::vector<SeriesFit> fits;

    const SeriesFit* find(Scheme scheme, Field field) const noexcept;
};

/// Failure during a study; carries whatever the completed samples give.
class StudyFailure : public Error {
public:
    StudyFailure(const std::string& what, StudyResult partial, int completed)
        : Error(what), partial_(std::move(partial)), completed_(completed) {}

    const StudyResult& partial() const noexcept { return partial_; }
    int completed_samples() const noexcept { return completed_; }

private:
    StudyResult partial_;
    int completed_;
};

/// Squared errors of one Monte-Carlo sample, indexed [scheme][level].
using SampleErrors = std::vector<std::vector<SquaredError>>;

/// One sample of the study: the reference run and every level share the
/// noise drawn on the reference grid (propagated to coarse steps on the
/// temporal axis, restricted to the first N modes on the spatial axis).
SampleErrors run_study_sample(const StudySpec& spec, const ProblemConfig& config, std::uint64_t sample);

/// Monte-Carlo study over spec.samples samples. Samples may run on
/// spec.threads workers but are aggregated in index order, so the result
/// does not depend on the thread count.
StudyResult run_study(const StudySpec& spec, const ProblemConfig& config);

/// Slope predicted from the error bounds for noise regularity gamma:
/// temporal k^{min(1+gamma,1)} and k^1; spatial (via lambda_N ~ N^2)
/// N^{-(1+min(gamma,1))} and N^{-gamma}.
double predicted_slope(Axis axis, Field field, double gamma) noexcept;

/// CSV with header scheme,axis,level,err_u,stderr_u,err_v,stderr_v.
std::string results_csv(std::span<const ErrorRecord> records);

/// Log-log plot with one polyline per (scheme, field) and dashed guide
/// lines of the given orders anchored at the first data point.
std::string results_svg(std::span<const ErrorRecord> records, std::span<const SeriesFit> fits,
                        std::span<const double> guide_orders);

/// Writes results.csv and convergence.svg into `dir` (created if needed).
/// I/O failures raise std::runtime_error naming the path.
void emit_results(std::span<const ErrorRecord> records, std::span<const SeriesFit> fits,
                  const std::filesystem::path& dir, std::span<const double> guide_orders = {});

}  // namespace sdwave
