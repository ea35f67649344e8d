#include "sdwave/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

namespace sdwave {

std::string_view to_string(Axis a) noexcept { return a == Axis::spatial ? "spatial" : "temporal"; }

std::string_view to_string(Field f) noexcept { return f == Field::displacement ? "displacement" : "velocity"; }

StudySpec StudySpec::spatial_default() {
    StudySpec s;
    s.axis = Axis::spatial;
    for (int j = 1; j <= 5; ++j) {
        s.levels.push_back(std::ldexp(1.0, j));
    }
    s.reference_modes = 256;
    s.reference_step = 0x1.0p-14;
    return s;
}

StudySpec StudySpec::temporal_default() {
    StudySpec s;
    s.axis = Axis::temporal;
    for (int i = 3; i <= 8; ++i) {
        s.levels.push_back(std::ldexp(1.0, -i));
    }
    s.reference_step = 0x1.0p-12;
    return s;
}

void StudySpec::validate(const ProblemConfig& config) const {
    config.validate();
    if (samples < 2) {
        throw ConfigError("samples", "must be >= 2");
    }
    if (threads < 1) {
        throw ConfigError("threads", "must be >= 1");
    }
    if (schemes.empty()) {
        throw ConfigError("scheme", "at least one scheme is required");
    }
    if (levels.empty()) {
        throw ConfigError("levels", "at least one level is required");
    }
    if (!(reference_step > 0.0)) {
        throw ConfigError("reference", "reference step must be positive");
    }
    for (std::size_t i = 1; i < levels.size(); ++i) {
        const bool ordered = axis == Axis::spatial ? levels[i] > levels[i - 1] : levels[i] < levels[i - 1];
        if (!ordered) {
            throw ConfigError("levels", "levels must be strictly ordered from coarse to fine");
        }
    }
    const int ref_steps = static_cast<int>(std::lround(config.t_end / reference_step));
    if (ref_steps < 1 || std::abs(ref_steps * reference_step - config.t_end) > 1e-12 * config.t_end) {
        throw ConfigError("reference", "reference step must divide t_end");
    }
    if (axis == Axis::spatial) {
        for (double n : levels) {
            if (n < 1.0 || n != std::floor(n)) {
                throw ConfigError("levels", "spatial levels must be positive integers");
            }
        }
        if (!(reference_modes > levels.back())) {
            throw ConfigError("reference", "reference modes must exceed every spatial level");
        }
        if (config.nonlinearity.quadrature_points != 0 &&
            config.nonlinearity.quadrature_points < 2 * reference_modes + 1) {
            throw ConfigError("quadrature_points", "must be >= 2 * reference modes + 1");
        }
    } else {
        if (!(reference_step < levels.back())) {
            throw ConfigError("reference", "reference step must be finer than every temporal level");
        }
        for (double k : levels) {
            const int steps = static_cast<int>(std::lround(config.t_end / k));
            if (steps < 1 || std::abs(steps * k - config.t_end) > 1e-12 * config.t_end) {
                throw ConfigError("levels", "every temporal level must divide t_end");
            }
            try {
                step_ratio(k, reference_step);
            } catch (const RatioMismatch&) {
                throw ConfigError("levels", "reference step must divide every temporal level");
            }
        }
    }
}

SquaredError ms_error(const State& ref, const State& approx) {
    if (approx.size() > ref.size()) {
        throw DimensionMismatch("ms_error: approximation has " + std::to_string(approx.size()) +
                                " modes but the reference only " + std::to_string(ref.size()));
    }
    SquaredError e;
    for (std::size_t j = 0; j < ref.size(); ++j) {
        const double du = ref.u[j] - (j < approx.size() ? approx.u[j] : 0.0);
        const double dv = ref.v[j] - (j < approx.size() ? approx.v[j] : 0.0);
        e.u += du * du;
        e.v += dv * dv;
    }
    return e;
}

MeanSquareError aggregate(std::span<const SquaredError> samples) {
    MeanSquareError out;
    const auto n = static_cast<double>(samples.size());
    if (samples.empty()) {
        return out;
    }
    double mu = 0.0, mv = 0.0;
    for (const auto& s : samples) {
        mu += s.u;
        mv += s.v;
    }
    mu /= n;
    mv /= n;
    out.err_u = std::sqrt(mu);
    out.err_v = std::sqrt(mv);
    if (samples.size() < 2) {
        return out;
    }
    double vu = 0.0, vv = 0.0;
    for (const auto& s : samples) {
        vu += (s.u - mu) * (s.u - mu);
        vv += (s.v - mv) * (s.v - mv);
    }
    const double se_mu = std::sqrt(vu / (n - 1.0) / n);
    const double se_mv = std::sqrt(vv / (n - 1.0) / n);
    out.stderr_u = out.err_u > 0.0 ? se_mu / (2.0 * out.err_u) : 0.0;
    out.stderr_v = out.err_v > 0.0 ? se_mv / (2.0 * out.err_v) : 0.0;
    return out;
}

SlopeFit fit_slope(std::span<const double> levels, std::span<const double> errors) {
    if (levels.size() != errors.size()) {
        throw std::invalid_argument("fit_slope: levels and errors differ in length");
    }
    if (levels.size() < 3) {
        throw DegenerateFit("fit_slope: need at least three points");
    }
    const auto n = static_cast<double>(levels.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(errors[i] > 0.0) || !(levels[i] > 0.0)) {
            throw DegenerateFit("fit_slope: levels and errors must be positive");
        }
        sx += std::log(levels[i]);
        sy += std::log(errors[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double dx = std::log(levels[i]) - mx;
        const double dy = std::log(errors[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw DegenerateFit("fit_slope: all levels coincide");
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return fit;
}

const SeriesFit* StudyResult::find(Scheme scheme, Field field) const noexcept {
    for (const auto& f : fits) {
        if (f.scheme == scheme && f.field == field) {
            return &f;
        }
    }
    return nullptr;
}

double predicted_slope(Axis axis, Field field, double gamma) noexcept {
    if (axis == Axis::temporal) {
        return field == Field::displacement ? std::min(1.0 + gamma, 1.0) : 1.0;
    }
    return field == Field::displacement ? -(1.0 + std::min(gamma, 1.0)) : -gamma;
}

namespace {

// Everything a sample needs that does not depend on the sample.
struct StudyContext {
    const StudySpec& spec;
    ProblemConfig reference_config;
    std::shared_ptr<const StepTables> reference_tables;
    int reference_steps = 0;
    std::vector<ProblemConfig> level_configs;                   // spatial
    std::vector<std::shared_ptr<const StepTables>> level_tables;
    std::vector<int> ratios;                                    // temporal

    StudyContext(const StudySpec& s, const ProblemConfig& config) : spec(s), reference_config(config) {
        spec.validate(config);
        reference_steps = static_cast<int>(std::lround(config.t_end / spec.reference_step));
        if (spec.axis == Axis::spatial) {
            reference_config.n_modes = spec.reference_modes;
            for (double n : spec.levels) {
                ProblemConfig c = config;
                c.n_modes = static_cast<int>(n);
                level_tables.push_back(std::make_shared<const StepTables>(c, spec.reference_step));
                level_configs.push_back(std::move(c));
            }
        } else {
            for (double k : spec.levels) {
                level_tables.push_back(std::make_shared<const StepTables>(config, k));
                ratios.push_back(step_ratio(k, spec.reference_step));
            }
        }
        reference_tables = std::make_shared<const StepTables>(reference_config, spec.reference_step);
    }

    SampleErrors run(std::uint64_t sample) const {
        return spec.axis == Axis::spatial ? run_spatial(sample) : run_temporal(sample);
    }

    SampleErrors run_temporal(std::uint64_t sample) const {
        const std::size_t n = reference_tables->modes.size();
        const std::size_t n_levels = spec.levels.size();
        Stepper ref_stepper(reference_config, reference_tables);
        State ref(n);

        std::vector<Stepper> steppers;
        std::vector<CoarseNoiseAccumulator> accs;
        std::vector<std::vector<State>> states(n_levels, std::vector<State>(spec.schemes.size(), State(n)));
        for (std::size_t l = 0; l < n_levels; ++l) {
            steppers.emplace_back(reference_config, level_tables[l]);
            accs.emplace_back(reference_tables->coeffs, ratios[l]);
        }

        std::vector<NoiseTriple> noise(n);
        for (int m = 0; m < reference_steps; ++m) {
            reference_tables->sampler.draw_step(spec.seed, sample, static_cast<std::uint64_t>(m), noise);
            ref_stepper.advance(ref, Scheme::aee, noise);
            for (std::size_t l = 0; l < n_levels; ++l) {
                if (accs[l].add(noise)) {
                    for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
                        steppers[l].advance(states[l][s], spec.schemes[s], accs[l].coarse());
                    }
                }
            }
        }
        return collect(ref, states);
    }

    SampleErrors run_spatial(std::uint64_t sample) const {
        const std::size_t n_ref = reference_tables->modes.size();
        const std::size_t n_levels = spec.levels.size();
        Stepper ref_stepper(reference_config, reference_tables);
        State ref(n_ref);

        std::vector<Stepper> steppers;
        std::vector<std::vector<State>> states(n_levels);
        for (std::size_t l = 0; l < n_levels; ++l) {
            steppers.emplace_back(level_configs[l], level_tables[l]);
            states[l].assign(spec.schemes.size(), State(level_tables[l]->modes.size()));
        }

        std::vector<NoiseTriple> noise(n_ref);
        const std::span<const NoiseTriple> all(noise);
        for (int m = 0; m < reference_steps; ++m) {
            reference_tables->sampler.draw_step(spec.seed, sample, static_cast<std::uint64_t>(m), noise);
            ref_stepper.advance(ref, Scheme::aee, noise);
            for (std::size_t l = 0; l < n_levels; ++l) {
                const auto head = all.first(level_tables[l]->modes.size());
                for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
                    steppers[l].advance(states[l][s], spec.schemes[s], head);
                }
            }
        }
        return collect(ref, states);
    }

    SampleErrors collect(const State& ref, const std::vector<std::vector<State>>& states) const {
        if (!ref.finite()) {
            throw NonFiniteValue("reference run is not finite at t_end");
        }
        SampleErrors errors(spec.schemes.size(), std::vector<SquaredError>(spec.levels.size()));
        for (std::size_t l = 0; l < states.size(); ++l) {
            for (std::size_t s = 0; s < states[l].size(); ++s) {
                if (!states[l][s].finite()) {
                    throw NonFiniteValue("run at level " + std::to_string(spec.levels[l]) + " blew up");
                }
                errors[s][l] = ms_error(ref, states[l][s]);
            }
        }
        return errors;
    }
};

StudyResult summarize(const StudySpec& spec, std::span<const SampleErrors> samples) {
    StudyResult result;
    for (std::size_t s = 0; s < spec.schemes.size(); ++s) {
        std::vector<double> eu, ev;
        for (std::size_t l = 0; l < spec.levels.size(); ++l) {
            std::vector<SquaredError> column;
            column.reserve(samples.size());
            for (const auto& sample : samples) {
                column.push_back(sample[s][l]);
            }
            const MeanSquareError m = aggregate(column);
            result.records.push_back(
                {spec.schemes[s], spec.axis, spec.levels[l], m.err_u, m.stderr_u, m.err_v, m.stderr_v});
            eu.push_back(m.err_u);
            ev.push_back(m.err_v);
        }
        for (Field field : {Field::displacement, Field::velocity}) {
            try {
                const SlopeFit fit = fit_slope(spec.levels, field == Field::displacement ? eu : ev);
                result.fits.push_back({spec.schemes[s], field, fit});
            } catch (const DegenerateFit&) {
                // exact (zero-error) series carry no slope
            }
        }
    }
    return result;
}

}  // namespace

SampleErrors run_study_sample(const StudySpec& spec, const ProblemConfig& config, std::uint64_t sample) {
    return StudyContext(spec, config).run(sample);
}

StudyResult run_study(const StudySpec& spec, const ProblemConfig& config) {
    const StudyContext context(spec, config);
    const auto n_samples = static_cast<std::size_t>(spec.samples);
    std::vector<std::optional<SampleErrors>> results(n_samples);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t first_error_sample = n_samples;

    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_samples) {
                return;
            }
            try {
                results[i] = context.run(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < first_error_sample) {
                    first_error_sample = i;
                    first_error = std::current_exception();
                }
                failed.store(true);
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(spec.threads, spec.samples));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    if (first_error) {
        // Aggregate the leading run of completed samples.
        std::vector<SampleErrors> done;
        for (auto& r : results) {
            if (!r) {
                break;
            }
            done.push_back(std::move(*r));
        }
        StudyResult partial = done.empty() ? StudyResult{} : summarize(spec, done);
        std::string what = "study failed at sample " + std::to_string(first_error_sample);
        try {
            std::rethrow_exception(first_error);
        } catch (const std::exception& e) {
            what += ": ";
            what += e.what();
        } catch (...) {
        }
        throw StudyFailure(what, std::move(partial), static_cast<int>(done.size()));
    }

    std::vector<SampleErrors> all;
    all.reserve(n_samples);
    for (auto& r : results) {
        all.push_back(std::move(*r));
    }
    return summarize(spec, all);
}

}  // namespace sdwave
