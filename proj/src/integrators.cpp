#include "sdwave/integrators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sdwave/errors.hpp"

namespace sdwave {

std::string_view to_string(Scheme s) noexcept {
    switch (s) {
        case Scheme::aee:
            return "aee";
        case Scheme::lie:
            return "lie";
    }
    return "?";
}

StepPlan make_plan(double t_end, int steps, Scheme scheme) {
    if (steps < 1) {
        throw std::invalid_argument("make_plan: need at least one step");
    }
    if (!(t_end > 0.0)) {
        throw std::invalid_argument("make_plan: t_end must be positive");
    }
    return {t_end / steps, steps, scheme};
}

bool State::finite() const noexcept {
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (!std::isfinite(u[j]) || !std::isfinite(v[j])) {
            return false;
        }
    }
    return true;
}

namespace {

void require_sizes(std::size_t n, std::size_t a, std::size_t b, std::size_t c, const char* what) {
    if (a != n || b != n || c != n) {
        throw std::invalid_argument(std::string(what) + ": per-mode inputs must match the state dimension");
    }
}

}  // namespace

State aee_step(State state, std::span<const SemigroupMatrix> coeffs, double k, std::span<const double> f,
               std::span<const NoiseTriple> noise) {
    const std::size_t n = state.size();
    require_sizes(n, coeffs.size(), f.size(), noise.size(), "aee_step");
    for (std::size_t j = 0; j < n; ++j) {
        const SemigroupMatrix& s = coeffs[j];
        const double u = state.u[j];
        const double v = state.v[j];
        const double kf = k * f[j];
        state.u[j] = s.s1 * u + s.s2 * v + s.s2 * kf + noise[j].eta;
        state.v[j] = s.s3 * u + s.s4 * v + s.s4 * kf + noise[j].etahat;
    }
    return state;
}

namespace {

template <class Increment>
State lie_solve(State state, std::span<const ModeData> modes, double k, std::span<const double> f,
                Increment&& dw_of) {
    for (std::size_t j = 0; j < state.size(); ++j) {
        const double klam = k * modes[j].lambda;
        const double diag = 1.0 + modes[j].alpha * klam;
        const double inv_det = 1.0 / (diag + k * klam);
        const double rhs_u = state.u[j];
        const double rhs_v = state.v[j] + k * f[j] + dw_of(j);
        state.u[j] = (diag * rhs_u + k * rhs_v) * inv_det;
        state.v[j] = (rhs_v - klam * rhs_u) * inv_det;
    }
    return state;
}

}  // namespace

State lie_step(State state, std::span<const ModeData> modes, double k, std::span<const double> f,
               std::span<const double> dw) {
    require_sizes(state.size(), modes.size(), f.size(), dw.size(), "lie_step");
    return lie_solve(std::move(state), modes, k, f, [&](std::size_t j) { return dw[j]; });
}

State lie_step(State state, std::span<const ModeData> modes, double k, std::span<const double> f,
               std::span<const NoiseTriple> noise) {
    require_sizes(state.size(), modes.size(), f.size(), noise.size(), "lie_step");
    return lie_solve(std::move(state), modes, k, f, [&](std::size_t j) { return noise[j].dw; });
}

CoarseNoiseAccumulator::CoarseNoiseAccumulator(std::span<const SemigroupMatrix> fine_coeffs, int ratio)
    : coeffs_(fine_coeffs.begin(), fine_coeffs.end()), ratio_(ratio), acc_(fine_coeffs.size()) {
    if (ratio < 1) {
        throw RatioMismatch("CoarseNoiseAccumulator: ratio must be >= 1");
    }
}

bool CoarseNoiseAccumulator::add(std::span<const NoiseTriple> fine) {
    if (fine.size() != acc_.size()) {
        throw std::invalid_argument("CoarseNoiseAccumulator::add: expected one triple per mode");
    }
    if (filled_ == ratio_) {
        filled_ = 0;
    }
    if (filled_ == 0) {
        for (std::size_t j = 0; j < acc_.size(); ++j) {
            acc_[j] = fine[j];
        }
    } else {
        // Horner form of sum_l S^{r-1-l} x_l: every earlier substep is
        // carried one more fine step forward.
        for (std::size_t j = 0; j < acc_.size(); ++j) {
            const SemigroupMatrix& s = coeffs_[j];
            NoiseTriple& a = acc_[j];
            const double eta = s.s1 * a.eta + s.s2 * a.etahat + fine[j].eta;
            const double etahat = s.s3 * a.eta + s.s4 * a.etahat + fine[j].etahat;
            a = {eta, etahat, a.dw + fine[j].dw};
        }
    }
    ++filled_;
    return filled_ == ratio_;
}

std::vector<NoiseTriple> propagate_noise_fine_to_coarse(std::span<const NoiseTriple> fine, std::size_t n_modes,
                                                        int ratio, std::span<const SemigroupMatrix> fine_coeffs) {
    if (ratio < 1 || n_modes == 0 || fine.size() % n_modes != 0) {
        throw RatioMismatch("propagate_noise_fine_to_coarse: invalid ratio or triple layout");
    }
    if (fine_coeffs.size() != n_modes) {
        throw std::invalid_argument("propagate_noise_fine_to_coarse: need one semigroup matrix per mode");
    }
    const std::size_t fine_steps = fine.size() / n_modes;
    if (fine_steps % static_cast<std::size_t>(ratio) != 0) {
        throw RatioMismatch("propagate_noise_fine_to_coarse: " + std::to_string(fine_steps) +
                            " fine steps are not a multiple of ratio " + std::to_string(ratio));
    }
    CoarseNoiseAccumulator acc(fine_coeffs, ratio);
    std::vector<NoiseTriple> coarse;
    coarse.reserve(fine.size() / ratio);
    for (std::size_t m = 0; m < fine_steps; ++m) {
        if (acc.add(fine.subspan(m * n_modes, n_modes))) {
            coarse.insert(coarse.end(), acc.coarse().begin(), acc.coarse().end());
        }
    }
    return coarse;
}

int step_ratio(double coarse_k, double fine_k) {
    if (!(fine_k > 0.0) || !(coarse_k > 0.0)) {
        throw RatioMismatch("step_ratio: step sizes must be positive");
    }
    const double q = coarse_k / fine_k;
    const double r = std::round(q);
    if (r < 1.0 || std::abs(q - r) > 1e-9 * r) {
        throw RatioMismatch("step_ratio: fine step " + std::to_string(fine_k) + " does not divide coarse step " +
                            std::to_string(coarse_k));
    }
    return static_cast<int>(r);
}

StepTables::StepTables(const ProblemConfig& config, double step) : k(step), modes(build_modes(config)) {
    coeffs.reserve(modes.size());
    for (const ModeData& m : modes) {
        coeffs.push_back(semigroup_coeffs(m, k));
    }
    sampler = NoiseSampler(modes, k);
}

Stepper::Stepper(const ProblemConfig& config, std::shared_ptr<const StepTables> tables)
    : tables_(std::move(tables)),
      nonlinearity_(config.nonlinearity, config.n_modes),
      f_(config.n_modes, 0.0) {
    if (tables_->modes.size() != static_cast<std::size_t>(config.n_modes)) {
        throw std::invalid_argument("Stepper: tables were built for a different number of modes");
    }
}

void Stepper::advance(State& state, Scheme scheme, std::span<const NoiseTriple> noise) {
    nonlinearity_.apply(state.u, f_);
    const StepTables& t = *tables_;
    if (scheme == Scheme::aee) {
        state = aee_step(std::move(state), t.coeffs, t.k, f_, noise);
    } else {
        state = lie_step(std::move(state), t.modes, t.k, f_, noise);
    }
}

State integrate(const ProblemConfig& config, const StepPlan& plan, std::uint64_t sample_index, std::uint64_t seed,
                const IntegrateOptions& options) {
    config.validate();
    if (plan.steps < 1 || std::abs(plan.k * plan.steps - config.t_end) > 1e-12 * config.t_end) {
        throw std::invalid_argument("integrate: plan does not cover [0, t_end]");
    }
    const auto n = static_cast<std::size_t>(config.n_modes);
    State state = options.initial.value_or(State(n));
    if (state.size() != n || state.v.size() != n) {
        throw DimensionMismatch("integrate: initial state has the wrong dimension");
    }

    auto tables = std::make_shared<const StepTables>(config, plan.k);
    Stepper stepper(config, tables);
    std::vector<NoiseTriple> noise(n);

    std::shared_ptr<const StepTables> fine_tables;
    std::optional<CoarseNoiseAccumulator> acc;
    int ratio = 1;
    if (options.coupled_fine_plan) {
        ratio = step_ratio(plan.k, options.coupled_fine_plan->k);
        fine_tables = std::make_shared<const StepTables>(config, options.coupled_fine_plan->k);
        acc.emplace(fine_tables->coeffs, ratio);
    }

    for (int m = 0; m < plan.steps; ++m) {
        std::span<const NoiseTriple> step_noise;
        if (acc) {
            for (int l = 0; l < ratio; ++l) {
                const auto fine_step = static_cast<std::uint64_t>(m) * ratio + l;
                fine_tables->sampler.draw_step(seed, sample_index, fine_step, noise);
                acc->add(noise);
            }
            step_noise = acc->coarse();
        } else {
            tables->sampler.draw_step(seed, sample_index, static_cast<std::uint64_t>(m), noise);
            step_noise = noise;
        }
        stepper.advance(state, plan.scheme, step_noise);
        if (options.snapshots && options.snapshot_every > 0 && (m + 1) % options.snapshot_every == 0) {
            options.snapshots->push_back(state);
        }
    }
    if (!state.finite()) {
        throw NonFiniteValue("integrate: state is not finite at t_end");
    }
    return state;
}

}  // namespace sdwave
