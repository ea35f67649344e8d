#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sdwave/noise.hpp"
#include "sdwave/nonlinearity.hpp"
#include "sdwave/problem.hpp"
#include "sdwave/spectral.hpp"

namespace sdwave {

enum class Scheme { aee, lie };

std::string_view to_string(Scheme s) noexcept;

struct StepPlan {
    double k = 0.0;
    int steps = 0;
    Scheme scheme = Scheme::aee;
};

/// k = t_end / steps. Throws std::invalid_argument for steps < 1.
StepPlan make_plan(double t_end, int steps, Scheme scheme);

/// Spectral coefficients of displacement and velocity.
struct State {
    SpectralVector u;
    SpectralVector v;

    State() = default;
    explicit State(std::size_t n) : u(n, 0.0), v(n, 0.0) {}

    std::size_t size() const noexcept { return u.size(); }
    bool finite() const noexcept;
};

/// Accelerated exponential Euler step, per mode:
///     u' = s1 u + s2 v + k s2 F + eta
///     v' = s3 u + s4 v + k s4 F + etahat
/// with the semigroup evaluated at k and F = P_N F(u) at the old state.
State aee_step(State state, std::span<const SemigroupMatrix> coeffs, double k, std::span<const double> f,
               std::span<const NoiseTriple> noise);

/// Linear implicit Euler step: (I + k A_j) X' = X + (0, k F_j + dW_j).
State lie_step(State state, std::span<const ModeData> modes, double k, std::span<const double> f,
               std::span<const double> dw);
State lie_step(State state, std::span<const ModeData> modes, double k, std::span<const double> f,
               std::span<const NoiseTriple> noise);

/// Folds fine-step triples into coarse-step triples along one Brownian path:
/// each coarse (eta, etahat) is sum_l S((r-1-l) k_f) (eta_l, etahat_l) over
/// its r fine substeps, and each coarse dW is the sum of the fine dW.
class CoarseNoiseAccumulator {
public:
    CoarseNoiseAccumulator(std::span<const SemigroupMatrix> fine_coeffs, int ratio);

    int ratio() const noexcept { return ratio_; }

    /// Adds one fine step (one triple per mode). Returns true when a coarse
    /// step is complete; `coarse()` is then valid until the next call.
    bool add(std::span<const NoiseTriple> fine);
    std::span<const NoiseTriple> coarse() const noexcept { return acc_; }

private:
    std::vector<SemigroupMatrix> coeffs_;
    int ratio_;
    int filled_ = 0;
    std::vector<NoiseTriple> acc_;
};

/// `fine` is row-major [fine step][mode]; returns [coarse step][mode].
/// Throws RatioMismatch unless ratio >= 1 divides the number of fine steps.
std::vector<NoiseTriple> propagate_noise_fine_to_coarse(std::span<const NoiseTriple> fine, std::size_t n_modes,
                                                        int ratio, std::span<const SemigroupMatrix> fine_coeffs);

/// Integer r with coarse = r * fine, or RatioMismatch.
int step_ratio(double coarse_k, double fine_k);

/// Per-(config, step size) loop invariants: modes, semigroup at k and the
/// noise factors. Immutable once built and safe to share across threads.
struct StepTables {
    double k = 0.0;
    std::vector<ModeData> modes;
    std::vector<SemigroupMatrix> coeffs;
    NoiseSampler sampler;

    StepTables(const ProblemConfig& config, double k);
};

/// One time march worth of mutable state (nonlinearity buffers).
class Stepper {
public:
    Stepper(const ProblemConfig& config, std::shared_ptr<const StepTables> tables);

    const StepTables& tables() const noexcept { return *tables_; }
    std::size_t modes() const noexcept { return tables_->modes.size(); }

    /// Advances one step of `scheme`; `noise` holds one triple per mode.
    void advance(State& state, Scheme scheme, std::span<const NoiseTriple> noise);

private:
    std::shared_ptr<const StepTables> tables_;
    NemytskiiOperator nonlinearity_;
    std::vector<double> f_;
};

struct IntegrateOptions {
    /// Generate noise on this finer grid and propagate it, so runs sharing
    /// (seed, sample) see one Brownian path.
    std::optional<StepPlan> coupled_fine_plan;
    /// Defaults to zero initial data.
    std::optional<State> initial;
    /// Keep every n-th state (0 disables).
    int snapshot_every = 0;
    std::vector<State>* snapshots = nullptr;
};

/// Marches plan.steps steps of plan.scheme from the initial state and
/// returns X at t_end. Throws NonFiniteValue on blow-up.
State integrate(const ProblemConfig& config, const StepPlan& plan, std::uint64_t sample_index, std::uint64_t seed,
                const IntegrateOptions& options = {});

}  // namespace sdwave
