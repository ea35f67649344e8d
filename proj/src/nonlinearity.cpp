#include "sdwave/nonlinearity.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <fftw3.h>

#include "sdwave/errors.hpp"

namespace sdwave {

namespace {

// FFTW's planner is not thread-safe; execution with fresh arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::shared_ptr<const SineGrid> shared_grid(int n) {
    planner_mutex();  // must outlive the cache, so construct it first
    static std::mutex cache_mutex;
    static std::map<int, std::shared_ptr<const SineGrid>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[n];
    if (!slot) {
        slot = std::make_shared<const SineGrid>(n);
    }
    return slot;
}

}  // namespace

NemytskiiSpec rational_nonlinearity(int quadrature_points) {
    const double z = 2.0 - std::numbers::sqrt3;
    const double zz = 1.0 + z * z;
    const double k = std::abs((z * z - 2.0 * z - 1.0) / (zz * zz));
    return {[](double, double u) { return (1.0 - u) / (1.0 + u * u); }, k, quadrature_points};
}

NemytskiiSpec zero_nonlinearity() { return {}; }

struct SineGrid::Plan {
    fftw_plan handle = nullptr;
};

SineGrid::SineGrid(int n_points) : n_(n_points), plan_(std::make_unique<Plan>()) {
    if (n_points < 1) {
        throw std::invalid_argument("SineGrid: need at least one point");
    }
    std::vector<double> in(n_), out(n_);
    std::lock_guard lock(planner_mutex());
    plan_->handle = fftw_plan_r2r_1d(n_, in.data(), out.data(), FFTW_RODFT00, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan_->handle == nullptr) {
        throw std::runtime_error("SineGrid: FFTW failed to create a plan of size " + std::to_string(n_));
    }
}

SineGrid::~SineGrid() {
    if (plan_ && plan_->handle) {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_->handle);
    }
}

SineGrid::SineGrid(SineGrid&&) noexcept = default;
SineGrid& SineGrid::operator=(SineGrid&&) noexcept = default;

// FFTW_RODFT00 computes Y_k = 2 sum_j X_j sin(pi (j+1)(k+1) / (n+1)).
void SineGrid::synthesize(std::span<const double> coeffs, std::span<double> values,
                          std::span<double> scratch) const {
    if (coeffs.size() > static_cast<std::size_t>(n_) || values.size() != static_cast<std::size_t>(n_) ||
        scratch.size() < static_cast<std::size_t>(n_)) {
        throw std::invalid_argument("SineGrid::synthesize: buffer sizes do not match the grid");
    }
    std::copy(coeffs.begin(), coeffs.end(), scratch.begin());
    std::fill(scratch.begin() + static_cast<std::ptrdiff_t>(coeffs.size()), scratch.begin() + n_, 0.0);
    fftw_execute_r2r(plan_->handle, scratch.data(), values.data());
    const double c = 0.5 * std::numbers::sqrt2;
    for (double& v : values) {
        v *= c;
    }
}

void SineGrid::analyze(std::span<const double> values, std::span<double> coeffs, std::span<double> scratch) const {
    if (coeffs.size() > static_cast<std::size_t>(n_) || values.size() != static_cast<std::size_t>(n_) ||
        scratch.size() < static_cast<std::size_t>(n_)) {
        throw std::invalid_argument("SineGrid::analyze: buffer sizes do not match the grid");
    }
    // Out-of-place r2r transforms leave the input untouched.
    fftw_execute_r2r(plan_->handle, const_cast<double*>(values.data()), scratch.data());
    const double c = 0.5 * std::numbers::sqrt2 / (n_ + 1);
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        coeffs[j] = c * scratch[j];
    }
}

std::vector<double> synthesize(std::span<const double> coeffs, const SineGrid& grid) {
    std::vector<double> values(grid.points()), scratch(grid.points());
    grid.synthesize(coeffs, values, scratch);
    return values;
}

SpectralVector analyze(std::span<const double> values, int n_modes, const SineGrid& grid) {
    SpectralVector coeffs(n_modes);
    std::vector<double> scratch(grid.points());
    grid.analyze(values, coeffs, scratch);
    return coeffs;
}

NemytskiiOperator::NemytskiiOperator(NemytskiiSpec spec, int n_modes) : spec_(std::move(spec)), n_modes_(n_modes) {
    if (n_modes < 1) {
        throw std::invalid_argument("NemytskiiOperator: need at least one mode");
    }
    const int points = spec_.resolved_points(n_modes);
    if (points < 2 * n_modes + 1) {
        throw std::invalid_argument("NemytskiiOperator: quadrature_points must be >= 2N+1");
    }
    if (spec_.enabled()) {
        grid_ = shared_grid(points);
        nodal_.resize(points);
        scratch_.resize(points);
    }
}

void NemytskiiOperator::apply(std::span<const double> u, std::span<double> out) {
    if (u.size() != static_cast<std::size_t>(n_modes_) || out.size() != u.size()) {
        throw std::invalid_argument("NemytskiiOperator::apply: expected " + std::to_string(n_modes_) + " modes");
    }
    if (!spec_.enabled()) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    grid_->synthesize(u, nodal_, scratch_);
    for (int i = 0; i < grid_->points(); ++i) {
        const double x = grid_->node(i + 1);
        const double fx = spec_.f(x, nodal_[i]);
        if (!std::isfinite(fx)) {
            throw NonFiniteValue("nonlinearity returned a non-finite value at x = " + std::to_string(x) +
                                 " for u(x) = " + std::to_string(nodal_[i]));
        }
        nodal_[i] = fx;
    }
    grid_->analyze(nodal_, out, scratch_);
}

SpectralVector NemytskiiOperator::operator()(std::span<const double> u) {
    SpectralVector out(u.size());
    apply(u, out);
    return out;
}

SpectralVector apply_nemytskii(std::span<const double> u, const NemytskiiSpec& spec) {
    NemytskiiOperator op(spec, static_cast<int>(u.size()));
    return op(u);
}

}  // namespace sdwave
