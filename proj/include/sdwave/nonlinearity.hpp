#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace sdwave {

/// Coefficients <u, phi_j>, j = 1..N. Parseval: the L2 norm of u is the
/// Euclidean norm of the coefficients.
using SpectralVector = std::vector<double>;

/// Nemytskii operator F(u)(x) = f(x, u(x)).
struct NemytskiiSpec {
    std::function<double(double x, double z)> f;  // empty means F = 0
    double lipschitz_bound = 0.0;
    int quadrature_points = 0;                    // 0 selects 4N + 1

    bool enabled() const noexcept { return static_cast<bool>(f); }
    int resolved_points(int n_modes) const noexcept {
        return quadrature_points > 0 ? quadrature_points : 4 * n_modes + 1;
    }
};

/// f(z) = (1 - z) / (1 + z^2), with K = max |f'| attained at z = 2 - sqrt(3).
NemytskiiSpec rational_nonlinearity(int quadrature_points = 0);
NemytskiiSpec zero_nonlinearity();

/// Uniform sine grid x_i = i / (n + 1), i = 1..n, with the type-I discrete
/// sine transform between coefficient and nodal values. The plan is shared
/// read-only; concurrent use needs only distinct buffers.
class SineGrid {
public:
    explicit SineGrid(int n_points);
    ~SineGrid();
    SineGrid(SineGrid&&) noexcept;
    SineGrid& operator=(SineGrid&&) noexcept;
    SineGrid(const SineGrid&) = delete;
    SineGrid& operator=(const SineGrid&) = delete;

    int points() const noexcept { return n_; }
    double node(int i) const noexcept { return static_cast<double>(i) / (n_ + 1); }  // i = 1..n

    /// values[i-1] = sum_j coeffs[j-1] sqrt(2) sin(j pi x_i); coeffs.size() <= n.
    void synthesize(std::span<const double> coeffs, std::span<double> values, std::span<double> scratch) const;
    /// coeffs[j-1] = (1/(n+1)) sum_i values[i-1] sqrt(2) sin(j pi x_i).
    void analyze(std::span<const double> values, std::span<double> coeffs, std::span<double> scratch) const;

private:
    struct Plan;
    int n_ = 0;
    std::unique_ptr<Plan> plan_;
};

std::vector<double> synthesize(std::span<const double> coeffs, const SineGrid& grid);
SpectralVector analyze(std::span<const double> values, int n_modes, const SineGrid& grid);

/// P_N F(u) by collocation on a sine grid, with reusable work buffers.
/// One instance per thread.
class NemytskiiOperator {
public:
    NemytskiiOperator(NemytskiiSpec spec, int n_modes);

    int modes() const noexcept { return n_modes_; }
    const NemytskiiSpec& spec() const noexcept { return spec_; }

    /// Throws NonFiniteValue if f returns NaN or Inf on the grid.
    void apply(std::span<const double> u, std::span<double> out);
    SpectralVector operator()(std::span<const double> u);

private:
    NemytskiiSpec spec_;
    int n_modes_;
    std::shared_ptr<const SineGrid> grid_;
    std::vector<double> nodal_;
    std::vector<double> scratch_;
};

SpectralVector apply_nemytskii(std::span<const double> u, const NemytskiiSpec& spec);

}  // namespace sdwave
