#pragma once

// Exact joint law of the per-mode increments over one step of length k,
// with tau = time remaining to the end of the step:
//
//     eta    = sqrt(gamma) * int_0^k s2(tau) dbeta
//     etahat = sqrt(gamma) * int_0^k s4(tau) dbeta
//     dW     = sqrt(gamma) * int_0^k 1      dbeta
//
// By the Ito isometry every covariance is gamma times an integral of a
// product of these kernels.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sdwave/random.hpp"
#include "sdwave/spectral.hpp"

namespace sdwave {

enum class NoiseKind { white, fractional_power, none };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::white;
    double exponent = 0.0;           // Q = A^{-exponent}; ignored unless fractional_power
    double regularity_gamma = 0.4995;

    static NoiseSpec white();
    static NoiseSpec fractional(double exponent);
    static NoiseSpec none();

    double effective_exponent() const noexcept { return kind == NoiseKind::fractional_power ? exponent : 0.0; }
    /// gamma_j for Q = A^{-s}: 1 for white noise, 0 when disabled.
    double eigenvalue(double lambda) const;
    /// In 1D, ||A^{(gamma-1)/2} Q^{1/2}||_HS < inf iff gamma < s + 1/2.
    bool regularity_consistent() const noexcept;
};

struct IncrementCovariance {
    double var_eta = 0.0;
    double var_etahat = 0.0;
    double cov_eta_etahat = 0.0;
    double cov_eta_dw = 0.0;
    double cov_etahat_dw = 0.0;
    double var_dw = 0.0;

    /// Symmetric matrix in the order (eta, etahat, dW).
    std::array<std::array<double, 3>, 3> matrix() const noexcept;
    IncrementCovariance scaled(double c) const noexcept;
};

/// Closed-form covariance for one step of size k > 0.
///
/// For |root_plus| k <= 1 the kernels are expanded in Taylor series and the
/// products integrated term by term; otherwise the integrals follow from the
/// semigroup at k through the exact identities
///     int s4     = s2(k)                       int s2 s4 = s2(k)^2 / 2
///     int s2     = (1 - s1(k)) / lambda
///     int s4^2   = (1 - s4(k)^2 - lambda s2(k)^2) / (2 alpha lambda)
///     int s2^2   = (int s4^2 - alpha lambda int s2 s4 - s2(k) s4(k)) / lambda
IncrementCovariance increment_covariance(const ModeData& mode, double k);

/// Reference values from composite Gauss-Legendre quadrature of the
/// kernel products, with panels graded geometrically from 1/|root_plus|.
IncrementCovariance covariance_quadrature_oracle(const ModeData& mode, double k);

/// Lower-triangular factor; `dims` is 2 for (eta, etahat) or 3 when dW is
/// included. Entries beyond `dims` are zero.
struct CholeskyFactor {
    int dims = 3;
    std::array<std::array<double, 3>, 3> lower{};
};

/// Pivot clamp relative to the largest matrix entry.
inline constexpr double cholesky_pivot_tolerance = 1e-13;

/// Throws NotPositiveSemidefinite when a pivot is below
/// -cholesky_pivot_tolerance * max|C|; smaller negative pivots become zero.
CholeskyFactor cholesky(const std::array<std::array<double, 3>, 3>& c, int dims);
CholeskyFactor cholesky(const IncrementCovariance& cov, int dims = 3);

struct NoiseTriple {
    double eta = 0.0;
    double etahat = 0.0;
    double dw = 0.0;
};

/// Precomputed factors for a set of modes at one step size.
class NoiseSampler {
public:
    NoiseSampler() = default;
    NoiseSampler(std::span<const ModeData> modes, double k);

    std::size_t size() const noexcept { return factors_.size(); }
    double step() const noexcept { return k_; }
    const CholeskyFactor& factor(std::size_t i) const { return factors_.at(i); }

    /// One triple for the i-th mode (0-based); the key uses the mode's own
    /// index j so runs with different truncations share draws.
    NoiseTriple draw(std::size_t i, std::uint64_t seed, std::uint64_t sample, std::uint64_t step) const noexcept;

    /// Triples for the first out.size() modes at one step.
    void draw_step(std::uint64_t seed, std::uint64_t sample, std::uint64_t step, std::span<NoiseTriple> out) const;

private:
    double k_ = 0.0;
    std::vector<std::uint32_t> mode_ids_;
    std::vector<CholeskyFactor> factors_;
};

}  // namespace sdwave
