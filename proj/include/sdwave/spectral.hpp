#pragma once

// Eigen-structure of A = -d^2/dx^2 on (0,1) with homogeneous Dirichlet
// conditions, and the per-mode semigroup of the damped wave operator
//
//     dX = -A_j X dt,   A_j = [ 0  -1 ; lambda_j  alpha*lambda_j ],
//
// whose eigenvalues are the roots of z^2 - alpha*lambda*z + lambda = 0.

#include <complex>
#include <numbers>

namespace sdwave {

/// lambda_j = j^2 pi^2. Throws std::invalid_argument for j < 1.
double eigenvalue(int j);

/// phi_j(x) = sqrt(2) sin(j pi x). Throws std::invalid_argument unless
/// j >= 1 and 0 <= x <= 1.
double eigenfunction_value(int j, double x);

/// Relative root gap below which a mode is flagged as a double root.
inline constexpr double double_root_tolerance = 1e-6;

struct ModeRoots {
    std::complex<double> plus;   // larger real part (imaginary part >= 0)
    std::complex<double> minus;
    bool double_root = false;    // |plus - minus| < double_root_tolerance * alpha * lambda
};

/// Roots of z^2 - alpha*lambda*z + lambda = 0. The larger root comes from the
/// quadratic formula and the smaller one from the product lambda / root_plus.
ModeRoots mode_roots(double lambda, double alpha);

struct ModeData {
    int j = 0;            // 0 when built from a bare eigenvalue
    double lambda = 0.0;
    double alpha = 0.0;
    double gamma = 0.0;   // eigenvalue of Q on phi_j
    ModeRoots roots;
    // ((root_plus - root_minus) / 2)^2 = lambda (alpha^2 lambda / 4 - 1);
    // negative exactly when the roots are complex.
    double half_gap_sq = 0.0;

    double mean_rate() const noexcept { return 0.5 * alpha * lambda; }
    /// |root_plus|, the fastest rate present in the mode.
    double fast_rate() const noexcept { return std::abs(roots.plus); }
};

ModeData mode_from_eigenvalue(double lambda, double alpha, double gamma = 1.0);
ModeData dirichlet_mode(int j, double alpha, double gamma = 1.0);

/// Restriction of exp(-t A_j) to one mode: [ s1 s2 ; s3 s4 ].
struct SemigroupMatrix {
    double s1 = 1.0;
    double s2 = 0.0;
    double s3 = 0.0;
    double s4 = 1.0;

    double det() const noexcept { return s1 * s4 - s2 * s3; }

    friend SemigroupMatrix operator*(const SemigroupMatrix& a, const SemigroupMatrix& b) noexcept {
        return {a.s1 * b.s1 + a.s2 * b.s3, a.s1 * b.s2 + a.s2 * b.s4,
                a.s3 * b.s1 + a.s4 * b.s3, a.s3 * b.s2 + a.s4 * b.s4};
    }
};

/// Semigroup coefficients of one mode at time t >= 0.
///
/// Evaluated through real forms that agree with the eigenfunction-expansion
/// formulas: exponentials of the two real roots with a (1 - e^{-x})/x factor
/// when the roots are close, and e^{-rt}(cos, sin/omega) in the complex-root
/// regime. The double root is the continuous limit of both, so no switch is
/// needed here; see `semigroup_coeffs_complex` for the literal formulas.
SemigroupMatrix semigroup_coeffs(const ModeData& mode, double t);

struct ComplexSemigroup {
    std::complex<double> s1, s2, s3, s4;
};

/// The four expansion formulas evaluated literally in complex arithmetic,
/// switching to the analytic double-root limit when the mode is flagged.
/// Used as a cross-check of `semigroup_coeffs`.
ComplexSemigroup semigroup_coeffs_complex(const ModeData& mode, double t);

}  // namespace sdwave
