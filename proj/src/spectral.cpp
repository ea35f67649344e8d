#include "sdwave/spectral.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdwave {

double eigenvalue(int j) {
    if (j < 1) {
        throw std::invalid_argument("eigenvalue: mode index must be >= 1, got " + std::to_string(j));
    }
    const double jp = j * std::numbers::pi;
    return jp * jp;
}

double eigenfunction_value(int j, double x) {
    if (j < 1) {
        throw std::invalid_argument("eigenfunction_value: mode index must be >= 1");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("eigenfunction_value: x must lie in [0, 1]");
    }
    return std::numbers::sqrt2 * std::sin(j * std::numbers::pi * x);
}

ModeRoots mode_roots(double lambda, double alpha) {
    if (!(lambda > 0.0) || !(alpha > 0.0)) {
        throw std::invalid_argument("mode_roots: lambda and alpha must be positive");
    }
    const double r = 0.5 * alpha * lambda;
    const double gap_sq = lambda * (0.25 * alpha * alpha * lambda - 1.0);
    ModeRoots roots;
    if (gap_sq >= 0.0) {
        const double half_gap = std::sqrt(gap_sq);
        const double plus = r + half_gap;
        roots.plus = plus;
        roots.minus = lambda / plus;
        roots.double_root = 2.0 * half_gap < double_root_tolerance * alpha * lambda;
    } else {
        const double omega = std::sqrt(-gap_sq);
        roots.plus = {r, omega};
        roots.minus = {r, -omega};
        roots.double_root = 2.0 * omega < double_root_tolerance * alpha * lambda;
    }
    return roots;
}

ModeData mode_from_eigenvalue(double lambda, double alpha, double gamma) {
    if (gamma < 0.0) {
        throw std::invalid_argument("mode_from_eigenvalue: gamma must be >= 0");
    }
    ModeData m;
    m.lambda = lambda;
    m.alpha = alpha;
    m.gamma = gamma;
    m.roots = mode_roots(lambda, alpha);
    m.half_gap_sq = lambda * (0.25 * alpha * alpha * lambda - 1.0);
    return m;
}

ModeData dirichlet_mode(int j, double alpha, double gamma) {
    ModeData m = mode_from_eigenvalue(eigenvalue(j), alpha, gamma);
    m.j = j;
    return m;
}

namespace {

// (1 - e^{-x}) / x for x >= 0.
double relative_decay(double x) {
    if (x == 0.0) {
        return 1.0;
    }
    return -std::expm1(-x) / x;
}

}  // namespace

SemigroupMatrix semigroup_coeffs(const ModeData& mode, double t) {
    if (!(t >= 0.0)) {
        throw std::invalid_argument("semigroup_coeffs: t must be >= 0");
    }
    if (t == 0.0) {
        return {};
    }
    const double lambda = mode.lambda;
    SemigroupMatrix s;
    if (mode.half_gap_sq >= 0.0) {
        const double half_gap = std::sqrt(mode.half_gap_sq);
        const double fast = mode.roots.plus.real();
        const double slow = mode.roots.minus.real();
        const double e_slow = std::exp(-slow * t);
        const double x = 2.0 * half_gap * t;
        if (x > 1.0) {
            const double e_fast = std::exp(-fast * t);
            const double inv_gap = 1.0 / (2.0 * half_gap);
            s.s1 = (fast * e_slow - slow * e_fast) * inv_gap;
            s.s2 = (e_slow - e_fast) * inv_gap;
            s.s4 = (fast * e_fast - slow * e_slow) * inv_gap;
        } else {
            const double p = t * relative_decay(x);
            s.s1 = e_slow * (1.0 + slow * p);
            s.s2 = e_slow * p;
            s.s4 = e_slow * (1.0 - fast * p);
        }
    } else {
        const double r = mode.mean_rate();
        const double omega = std::sqrt(-mode.half_gap_sq);
        const double damp = std::exp(-r * t);
        const double c = std::cos(omega * t);
        const double sn = std::sin(omega * t) / omega;
        s.s1 = damp * (c + r * sn);
        s.s2 = damp * sn;
        s.s4 = damp * (c - r * sn);
    }
    s.s3 = -lambda * s.s2;
    return s;
}

ComplexSemigroup semigroup_coeffs_complex(const ModeData& mode, double t) {
    using C = std::complex<double>;
    const double lambda = mode.lambda;
    if (mode.roots.double_root) {
        const double r = mode.mean_rate();
        const double d = std::exp(-r * t);
        return {C(d * (1.0 + r * t)), C(t * d), C(-lambda * t * d), C(d * (1.0 - r * t))};
    }
    const C lp = mode.roots.plus;
    const C lm = mode.roots.minus;
    const C ep = std::exp(-t * lp);
    const C em = std::exp(-t * lm);
    const C gap = lp - lm;
    return {(lp * em - lm * ep) / gap, (em - ep) / gap, lambda * (ep - em) / gap,
            (lp * ep - lm * em) / gap};
}

}  // namespace sdwave
