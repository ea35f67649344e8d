#include "sdwave/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "sdwave/errors.hpp"

namespace sdwave {

NoiseSpec NoiseSpec::white() { return {NoiseKind::white, 0.0, 0.4995}; }

NoiseSpec NoiseSpec::fractional(double exponent) {
    return {NoiseKind::fractional_power, exponent, std::min(2.0, exponent + 0.4995)};
}

NoiseSpec NoiseSpec::none() { return {NoiseKind::none, 0.0, 2.0}; }

double NoiseSpec::eigenvalue(double lambda) const {
    switch (kind) {
        case NoiseKind::white:
            return 1.0;
        case NoiseKind::fractional_power:
            return std::pow(lambda, -exponent);
        case NoiseKind::none:
            return 0.0;
    }
    return 0.0;
}

bool NoiseSpec::regularity_consistent() const noexcept {
    if (kind == NoiseKind::none) {
        return true;
    }
    return regularity_gamma > -1.0 && regularity_gamma <= 2.0 &&
           regularity_gamma < effective_exponent() + 0.5;
}

std::array<std::array<double, 3>, 3> IncrementCovariance::matrix() const noexcept {
    return {{{var_eta, cov_eta_etahat, cov_eta_dw},
             {cov_eta_etahat, var_etahat, cov_etahat_dw},
             {cov_eta_dw, cov_etahat_dw, var_dw}}};
}

IncrementCovariance IncrementCovariance::scaled(double c) const noexcept {
    return {c * var_eta, c * var_etahat, c * cov_eta_etahat, c * cov_eta_dw, c * cov_etahat_dw, c * var_dw};
}

namespace {

constexpr int kSeriesTerms = 40;

// Kernel integrals for gamma = 1.
IncrementCovariance unit_covariance_series(const ModeData& m, double k) {
    // Taylor coefficients in x = tau / k of s2(tau)/k and s4(tau), from
    // s2' = s4, s4' = -lambda s2 - alpha lambda s4, s2(0) = 0, s4(0) = 1.
    std::array<double, kSeriesTerms> a{};
    std::array<double, kSeriesTerms> b{};
    const double lk2 = m.lambda * k * k;
    const double alk = m.alpha * m.lambda * k;
    a[0] = 0.0;
    b[0] = 1.0;
    for (int n = 0; n + 1 < kSeriesTerms; ++n) {
        a[n + 1] = b[n] / (n + 1);
        b[n + 1] = (-lk2 * a[n] - alk * b[n]) / (n + 1);
    }
    double i2 = 0.0, i4 = 0.0, i22 = 0.0, i44 = 0.0, i24 = 0.0;
    for (int n = kSeriesTerms - 1; n >= 0; --n) {
        i2 += a[n] / (n + 1);
        i4 += b[n] / (n + 1);
    }
    for (int p = 2 * kSeriesTerms - 2; p >= 0; --p) {
        double aa = 0.0, bb = 0.0, ab = 0.0;
        for (int n = std::max(0, p - kSeriesTerms + 1); n <= std::min(p, kSeriesTerms - 1); ++n) {
            aa += a[n] * a[p - n];
            bb += b[n] * b[p - n];
            ab += a[n] * b[p - n];
        }
        i22 += aa / (p + 1);
        i44 += bb / (p + 1);
        i24 += ab / (p + 1);
    }
    return {k * k * k * i22, k * i44, k * k * i24, k * k * i2, k * i4, k};
}

IncrementCovariance unit_covariance_identities(const ModeData& m, double k) {
    const SemigroupMatrix s = semigroup_coeffs(m, k);
    const double lambda = m.lambda;
    const double al = m.alpha * lambda;
    IncrementCovariance c;
    c.cov_eta_etahat = 0.5 * s.s2 * s.s2;
    c.var_etahat = (1.0 - s.s4 * s.s4 - lambda * s.s2 * s.s2) / (2.0 * al);
    c.var_eta = (c.var_etahat - al * c.cov_eta_etahat - s.s2 * s.s4) / lambda;
    c.cov_eta_dw = (1.0 - s.s1) / lambda;
    c.cov_etahat_dw = s.s2;
    c.var_dw = k;
    return c;
}

}  // namespace

IncrementCovariance increment_covariance(const ModeData& mode, double k) {
    if (!(k > 0.0)) {
        throw std::invalid_argument("increment_covariance: step size must be positive");
    }
    if (mode.gamma == 0.0) {
        return {};
    }
    const IncrementCovariance unit = mode.fast_rate() * k <= 1.0 ? unit_covariance_series(mode, k)
                                                                  : unit_covariance_identities(mode, k);
    return unit.scaled(mode.gamma);
}

IncrementCovariance covariance_quadrature_oracle(const ModeData& mode, double k) {
    if (!(k > 0.0)) {
        throw std::invalid_argument("covariance_quadrature_oracle: step size must be positive");
    }
    using Rule = boost::math::quadrature::gauss<double, 30>;
    // Panels [0, h], [h, 2h], [2h, 4h], ... up to k, with h <= 1/(4|root_plus|).
    double h = k;
    while (h * mode.fast_rate() > 0.25) {
        h *= 0.5;
    }
    std::vector<double> breaks{0.0};
    for (double b = h; b < k; b *= 2.0) {
        breaks.push_back(b);
    }
    breaks.push_back(k);

    IncrementCovariance sum;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double lo = breaks[p];
        const double hi = breaks[p + 1];
        auto integrate = [&](auto&& g) {
            return Rule::integrate([&](double tau) { return g(semigroup_coeffs(mode, tau)); }, lo, hi);
        };
        sum.var_eta += integrate([](const SemigroupMatrix& s) { return s.s2 * s.s2; });
        sum.var_etahat += integrate([](const SemigroupMatrix& s) { return s.s4 * s.s4; });
        sum.cov_eta_etahat += integrate([](const SemigroupMatrix& s) { return s.s2 * s.s4; });
        sum.cov_eta_dw += integrate([](const SemigroupMatrix& s) { return s.s2; });
        sum.cov_etahat_dw += integrate([](const SemigroupMatrix& s) { return s.s4; });
        sum.var_dw += integrate([](const SemigroupMatrix&) { return 1.0; });
    }
    return sum.scaled(mode.gamma);
}

CholeskyFactor cholesky(const std::array<std::array<double, 3>, 3>& c, int dims) {
    if (dims != 2 && dims != 3) {
        throw std::invalid_argument("cholesky: dims must be 2 or 3");
    }
    double scale = 0.0;
    for (int i = 0; i < dims; ++i) {
        for (int j = 0; j < dims; ++j) {
            scale = std::max(scale, std::abs(c[i][j]));
        }
    }
    const double tol = cholesky_pivot_tolerance * scale;
    CholeskyFactor f;
    f.dims = dims;
    auto& l = f.lower;
    for (int j = 0; j < dims; ++j) {
        double pivot = c[j][j];
        for (int p = 0; p < j; ++p) {
            pivot -= l[j][p] * l[j][p];
        }
        if (pivot < -tol) {
            throw NotPositiveSemidefinite("cholesky: pivot " + std::to_string(j) + " = " +
                                          std::to_string(pivot) + " is negative beyond tolerance");
        }
        if (pivot <= 0.0) {
            continue;  // column stays zero
        }
        l[j][j] = std::sqrt(pivot);
        for (int i = j + 1; i < dims; ++i) {
            double v = c[i][j];
            for (int p = 0; p < j; ++p) {
                v -= l[i][p] * l[j][p];
            }
            l[i][j] = v / l[j][j];
        }
    }
    return f;
}

CholeskyFactor cholesky(const IncrementCovariance& cov, int dims) { return cholesky(cov.matrix(), dims); }

NoiseSampler::NoiseSampler(std::span<const ModeData> modes, double k) : k_(k) {
    mode_ids_.reserve(modes.size());
    factors_.reserve(modes.size());
    for (const ModeData& m : modes) {
        mode_ids_.push_back(static_cast<std::uint32_t>(m.j));
        factors_.push_back(cholesky(increment_covariance(m, k), 3));
    }
}

NoiseTriple NoiseSampler::draw(std::size_t i, std::uint64_t seed, std::uint64_t sample,
                               std::uint64_t step) const noexcept {
    const auto& l = factors_[i].lower;
    const auto z = standard_normals({seed, sample, step, mode_ids_[i]});
    return {l[0][0] * z[0], l[1][0] * z[0] + l[1][1] * z[1], l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2]};
}

void NoiseSampler::draw_step(std::uint64_t seed, std::uint64_t sample, std::uint64_t step,
                             std::span<NoiseTriple> out) const {
    if (out.size() > factors_.size()) {
        throw std::out_of_range("NoiseSampler::draw_step: more modes requested than precomputed");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = draw(i, seed, sample, step);
    }
}

}  // namespace sdwave
