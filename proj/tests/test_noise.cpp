#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/noise.hpp"

using namespace sdwave;
using std::numbers::pi;

namespace {

const int kModes[] = {1, 2, 4, 16, 64, 256};
const double kAlphas[] = {0.1, 1.0, 10.0};
const double kSteps[] = {0x1.0p-2, 0x1.0p-6, 0x1.0p-10};

std::array<double, 6> entries(const IncrementCovariance& c) {
    return {c.var_eta, c.var_etahat, c.cov_eta_etahat, c.cov_eta_dw, c.cov_etahat_dw, c.var_dw};
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("uniform mapping stays inside the open interval") {
    CHECK(to_open_unit(0, 0) > 0.0);
    CHECK(to_open_unit(0xffffffff, 0xffffffff) < 1.0);
    CHECK(to_open_unit(0x80000000, 0) == doctest::Approx(0.5));
}

TEST_CASE("standard normals have unit variance and are key-dependent") {
    const int n = 200000;
    double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0}, cross = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto z = standard_normals({7, 0, static_cast<std::uint64_t>(i), 3});
        for (int c = 0; c < 3; ++c) {
            sum[c] += z[c];
            sq[c] += z[c] * z[c];
        }
        cross += z[0] * z[2];
    }
    for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(sum[c] / n) < 5.0 / std::sqrt(n));
        CHECK(std::abs(sq[c] / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    }
    CHECK(std::abs(cross / n) < 5.0 / std::sqrt(n));

    const auto a = standard_normals({1, 2, 3, 4});
    CHECK(a == standard_normals({1, 2, 3, 4}));
    CHECK(a != standard_normals({1, 2, 3, 5}));
    CHECK(a != standard_normals({1, 3, 3, 4}));
    CHECK(a != standard_normals({2, 2, 3, 4}));
    CHECK(a != standard_normals({1, 2, 3ull | (1ull << 32), 4}));
}

TEST_CASE("noise spec eigenvalues and regularity") {
    CHECK(NoiseSpec::white().eigenvalue(1234.0) == 1.0);
    CHECK(NoiseSpec::none().eigenvalue(3.0) == 0.0);
    const NoiseSpec f = NoiseSpec::fractional(0.5005);
    CHECK(f.eigenvalue(pi * pi) == doctest::Approx(std::pow(pi * pi, -0.5005)));
    double prev = 2.0;
    for (int j = 1; j < 50; ++j) {
        const double g = f.eigenvalue(j * j * pi * pi);
        CHECK(g <= prev);
        prev = g;
    }
    CHECK(NoiseSpec::white().regularity_consistent());
    CHECK(f.regularity_consistent());
    NoiseSpec bad = NoiseSpec::white();
    bad.regularity_gamma = 0.7;
    CHECK_FALSE(bad.regularity_consistent());
}

TEST_CASE("covariance examples") {
    SUBCASE("gamma zero gives zeros") {
        const auto c = increment_covariance(mode_from_eigenvalue(pi * pi, 1.0, 0.0), 0.25);
        for (double e : entries(c)) {
            CHECK(e == 0.0);
        }
    }
    SUBCASE("small-step limits") {
        // The first correction is O(alpha lambda k).
        for (double alpha : kAlphas) {
            const double k = alpha > 1.0 ? 1e-6 : 1e-4;
            const auto c = increment_covariance(mode_from_eigenvalue(pi * pi, alpha, 2.0), k);
            CHECK(c.var_eta / (2.0 * k * k * k) == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
            CHECK(c.var_etahat / (2.0 * k) == doctest::Approx(1.0).epsilon(1e-3));
            CHECK(c.cov_etahat_dw / (2.0 * k) == doctest::Approx(1.0).epsilon(1e-3));
        }
    }
    SUBCASE("reference values at lambda = pi^2, alpha = 1") {
        // 40-digit quadrature of the semigroup integrands.
        const auto c = increment_covariance(mode_from_eigenvalue(pi * pi, 1.0), 0.125);
        CHECK(c.var_eta == doctest::Approx(0.00027700931200564298).epsilon(1e-12));
        CHECK(c.var_etahat == doctest::Approx(0.044881142478978742).epsilon(1e-12));
        CHECK(c.cov_eta_etahat == doctest::Approx(0.0024519756587784478).epsilon(1e-12));
        CHECK(c.cov_eta_dw == doctest::Approx(0.0053259260581540477).epsilon(1e-12));
        CHECK(c.cov_etahat_dw == doctest::Approx(0.070028218009291765).epsilon(1e-12));
        CHECK(c.var_dw == 0.125);
        const auto q = covariance_quadrature_oracle(mode_from_eigenvalue(pi * pi, 1.0), 0.125);
        const auto ce = entries(c), qe = entries(q);
        for (int i = 0; i < 6; ++i) {
            CHECK(ce[i] == doctest::Approx(qe[i]).epsilon(1e-10));
        }
    }
}

TEST_CASE("quadrature oracle examples") {
    CHECK(covariance_quadrature_oracle(mode_from_eigenvalue(4 * pi * pi, 1.0), 0.25).var_dw == 0.25);
    const ModeData m = mode_from_eigenvalue(pi * pi, 1.0);
    const auto q = covariance_quadrature_oracle(m, 0.5);
    const double a = m.roots.minus.real(), b = m.roots.plus.real();
    CHECK(q.cov_etahat_dw == doctest::Approx((std::exp(-0.5 * a) - std::exp(-0.5 * b)) / (b - a)).epsilon(1e-12));
    const auto q025 = covariance_quadrature_oracle(m, 0.25);
    CHECK(q025.var_eta == doctest::Approx(0.0010711205236744790).epsilon(1e-12));
    CHECK(q025.var_etahat == doctest::Approx(0.047092693876971004).epsilon(1e-12));
    CHECK(q025.cov_eta_dw == doctest::Approx(0.015275847284941050).epsilon(1e-12));
    const auto tiny = covariance_quadrature_oracle(m, 1e-300);
    for (double e : entries(tiny)) {
        CHECK(std::abs(e) < 1e-299);
    }
}

TEST_CASE("closed form agrees with both oracles over the grid") {
    for (int j : kModes) {
        for (double alpha : kAlphas) {
            for (double k : kSteps) {
                const ModeData m = dirichlet_mode(j, alpha);
                const auto c = entries(increment_covariance(m, k));
                const auto q = entries(covariance_quadrature_oracle(m, k));
                const auto x = oracle::explicit_covariance(m.lambda, alpha, 1.0L, k);
                const long double xe[6] = {x.var_eta, x.var_etahat, x.cov_eta_etahat,
                                           x.cov_eta_dw, x.cov_etahat_dw, x.var_dw};
                INFO("j=" << j << " alpha=" << alpha << " k=" << k);
                for (int i = 0; i < 6; ++i) {
                    CHECK(std::abs(c[i] - q[i]) <= 1e-9 * k);
                    CHECK(std::abs(c[i] - static_cast<double>(xe[i])) <= 1e-9 * k);
                }
            }
        }
    }
}

TEST_CASE("covariance structure: PSD, Cauchy-Schwarz, bounds, gamma-linearity") {
    for (int j : kModes) {
        for (double alpha : kAlphas) {
            for (double k : kSteps) {
                const ModeData m = dirichlet_mode(j, alpha);
                const IncrementCovariance c = increment_covariance(m, k);
                INFO("j=" << j << " alpha=" << alpha << " k=" << k);
                CHECK(c.var_eta >= 0.0);
                CHECK(c.var_etahat >= 0.0);
                CHECK(c.var_dw == k);
                CHECK(c.cov_eta_etahat * c.cov_eta_etahat <= c.var_eta * c.var_etahat * (1 + 1e-12));
                CHECK(c.var_eta <= k * k * k / 3.0 * (1 + 1e-12));
                CHECK_NOTHROW(cholesky(c, 3));

                const IncrementCovariance scaled = increment_covariance(dirichlet_mode(j, alpha, 0.3), k);
                const auto s = entries(scaled), ref = entries(c.scaled(0.3));
                for (int i = 0; i < 6; ++i) {
                    CHECK(s[i] == ref[i]);
                }
            }
        }
    }
}

TEST_CASE("cholesky") {
    using M = std::array<std::array<double, 3>, 3>;
    SUBCASE("identity") {
        const auto f = cholesky(M{{{1, 0, 0}, {0, 1, 0}, {0, 0, 0}}}, 2);
        CHECK(f.dims == 2);
        CHECK(f.lower[0][0] == 1.0);
        CHECK(f.lower[1][1] == 1.0);
        CHECK(f.lower[1][0] == 0.0);
    }
    SUBCASE("hand example") {
        const auto f = cholesky(M{{{4, 2, 0}, {2, 5, 0}, {0, 0, 0}}}, 2);
        CHECK(f.lower[0][0] == doctest::Approx(2.0));
        CHECK(f.lower[1][0] == doctest::Approx(1.0));
        CHECK(f.lower[1][1] == doctest::Approx(2.0));
        CHECK(f.lower[0][1] == 0.0);
    }
    SUBCASE("zero matrix") {
        const auto f = cholesky(IncrementCovariance{}, 3);
        for (const auto& row : f.lower) {
            for (double e : row) {
                CHECK(e == 0.0);
            }
        }
    }
    SUBCASE("tiny negative pivot is clamped") {
        const auto f = cholesky(M{{{1, 1, 0}, {1, 1 - 1e-15, 0}, {0, 0, 1}}}, 3);
        CHECK(f.lower[1][1] == 0.0);
        CHECK(f.lower[2][2] == doctest::Approx(1.0));
    }
    SUBCASE("indefinite matrix is rejected") {
        CHECK_THROWS_AS(cholesky(M{{{1, 2, 0}, {2, 1, 0}, {0, 0, 1}}}, 3), NotPositiveSemidefinite);
    }
    SUBCASE("reconstruction over the grid") {
        for (int j : kModes) {
            for (double alpha : kAlphas) {
                for (double k : kSteps) {
                    const auto c = increment_covariance(dirichlet_mode(j, alpha), k).matrix();
                    const auto f = cholesky(c, 3);
                    for (int r = 0; r < 3; ++r) {
                        CHECK(f.lower[r][r] >= 0.0);
                        for (int q = 0; q < 3; ++q) {
                            double v = 0.0;
                            for (int p = 0; p < 3; ++p) {
                                v += f.lower[r][p] * f.lower[q][p];
                            }
                            CHECK(std::abs(v - c[r][q]) <= 1e-12);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("sampler") {
    SUBCASE("degenerate mode draws zeros") {
        const std::vector<ModeData> modes{mode_from_eigenvalue(pi * pi, 1.0, 0.0)};
        const NoiseSampler s(modes, 0.25);
        for (std::uint64_t step = 0; step < 10; ++step) {
            const NoiseTriple t = s.draw(0, 1, 2, step);
            CHECK(t.eta == 0.0);
            CHECK(t.etahat == 0.0);
            CHECK(t.dw == 0.0);
        }
    }
    SUBCASE("draws depend only on the key") {
        std::vector<ModeData> modes;
        for (int j = 1; j <= 8; ++j) {
            modes.push_back(dirichlet_mode(j, 1.0));
        }
        const NoiseSampler s(modes, 0.01);
        std::vector<NoiseTriple> a(8), b(8);
        s.draw_step(9, 3, 17, a);
        s.draw_step(9, 3, 17, b);
        for (int i = 0; i < 8; ++i) {
            CHECK(a[i].eta == b[i].eta);
            CHECK(a[i].dw == b[i].dw);
        }
        // A sampler over a prefix of the modes sees the same triples.
        const NoiseSampler prefix(std::span<const ModeData>(modes).first(3), 0.01);
        std::vector<NoiseTriple> c(3);
        prefix.draw_step(9, 3, 17, c);
        for (int i = 0; i < 3; ++i) {
            CHECK(c[i].etahat == a[i].etahat);
        }
        std::vector<NoiseTriple> too_many(9);
        CHECK_THROWS(s.draw_step(9, 3, 17, too_many));
    }
    SUBCASE("empirical covariance over 10^6 draws") {
        const std::vector<ModeData> modes{mode_from_eigenvalue(pi * pi, 1.0, 1.0)};
        const NoiseSampler s(modes, 0.25);
        const auto c = increment_covariance(modes[0], 0.25);
        const int n = 1000000;
        double m[3][3] = {};
        for (int i = 0; i < n; ++i) {
            const NoiseTriple t = s.draw(0, 5, 0, static_cast<std::uint64_t>(i));
            const double x[3] = {t.eta, t.etahat, t.dw};
            for (int r = 0; r < 3; ++r) {
                for (int q = 0; q < 3; ++q) {
                    m[r][q] += x[r] * x[q] / n;
                }
            }
        }
        CHECK(m[0][0] == doctest::Approx(c.var_eta).epsilon(0.01));
        CHECK(m[1][1] == doctest::Approx(c.var_etahat).epsilon(0.01));
        CHECK(m[2][2] == doctest::Approx(c.var_dw).epsilon(0.01));
        const double rho = m[1][2] / std::sqrt(m[1][1] * m[2][2]);
        CHECK(std::abs(rho - c.cov_etahat_dw / std::sqrt(c.var_etahat * c.var_dw)) < 0.01);
    }
}
