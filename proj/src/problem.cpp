#include "sdwave/problem.hpp"

#include <cmath>

#include "sdwave/errors.hpp"

namespace sdwave {

void ProblemConfig::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ConfigError("alpha", "must be a positive finite number");
    }
    if (n_modes < 1) {
        throw ConfigError("modes", "must be >= 1");
    }
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw ConfigError("t_end", "must be a positive finite number");
    }
    if (noise.kind == NoiseKind::fractional_power && !(noise.exponent >= 0.0)) {
        throw ConfigError("exponent", "must be >= 0");
    }
    if (nonlinearity.quadrature_points != 0 && nonlinearity.quadrature_points < 2 * n_modes + 1) {
        throw ConfigError("quadrature_points", "must be >= 2 * modes + 1");
    }
}

std::vector<ModeData> build_modes(const ProblemConfig& config) {
    std::vector<ModeData> modes;
    modes.reserve(config.n_modes);
    for (int j = 1; j <= config.n_modes; ++j) {
        const double lambda = eigenvalue(j);
        modes.push_back(dirichlet_mode(j, config.alpha, config.noise.eigenvalue(lambda)));
    }
    return modes;
}

}  // namespace sdwave
