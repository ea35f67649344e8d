#pragma once

#include <vector>

#include "sdwave/noise.hpp"
#include "sdwave/nonlinearity.hpp"
#include "sdwave/spectral.hpp"

namespace sdwave {

/// u_tt = -A u - alpha A u_t + F(u) + dW/dt on (0,1) x (0, t_end],
/// truncated to the first n_modes eigenfunctions.
struct ProblemConfig {
    double alpha = 1.0;
    int n_modes = 64;
    NoiseSpec noise = NoiseSpec::white();
    NemytskiiSpec nonlinearity = rational_nonlinearity();
    double t_end = 1.0;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
};

/// Modes j = 1..n_modes with gamma_j from the noise spec.
std::vector<ModeData> build_modes(const ProblemConfig& config);

}  // namespace sdwave
