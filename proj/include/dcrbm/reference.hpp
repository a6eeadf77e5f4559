#pragma once

// Straightforward serial implementations of the kernels in kernels.hpp.
// They are kept for testing and benchmarking only: one state, one chain or
// one particle at a time, with no blocking.

#include <span>

#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"

namespace dcrbm::reference {

double log_partition(const RbmParams& params);

GradientRecord model_expectations(const RbmParams& params);

Vector g_values(const RbmParams& params, const Matrix& patterns);

void run_chains(const RbmParams& params, Matrix& states, int steps, const Vector& mu, const Vector& lambda,
                std::span<RngStream> rngs);

Vector ais_log_weights(const RbmParams& params, std::span<const double> betas, std::span<RngStream> particle_rngs);

} // namespace dcrbm::reference
