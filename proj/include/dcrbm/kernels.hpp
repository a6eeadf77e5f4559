#pragma once

// Data-parallel kernels (OpenMP). Every kernel splits its work into a fixed
// number of chunks that does not depend on the thread count and combines the
// partial results in chunk order, so results are bitwise reproducible for any
// OMP_NUM_THREADS. Serial reference versions live in reference.hpp.

#include <span>

#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"

namespace dcrbm {

/// Sets the worker count used by the kernels (0 keeps the OpenMP default).
void set_kernel_threads(int threads);
int kernel_threads();

namespace kernels {

/// log Z by blocked enumeration over the smaller layer.
double log_partition(const RbmParams& params);

/// Exact model expectations (the gradient of log Z).
GradientRecord model_expectations(const RbmParams& params);

/// g(theta, v) for every column of `patterns`.
Vector g_values(const RbmParams& params, const Matrix& patterns);

/// Runs `steps` block-Gibbs transitions on every column of `states` in place,
/// column i drawing from rngs[i]. `mu`/`lambda` may be empty for no offsets.
void run_chains(const RbmParams& params, Matrix& states, int steps, const Vector& mu, const Vector& lambda,
                std::span<RngStream> rngs);

/// AIS log importance weights, one per particle; particle p draws from
/// particle_rngs[p]. `betas` is the strictly increasing ladder from 0 to 1.
Vector ais_log_weights(const RbmParams& params, std::span<const double> betas, std::span<RngStream> particle_rngs);

} // namespace kernels
} // namespace dcrbm
