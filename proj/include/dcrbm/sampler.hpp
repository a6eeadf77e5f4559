#pragma once

#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"

namespace dcrbm {

/// Visible state of one Gibbs chain together with its private stream.
struct ChainState {
    BinaryPattern v;
    RngStream rng;
};

struct GibbsSample {
    BinaryPattern v;  // v' ~ p(v | h)
    BinaryPattern h;  // h ~ p(h | v)
};

/// One block-Gibbs transition. Consumes exactly m + n draws from `rng`:
/// hidden units 0..n-1 first, then visible units 0..m-1. Pass `offsets` for
/// the centered conditionals; null means the plain model.
GibbsSample gibbs_transition(const RbmParams& params, const BinaryPattern& v, RngStream& rng,
                             const CenteringState* offsets = nullptr);

/// K transitions threaded through the visible state. K = 0 returns v0.
BinaryPattern run_chain(const RbmParams& params, const BinaryPattern& v0, int steps, RngStream& rng,
                        const CenteringState* offsets = nullptr);

/// Rao-Blackwellized estimate of grad f at the chain end vK:
/// dW = p(h|vK) vK^T, db = vK, dc = p(h|vK). Draws nothing.
GradientRecord estimate_grad_f(const RbmParams& params, const BinaryPattern& vK,
                               const CenteringState* offsets = nullptr);

/// Number of transitions a stream has performed, from its draw count.
inline std::uint64_t transitions_performed(const RngStream& rng, ModelDims dims) {
    return rng.position() / (dims.visible + dims.hidden);
}

} // namespace dcrbm
