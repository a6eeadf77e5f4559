#include "dcrbm/sampler.hpp"

#include "dcrbm/errors.hpp"
#include "gibbs_step.hpp"

namespace dcrbm {

namespace {

void check_visible(const RbmParams& params, const BinaryPattern& v) {
    if (static_cast<std::size_t>(v.size()) != params.dims.visible) {
        throw DimensionError("visible pattern length does not match the model");
    }
}

} // namespace

GibbsSample gibbs_transition(const RbmParams& params, const BinaryPattern& v, RngStream& rng,
                             const CenteringState* offsets) {
    check_visible(params, v);
    if (offsets != nullptr) {
        offsets->validate(params.dims);
    }
    detail::GibbsScratch scratch(params.dims);
    GibbsSample out{v, BinaryPattern()};
    detail::gibbs_step(params, out.v, offsets ? &offsets->mu : nullptr, offsets ? &offsets->lambda : nullptr, rng,
                       scratch);
    out.h = scratch.h;
    return out;
}

BinaryPattern run_chain(const RbmParams& params, const BinaryPattern& v0, int steps, RngStream& rng,
                        const CenteringState* offsets) {
    check_visible(params, v0);
    if (offsets != nullptr) {
        offsets->validate(params.dims);
    }
    detail::GibbsScratch scratch(params.dims);
    BinaryPattern v = v0;
    for (int k = 0; k < steps; ++k) {
        detail::gibbs_step(params, v, offsets ? &offsets->mu : nullptr, offsets ? &offsets->lambda : nullptr, rng,
                           scratch);
    }
    return v;
}

GradientRecord estimate_grad_f(const RbmParams& params, const BinaryPattern& vK, const CenteringState* offsets) {
    check_visible(params, vK);
    const Vector ph = offsets ? hidden_conditional(params, vK, *offsets) : hidden_conditional(params, vK);
    return GradientRecord{ph * vK.transpose(), vK, ph};
}

} // namespace dcrbm
