#pragma once

#include "dcrbm/model.hpp"
#include "dcrbm/numerics.hpp"
#include "dcrbm/rng.hpp"

namespace dcrbm::detail {

/// Scratch buffers for one chain so the hot loop does not allocate.
struct GibbsScratch {
    Vector centered_v;
    Vector centered_h;
    Vector pre_hidden;
    Vector pre_visible;
    Vector h;

    explicit GibbsScratch(ModelDims dims)
        : centered_v(static_cast<Eigen::Index>(dims.visible)),
          centered_h(static_cast<Eigen::Index>(dims.hidden)),
          pre_hidden(static_cast<Eigen::Index>(dims.hidden)),
          pre_visible(static_cast<Eigen::Index>(dims.visible)),
          h(static_cast<Eigen::Index>(dims.hidden)) {}
};

/// One block-Gibbs transition in place: h ~ p(h|v), then v ~ p(v|h).
/// Draws hidden 0..n-1 then visible 0..m-1, exactly m + n uniforms.
/// `mu`/`lambda` are null for the uncentered model.
template <typename VisibleRef>
inline void gibbs_step(const RbmParams& params, VisibleRef&& v, const Vector* mu, const Vector* lambda,
                       RngStream& rng, GibbsScratch& s) {
    if (mu != nullptr) {
        s.centered_v = v - *mu;
        s.pre_hidden.noalias() = params.weights * s.centered_v;
    } else {
        s.pre_hidden.noalias() = params.weights * v;
    }
    s.pre_hidden += params.hidden_bias;
    for (Eigen::Index i = 0; i < s.h.size(); ++i) {
        s.h[i] = rng.bernoulli(sigmoid(s.pre_hidden[i])) ? 1.0 : 0.0;
    }
    if (lambda != nullptr) {
        s.centered_h = s.h - *lambda;
        s.pre_visible.noalias() = params.weights.transpose() * s.centered_h;
    } else {
        s.pre_visible.noalias() = params.weights.transpose() * s.h;
    }
    s.pre_visible += params.visible_bias;
    for (Eigen::Index j = 0; j < s.pre_visible.size(); ++j) {
        v[j] = rng.bernoulli(sigmoid(s.pre_visible[j])) ? 1.0 : 0.0;
    }
}

} // namespace dcrbm::detail
