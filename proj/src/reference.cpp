#include "dcrbm/reference.hpp"

#include <cmath>

#include "dcrbm/errors.hpp"
#include "dcrbm/numerics.hpp"

namespace dcrbm::reference {

namespace {

BinaryPattern pattern_from_code(std::uint64_t code, Eigen::Index length) {
    BinaryPattern out(length);
    for (Eigen::Index k = 0; k < length; ++k) {
        out[k] = static_cast<double>((code >> k) & 1U);
    }
    return out;
}

bool enumerate_visible(const RbmParams& params) { return params.dims.visible <= params.dims.hidden; }

// Unnormalized log-marginal of one state of the enumerated layer.
double log_marginal(const RbmParams& params, const BinaryPattern& state, bool over_visible) {
    if (over_visible) {
        return g_value(params, state);
    }
    double total = params.hidden_bias.dot(state);
    const Vector pre = params.weights.transpose() * state + params.visible_bias;
    for (Eigen::Index j = 0; j < pre.size(); ++j) {
        total += softplus(pre[j]);
    }
    return total;
}

Vector sample_bernoulli(const Vector& probs, RngStream& rng) {
    Vector out(probs.size());
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        out[k] = rng.bernoulli(probs[k]) ? 1.0 : 0.0;
    }
    return out;
}

} // namespace

double log_partition(const RbmParams& params) {
    const bool over_visible = enumerate_visible(params);
    const auto bits = static_cast<Eigen::Index>(over_visible ? params.dims.visible : params.dims.hidden);
    LogSumExp acc;
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
        acc.add(log_marginal(params, pattern_from_code(code, bits), over_visible));
    }
    return acc.value();
}

GradientRecord model_expectations(const RbmParams& params) {
    const double log_z = log_partition(params);
    const bool over_visible = enumerate_visible(params);
    const auto bits = static_cast<Eigen::Index>(over_visible ? params.dims.visible : params.dims.hidden);
    GradientRecord out = GradientRecord::zeros(params.dims);
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
        const BinaryPattern state = pattern_from_code(code, bits);
        const double p = std::exp(log_marginal(params, state, over_visible) - log_z);
        if (over_visible) {
            const Vector ph = hidden_conditional(params, state);
            out.dW += p * ph * state.transpose();
            out.db += p * state;
            out.dc += p * ph;
        } else {
            const Vector pv = visible_conditional(params, state);
            out.dW += p * state * pv.transpose();
            out.db += p * pv;
            out.dc += p * state;
        }
    }
    clamp_unit(out);
    return out;
}

Vector g_values(const RbmParams& params, const Matrix& patterns) {
    Vector out(patterns.cols());
    for (Eigen::Index col = 0; col < patterns.cols(); ++col) {
        out[col] = g_value(params, patterns.col(col));
    }
    return out;
}

void run_chains(const RbmParams& params, Matrix& states, int steps, const Vector& mu, const Vector& lambda,
                std::span<RngStream> rngs) {
    if (rngs.size() < static_cast<std::size_t>(states.cols())) {
        throw DimensionError("need one random stream per chain");
    }
    CenteringState offsets = CenteringState::zeros(params.dims);
    const bool centered_v = mu.size() > 0;
    const bool centered_h = lambda.size() > 0;
    if (centered_v) {
        offsets.mu = mu;
    }
    if (centered_h) {
        offsets.lambda = lambda;
    }
    for (Eigen::Index col = 0; col < states.cols(); ++col) {
        RngStream& rng = rngs[static_cast<std::size_t>(col)];
        BinaryPattern v = states.col(col);
        for (int k = 0; k < steps; ++k) {
            const Vector ph = centered_v ? hidden_conditional(params, v, offsets) : hidden_conditional(params, v);
            const BinaryPattern h = sample_bernoulli(ph, rng);
            const Vector pv = centered_h ? visible_conditional(params, h, offsets) : visible_conditional(params, h);
            v = sample_bernoulli(pv, rng);
        }
        states.col(col) = v;
    }
}

Vector ais_log_weights(const RbmParams& params, std::span<const double> betas, std::span<RngStream> particle_rngs) {
    const std::size_t ladder = betas.size();
    Vector logw(static_cast<Eigen::Index>(particle_rngs.size()));

    // log p*_beta(v) = b.v + sum_i softplus(beta (W_i v + c_i))
    const auto log_unnormalized = [&](const BinaryPattern& v, double beta) {
        const Vector act = params.weights * v + params.hidden_bias;
        double total = params.visible_bias.dot(v);
        for (Eigen::Index i = 0; i < act.size(); ++i) {
            total += softplus(beta * act[i]);
        }
        return total;
    };

    const Vector base_probs = params.visible_bias.unaryExpr([](double b) { return sigmoid(b); });
    for (std::size_t p = 0; p < particle_rngs.size(); ++p) {
        RngStream& rng = particle_rngs[p];
        BinaryPattern v = sample_bernoulli(base_probs, rng);
        double w = 0.0;
        for (std::size_t k = 1; k < ladder; ++k) {
            w += log_unnormalized(v, betas[k]) - log_unnormalized(v, betas[k - 1]);
            if (k + 1 == ladder) {
                break;
            }
            const double beta = betas[k];
            const Vector act = params.weights * v + params.hidden_bias;
            const Vector ph = act.unaryExpr([beta](double a) { return sigmoid(beta * a); });
            const BinaryPattern h = sample_bernoulli(ph, rng);
            const Vector pv = (beta * (params.weights.transpose() * h) + params.visible_bias)
                                  .unaryExpr([](double a) { return sigmoid(a); });
            v = sample_bernoulli(pv, rng);
        }
        logw[static_cast<Eigen::Index>(p)] = w;
    }
    return logw;
}

} // namespace dcrbm::reference
