#include "dcrbm/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <vector>

#include "dcrbm/errors.hpp"
#include "dcrbm/numerics.hpp"
#include "gibbs_step.hpp"

namespace dcrbm {

namespace {

std::atomic<int> g_threads{0};

int threads_for_kernels() {
    const int t = g_threads.load(std::memory_order_relaxed);
    return t > 0 ? t : omp_get_max_threads();
}

// Fixed partitioning of a 2^bits state space.
constexpr std::uint64_t kStatesPerBlock = 256;
constexpr std::uint64_t kMaxChunks = 64;

struct Partition {
    std::uint64_t total = 0;
    std::uint64_t chunks = 0;
    std::uint64_t per_chunk = 0;

    explicit Partition(std::uint64_t total_states) : total(total_states) {
        const std::uint64_t blocks = (total + kStatesPerBlock - 1) / kStatesPerBlock;
        chunks = std::min<std::uint64_t>(kMaxChunks, blocks);
        per_chunk = (total + chunks - 1) / chunks;
    }
    std::uint64_t begin(std::uint64_t chunk) const { return std::min(total, chunk * per_chunk); }
    std::uint64_t end(std::uint64_t chunk) const { return std::min(total, (chunk + 1) * per_chunk); }
};

// Columns of `out` are the binary expansions of first .. first + out.cols() - 1.
void fill_states(Matrix& out, std::uint64_t first) {
    for (Eigen::Index col = 0; col < out.cols(); ++col) {
        const std::uint64_t code = first + static_cast<std::uint64_t>(col);
        for (Eigen::Index bit = 0; bit < out.rows(); ++bit) {
            out(bit, col) = static_cast<double>((code >> bit) & 1U);
        }
    }
}

// Unnormalized log-marginals of a block of states of the enumerated layer.
// Enumerating visible states: b.v + sum_i softplus(W_i v + c_i).
// Enumerating hidden states:  c.h + sum_j softplus(W_j^T h + b_j).
struct Enumerator {
    const RbmParams& params;
    bool over_visible;
    Eigen::Index bits;

    explicit Enumerator(const RbmParams& p)
        : params(p), over_visible(p.dims.visible <= p.dims.hidden),
          bits(static_cast<Eigen::Index>(over_visible ? p.dims.visible : p.dims.hidden)) {}

    std::uint64_t state_count() const { return std::uint64_t{1} << bits; }

    // Fills `states`, the complementary-layer conditional means `cond` and
    // returns log-weights per column.
    Vector block(std::uint64_t first, Eigen::Index count, Matrix& states, Matrix& pre) const {
        states.resize(bits, count);
        fill_states(states, first);
        Vector logw;
        if (over_visible) {
            pre.noalias() = params.weights * states;
            pre.colwise() += params.hidden_bias;
            logw = params.visible_bias.transpose() * states;
        } else {
            pre.noalias() = params.weights.transpose() * states;
            pre.colwise() += params.visible_bias;
            logw = params.hidden_bias.transpose() * states;
        }
        for (Eigen::Index col = 0; col < count; ++col) {
            double acc = 0.0;
            for (Eigen::Index r = 0; r < pre.rows(); ++r) {
                acc += softplus(pre(r, col));
            }
            logw[col] += acc;
        }
        return logw;
    }
};

} // namespace

void set_kernel_threads(int threads) { g_threads.store(std::max(0, threads), std::memory_order_relaxed); }

int kernel_threads() { return threads_for_kernels(); }

namespace kernels {

double log_partition(const RbmParams& params) {
    const Enumerator en(params);
    const Partition part(en.state_count());
    std::vector<LogSumExp> partial(part.chunks);

#pragma omp parallel for num_threads(threads_for_kernels()) schedule(static)
    for (std::int64_t chunk = 0; chunk < static_cast<std::int64_t>(part.chunks); ++chunk) {
        Matrix states;
        Matrix pre;
        LogSumExp acc;
        const auto c = static_cast<std::uint64_t>(chunk);
        for (std::uint64_t first = part.begin(c); first < part.end(c); first += kStatesPerBlock) {
            const auto count = static_cast<Eigen::Index>(std::min(kStatesPerBlock, part.end(c) - first));
            const Vector logw = en.block(first, count, states, pre);
            for (Eigen::Index i = 0; i < count; ++i) {
                acc.add(logw[i]);
            }
        }
        partial[c] = acc;
    }

    LogSumExp total;
    for (const auto& p : partial) {
        total.merge(p);
    }
    return total.value();
}

GradientRecord model_expectations(const RbmParams& params) {
    const double log_z = log_partition(params);
    const Enumerator en(params);
    const Partition part(en.state_count());
    std::vector<GradientRecord> partial(part.chunks, GradientRecord::zeros(params.dims));

#pragma omp parallel for num_threads(threads_for_kernels()) schedule(static)
    for (std::int64_t chunk = 0; chunk < static_cast<std::int64_t>(part.chunks); ++chunk) {
        Matrix states;
        Matrix pre;
        const auto c = static_cast<std::uint64_t>(chunk);
        GradientRecord& acc = partial[c];
        for (std::uint64_t first = part.begin(c); first < part.end(c); first += kStatesPerBlock) {
            const auto count = static_cast<Eigen::Index>(std::min(kStatesPerBlock, part.end(c) - first));
            const Vector logw = en.block(first, count, states, pre);
            const Vector prob = (logw.array() - log_z).exp().matrix();
            const Matrix cond = pre.unaryExpr([](double t) { return sigmoid(t); });
            if (en.over_visible) {
                // states: visible (m x B), cond: p(h|v) (n x B)
                acc.dW.noalias() += (cond * prob.asDiagonal()) * states.transpose();
                acc.db.noalias() += states * prob;
                acc.dc.noalias() += cond * prob;
            } else {
                // states: hidden (n x B), cond: p(v|h) (m x B)
                acc.dW.noalias() += (states * prob.asDiagonal()) * cond.transpose();
                acc.db.noalias() += cond * prob;
                acc.dc.noalias() += states * prob;
            }
        }
    }

    GradientRecord total = GradientRecord::zeros(params.dims);
    for (const auto& p : partial) {
        total += p;
    }
    // Probabilities normalized in floating point can overshoot 1 by an ulp.
    clamp_unit(total);
    return total;
}

Vector g_values(const RbmParams& params, const Matrix& patterns) {
    if (static_cast<std::size_t>(patterns.rows()) != params.dims.visible) {
        throw DimensionError("pattern rows must equal the visible dimension");
    }
    const Eigen::Index count = patterns.cols();
    Vector out(count);

#pragma omp parallel for num_threads(threads_for_kernels()) schedule(static)
    for (Eigen::Index col = 0; col < count; ++col) {
        const Vector pre = params.weights * patterns.col(col) + params.hidden_bias;
        double total = params.visible_bias.dot(patterns.col(col));
        for (Eigen::Index i = 0; i < pre.size(); ++i) {
            total += softplus(pre[i]);
        }
        out[col] = total;
    }
    return out;
}

void run_chains(const RbmParams& params, Matrix& states, int steps, const Vector& mu, const Vector& lambda,
                std::span<RngStream> rngs) {
    if (static_cast<std::size_t>(states.rows()) != params.dims.visible) {
        throw DimensionError("chain states must have one row per visible unit");
    }
    if (rngs.size() < static_cast<std::size_t>(states.cols())) {
        throw DimensionError("need one random stream per chain");
    }
    const Vector* mu_ptr = mu.size() > 0 ? &mu : nullptr;
    const Vector* lambda_ptr = lambda.size() > 0 ? &lambda : nullptr;
    const Eigen::Index chains = states.cols();

#pragma omp parallel num_threads(threads_for_kernels())
    {
        detail::GibbsScratch scratch(params.dims);
        Vector v(static_cast<Eigen::Index>(params.dims.visible));
#pragma omp for schedule(static)
        for (Eigen::Index col = 0; col < chains; ++col) {
            v = states.col(col);
            RngStream& rng = rngs[static_cast<std::size_t>(col)];
            for (int k = 0; k < steps; ++k) {
                detail::gibbs_step(params, v, mu_ptr, lambda_ptr, rng, scratch);
            }
            states.col(col) = v;
        }
    }
}

Vector ais_log_weights(const RbmParams& params, std::span<const double> betas, std::span<RngStream> particle_rngs) {
    const auto particles = static_cast<Eigen::Index>(particle_rngs.size());
    const auto m = static_cast<Eigen::Index>(params.dims.visible);
    const auto n = static_cast<Eigen::Index>(params.dims.hidden);
    const auto ladder = static_cast<std::size_t>(betas.size());
    constexpr Eigen::Index kBlock = 32;
    const Eigen::Index blocks = (particles + kBlock - 1) / kBlock;
    Vector logw = Vector::Zero(particles);

#pragma omp parallel for num_threads(threads_for_kernels()) schedule(static)
    for (Eigen::Index blk = 0; blk < blocks; ++blk) {
        const Eigen::Index first = blk * kBlock;
        const Eigen::Index count = std::min(kBlock, particles - first);
        Matrix v(m, count);
        Matrix h(n, count);
        Matrix act(n, count);
        Matrix pre_v(m, count);
        Vector w = Vector::Zero(count);

        // Exact draw from the base model: independent visibles, p = sigmoid(b).
        for (Eigen::Index p = 0; p < count; ++p) {
            RngStream& rng = particle_rngs[static_cast<std::size_t>(first + p)];
            for (Eigen::Index j = 0; j < m; ++j) {
                v(j, p) = rng.bernoulli(sigmoid(params.visible_bias[j])) ? 1.0 : 0.0;
            }
        }

        // The b.v term is common to every intermediate distribution and
        // cancels in the ratios, so only the hidden softplus terms enter.
        for (std::size_t k = 1; k < ladder; ++k) {
            const double beta_prev = betas[k - 1];
            const double beta = betas[k];
            act.noalias() = params.weights * v;
            act.colwise() += params.hidden_bias;
            for (Eigen::Index p = 0; p < count; ++p) {
                double ratio = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    ratio += softplus(beta * act(i, p)) - softplus(beta_prev * act(i, p));
                }
                w[p] += ratio;
            }
            if (k + 1 == ladder) {
                break;
            }
            // One Gibbs sweep leaving p_beta invariant.
            for (Eigen::Index p = 0; p < count; ++p) {
                RngStream& rng = particle_rngs[static_cast<std::size_t>(first + p)];
                for (Eigen::Index i = 0; i < n; ++i) {
                    h(i, p) = rng.bernoulli(sigmoid(beta * act(i, p))) ? 1.0 : 0.0;
                }
            }
            pre_v.noalias() = params.weights.transpose() * h;
            pre_v *= beta;
            pre_v.colwise() += params.visible_bias;
            for (Eigen::Index p = 0; p < count; ++p) {
                RngStream& rng = particle_rngs[static_cast<std::size_t>(first + p)];
                for (Eigen::Index j = 0; j < m; ++j) {
                    v(j, p) = rng.bernoulli(sigmoid(pre_v(j, p))) ? 1.0 : 0.0;
                }
            }
        }
        logw.segment(first, count) = w;
    }
    return logw;
}

} // namespace kernels
} // namespace dcrbm
