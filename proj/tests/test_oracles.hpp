#pragma once
// Brute-force references used by the unit tests. Nothing here calls the
// library's enumeration or gradient code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"

namespace oracle {

using dcrbm::Matrix;
using dcrbm::RbmParams;
using dcrbm::Vector;

inline Vector bits(std::uint64_t code, std::size_t n) {
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        v[static_cast<Eigen::Index>(k)] = static_cast<double>((code >> k) & 1U);
    }
    return v;
}

inline double neg_energy(const RbmParams& p, const Vector& v, const Vector& h) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
        for (Eigen::Index j = 0; j < v.size(); ++j) {
            s += h[i] * p.weights(i, j) * v[j];
        }
        s += p.hidden_bias[i] * h[i];
    }
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        s += p.visible_bias[j] * v[j];
    }
    return s;
}

inline double log_sum_exp(const std::vector<double>& xs) {
    double hi = -INFINITY;
    for (double x : xs) {
        hi = std::max(hi, x);
    }
    long double s = 0.0L;
    for (double x : xs) {
        s += std::exp(static_cast<long double>(x - hi));
    }
    return hi + static_cast<double>(std::log(s));
}

/// log sum over (v, h) of e^{-E}.
inline double log_z(const RbmParams& p) {
    std::vector<double> terms;
    for (std::uint64_t a = 0; a < (1ULL << p.dims.visible); ++a) {
        for (std::uint64_t b = 0; b < (1ULL << p.dims.hidden); ++b) {
            terms.push_back(neg_energy(p, bits(a, p.dims.visible), bits(b, p.dims.hidden)));
        }
    }
    return log_sum_exp(terms);
}

/// log sum over h of e^{-E(v, h)}.
inline double log_unnormalized(const RbmParams& p, const Vector& v) {
    std::vector<double> terms;
    for (std::uint64_t b = 0; b < (1ULL << p.dims.hidden); ++b) {
        terms.push_back(neg_energy(p, v, bits(b, p.dims.hidden)));
    }
    return log_sum_exp(terms);
}

inline double log_likelihood(const RbmParams& p, const Vector& v) { return log_unnormalized(p, v) - log_z(p); }

/// Visible marginal p(v) for every code 0 .. 2^m - 1.
inline std::vector<double> visible_marginal(const RbmParams& p) {
    const double lz = log_z(p);
    std::vector<double> out;
    for (std::uint64_t a = 0; a < (1ULL << p.dims.visible); ++a) {
        out.push_back(std::exp(log_unnormalized(p, bits(a, p.dims.visible)) - lz));
    }
    return out;
}

/// Calls fn(value) for each scalar parameter, in W, b, c order.
inline void for_each_param(RbmParams& p, const std::function<void(double&)>& fn) {
    for (Eigen::Index k = 0; k < p.weights.size(); ++k) {
        fn(p.weights.data()[k]);
    }
    for (Eigen::Index k = 0; k < p.visible_bias.size(); ++k) {
        fn(p.visible_bias[k]);
    }
    for (Eigen::Index k = 0; k < p.hidden_bias.size(); ++k) {
        fn(p.hidden_bias[k]);
    }
}

/// Central differences of `fn` in the same W, b, c order.
inline std::vector<double> central_differences(const RbmParams& p, const std::function<double(const RbmParams&)>& fn,
                                               double step) {
    std::vector<double> out;
    RbmParams work = p;
    for_each_param(work, [&](double& slot) {
        const double saved = slot;
        slot = saved + step;
        const double up = fn(work);
        slot = saved - step;
        const double down = fn(work);
        slot = saved;
        out.push_back((up - down) / (2.0 * step));
    });
    return out;
}

inline std::vector<double> flatten(const dcrbm::GradientRecord& g) {
    std::vector<double> out(g.dW.data(), g.dW.data() + g.dW.size());
    out.insert(out.end(), g.db.data(), g.db.data() + g.db.size());
    out.insert(out.end(), g.dc.data(), g.dc.data() + g.dc.size());
    return out;
}

inline RbmParams random_params(dcrbm::ModelDims dims, dcrbm::RngStream& rng, double sigma = 1.0) {
    RbmParams p = RbmParams::zeros(dims);
    for_each_param(p, [&](double& slot) { slot = sigma * rng.normal(); });
    return p;
}

inline Vector random_binary(std::size_t n, dcrbm::RngStream& rng) {
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        v[k] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    }
    return v;
}

} // namespace oracle
