#include "dcrbm/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "dcrbm/errors.hpp"
#include "dcrbm/evaluator.hpp"
#include "dcrbm/kernels.hpp"
#include "dcrbm/model.hpp"
#include "dcrbm/sampler.hpp"
#include "dcrbm/trainers.hpp"

namespace dcrbm {

namespace {

// Brute-force routines below deliberately avoid the library's enumeration
// kernels: they sum e^{-E} over every (v, h) pair.

Vector bits_of(std::uint64_t code, std::size_t length) {
    Vector out(static_cast<Eigen::Index>(length));
    for (std::size_t k = 0; k < length; ++k) {
        out[static_cast<Eigen::Index>(k)] = static_cast<double>((code >> k) & 1U);
    }
    return out;
}

double brute_energy(const RbmParams& p, const Vector& v, const Vector& h) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < h.size(); ++i) {
        for (Eigen::Index j = 0; j < v.size(); ++j) {
            e -= p.weights(i, j) * h[i] * v[j];
        }
        e -= p.hidden_bias[i] * h[i];
    }
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        e -= p.visible_bias[j] * v[j];
    }
    return e;
}

double brute_log_z(const RbmParams& p) {
    const std::size_t m = p.dims.visible;
    const std::size_t n = p.dims.hidden;
    double max_term = -1e300;
    std::vector<double> terms;
    for (std::uint64_t vc = 0; vc < (1ULL << m); ++vc) {
        for (std::uint64_t hc = 0; hc < (1ULL << n); ++hc) {
            terms.push_back(-brute_energy(p, bits_of(vc, m), bits_of(hc, n)));
            max_term = std::max(max_term, terms.back());
        }
    }
    double s = 0.0;
    for (double t : terms) {
        s += std::exp(t - max_term);
    }
    return max_term + std::log(s);
}

double brute_log_marginal(const RbmParams& p, const Vector& v) {
    const std::size_t n = p.dims.hidden;
    std::vector<double> terms;
    double max_term = -1e300;
    for (std::uint64_t hc = 0; hc < (1ULL << n); ++hc) {
        terms.push_back(-brute_energy(p, v, bits_of(hc, n)));
        max_term = std::max(max_term, terms.back());
    }
    double s = 0.0;
    for (double t : terms) {
        s += std::exp(t - max_term);
    }
    return max_term + std::log(s);
}

RbmParams random_params(ModelDims dims, RngStream& rng, double sigma) {
    RbmParams p = RbmParams::zeros(dims);
    for (Eigen::Index k = 0; k < p.weights.size(); ++k) {
        p.weights.data()[k] = sigma * rng.normal();
    }
    for (Eigen::Index k = 0; k < p.visible_bias.size(); ++k) {
        p.visible_bias[k] = sigma * rng.normal();
    }
    for (Eigen::Index k = 0; k < p.hidden_bias.size(); ++k) {
        p.hidden_bias[k] = sigma * rng.normal();
    }
    return p;
}

Vector random_pattern(std::size_t length, RngStream& rng) {
    Vector v(static_cast<Eigen::Index>(length));
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        v[k] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    return v;
}

// Central differences of `fn` along every parameter coordinate, in the
// GradientRecord layout.
GradientRecord finite_difference(const RbmParams& p, const std::function<double(const RbmParams&)>& fn, double step) {
    GradientRecord g = GradientRecord::zeros(p.dims);
    for (Eigen::Index k = 0; k < p.weights.size(); ++k) {
        RbmParams plus = p;
        RbmParams minus = p;
        plus.weights.data()[k] += step;
        minus.weights.data()[k] -= step;
        g.dW.data()[k] = (fn(plus) - fn(minus)) / (2.0 * step);
    }
    for (Eigen::Index k = 0; k < p.visible_bias.size(); ++k) {
        RbmParams plus = p;
        RbmParams minus = p;
        plus.visible_bias[k] += step;
        minus.visible_bias[k] -= step;
        g.db[k] = (fn(plus) - fn(minus)) / (2.0 * step);
    }
    for (Eigen::Index k = 0; k < p.hidden_bias.size(); ++k) {
        RbmParams plus = p;
        RbmParams minus = p;
        plus.hidden_bias[k] += step;
        minus.hidden_bias[k] -= step;
        g.dc[k] = (fn(plus) - fn(minus)) / (2.0 * step);
    }
    return g;
}

double max_relative_error(const GradientRecord& a, const GradientRecord& b) {
    double worst = 0.0;
    auto scan = [&](const double* x, const double* y, Eigen::Index count) {
        for (Eigen::Index k = 0; k < count; ++k) {
            const double denom = std::max({std::abs(x[k]), std::abs(y[k]), 1e-3});
            worst = std::max(worst, std::abs(x[k] - y[k]) / denom);
        }
    };
    scan(a.dW.data(), b.dW.data(), a.dW.size());
    scan(a.db.data(), b.db.data(), a.db.size());
    scan(a.dc.data(), b.dc.data(), a.dc.size());
    return worst;
}

OracleCheck check_at_most(std::string name, double measured, double tolerance, std::string detail = {}) {
    return OracleCheck{std::move(name), measured, tolerance, measured <= tolerance, std::move(detail)};
}

OracleReport suite_enumeration(std::uint64_t seed) {
    OracleReport r{"enumeration", {}};
    RngStream rng(seed, 101);
    double worst_ll = 0.0;
    double worst_norm = 0.0;
    for (int model = 0; model < 50; ++model) {
        const RbmParams p = random_params({6, 4}, rng, 1.0);
        const double brute_z = brute_log_z(p);
        double total = 0.0;
        for (std::uint64_t vc = 0; vc < 64; ++vc) {
            const Vector v = bits_of(vc, 6);
            const double ll = exact_log_likelihood(p, v);
            worst_ll = std::max(worst_ll, std::abs(ll - (brute_log_marginal(p, v) - brute_z)));
            total += std::exp(ll);
        }
        worst_norm = std::max(worst_norm, std::abs(total - 1.0));
    }
    r.checks.push_back(check_at_most("log-likelihood vs (v,h) double enumeration", worst_ll, 1e-10, "50 models, m=6 n=4"));
    r.checks.push_back(check_at_most("sum_v p(v) = 1", worst_norm, 1e-9));
    return r;
}

OracleReport suite_gradients(std::uint64_t seed) {
    OracleReport r{"gradients", {}};
    RngStream rng(seed, 102);
    double worst_g = 0.0;
    double worst_f = 0.0;
    for (int model = 0; model < 20; ++model) {
        const RbmParams p = random_params({5, 3}, rng, 1.0);
        const Vector v = random_pattern(5, rng);
        const GradientRecord fd_g = finite_difference(p, [&](const RbmParams& q) { return g_value(q, v); }, 1e-5);
        worst_g = std::max(worst_g, max_relative_error(grad_g(p, v), fd_g));
        const GradientRecord fd_f = finite_difference(p, [](const RbmParams& q) { return brute_log_z(q); }, 1e-5);
        worst_f = std::max(worst_f, max_relative_error(exact_grad_f(p), fd_f));
    }
    r.checks.push_back(check_at_most("grad_g vs central differences of g", worst_g, 1e-4, "20 models, step 1e-5"));
    r.checks.push_back(check_at_most("exact_grad_f vs central differences of log Z", worst_f, 1e-4));
    return r;
}

OracleReport suite_sampler(std::uint64_t seed) {
    OracleReport r{"sampler", {}};
    RngStream rng(seed, 103);
    double worst = 0.0;
    for (int model = 0; model < 5; ++model) {
        const RbmParams p = random_params({3, 2}, rng, 1.0);
        const double log_z = brute_log_z(p);
        Vector pv(8);
        for (std::uint64_t vc = 0; vc < 8; ++vc) {
            pv[static_cast<Eigen::Index>(vc)] = std::exp(brute_log_marginal(p, bits_of(vc, 3)) - log_z);
        }
        // T(v' | v) = sum_h p(h | v) p(v' | h)
        Matrix kernel = Matrix::Zero(8, 8);
        for (std::uint64_t vc = 0; vc < 8; ++vc) {
            const Vector ph = hidden_conditional(p, bits_of(vc, 3));
            for (std::uint64_t hc = 0; hc < 4; ++hc) {
                const Vector h = bits_of(hc, 2);
                double prob_h = 1.0;
                for (Eigen::Index i = 0; i < 2; ++i) {
                    prob_h *= h[i] > 0 ? ph[i] : 1.0 - ph[i];
                }
                const Vector pvh = visible_conditional(p, h);
                for (std::uint64_t wc = 0; wc < 8; ++wc) {
                    const Vector w = bits_of(wc, 3);
                    double prob_w = 1.0;
                    for (Eigen::Index j = 0; j < 3; ++j) {
                        prob_w *= w[j] > 0 ? pvh[j] : 1.0 - pvh[j];
                    }
                    kernel(static_cast<Eigen::Index>(wc), static_cast<Eigen::Index>(vc)) += prob_h * prob_w;
                }
            }
        }
        worst = std::max(worst, (kernel * pv - pv).cwiseAbs().maxCoeff());
    }
    r.checks.push_back(check_at_most("p(v) invariant under exact Gibbs kernel", worst, 1e-10, "5 models, m=3 n=2"));

    // Empirical marginal of many independent chains against the exact one.
    const RbmParams p = random_params({3, 2}, rng, 1.0);
    const double log_z = brute_log_z(p);
    constexpr int kChains = 100000;
    constexpr int kSteps = 500;
    Matrix states = Matrix::Zero(3, kChains);
    auto rngs = chain_streams(seed, kChains);
    kernels::run_chains(p, states, kSteps, Vector(), Vector(), rngs);
    std::vector<double> counts(8, 0.0);
    for (Eigen::Index col = 0; col < kChains; ++col) {
        std::size_t code = 0;
        for (Eigen::Index j = 0; j < 3; ++j) {
            code |= (states(j, col) > 0.5 ? 1U : 0U) << j;
        }
        counts[code] += 1.0;
    }
    double worst_z = 0.0;
    for (std::uint64_t vc = 0; vc < 8; ++vc) {
        const double exact = std::exp(brute_log_marginal(p, bits_of(vc, 3)) - log_z);
        const double sigma = std::sqrt(exact * (1.0 - exact) / kChains);
        worst_z = std::max(worst_z, std::abs(counts[vc] / kChains - exact) / sigma);
    }
    r.checks.push_back(check_at_most("empirical marginal, max |error| / sigma", worst_z, 3.0,
                                     "10^5 chains of 500 transitions"));
    return r;
}

OracleReport suite_cd_equivalence(std::uint64_t seed) {
    OracleReport r{"cd-equivalence", {}};
    struct Case {
        ModelDims dims;
        int batch;
        const char* label;
    };
    for (const Case c : {Case{{6, 4}, 8, "m=6 n=4"}, Case{{784, 16}, 20, "m=784 n=16"}}) {
        RngStream rng(seed, 104);
        Matrix data(static_cast<Eigen::Index>(c.dims.visible), c.batch);
        for (Eigen::Index k = 0; k < data.size(); ++k) {
            data.data()[k] = rng.bernoulli(0.3) ? 1.0 : 0.0;
        }
        RbmParams init = random_params(c.dims, rng, 0.01);
        TrainConfig cd;
        cd.algorithm = Algorithm::CD;
        cd.eta = 0.1;
        cd.K = 4;
        TrainConfig sdcp = cd;
        sdcp.algorithm = Algorithm::SDCP;
        sdcp.d = 1;
        sdcp.Kprime = cd.K;
        auto rngs_a = chain_streams(seed, static_cast<std::size_t>(c.batch));
        auto rngs_b = chain_streams(seed, static_cast<std::size_t>(c.batch));
        RbmParams a = init;
        RbmParams b = init;
        int mismatched = 0;
        for (int update = 0; update < 100; ++update) {
            a = cd_update(a, data, cd, rngs_a);
            b = sdcp_update_minibatch(b, data, sdcp, rngs_b);
            if (!a.identical(b)) {
                ++mismatched;
            }
        }
        r.checks.push_back(OracleCheck{std::string("CD-K == S-DCP(d=1, K'=K), 100 updates, ") + c.label,
                                       static_cast<double>(mismatched), 0.0, mismatched == 0,
                                       "count of non-identical updates"});
    }
    return r;
}

OracleReport suite_ais(std::uint64_t seed) {
    OracleReport r{"ais", {}};
    RngStream rng(seed, 105);
    int good = 0;
    double worst = 0.0;
    for (int model = 0; model < 5; ++model) {
        const RbmParams p = random_params({9, 10}, rng, 1.0);
        const double exact = exact_log_partition(p);
        const LogZEstimate est = ais_log_partition(p, AisConfig{}, RngStream(seed, 200 + static_cast<std::uint64_t>(model)));
        const double err = std::abs(est.log_z - exact);
        worst = std::max(worst, err);
        good += err < 0.1 ? 1 : 0;
    }
    r.checks.push_back(OracleCheck{"|log Z_ais - log Z| < 0.1 (100 particles, 10000 temps)", static_cast<double>(good),
                                   4.0, good >= 4, "models within tolerance out of 5; worst error " +
                                                       std::to_string(worst)});
    return r;
}

OracleReport suite_centering(std::uint64_t seed) {
    OracleReport r{"centering", {}};
    RngStream rng(seed, 106);
    double worst = 0.0;
    for (int model = 0; model < 10; ++model) {
        const RbmParams p = random_params({6, 4}, rng, 1.0);
        CenteringState before{Vector::Zero(6), Vector::Zero(4), 0.3, 0.2};
        for (Eigen::Index k = 0; k < 6; ++k) {
            before.mu[k] = rng.uniform();
        }
        for (Eigen::Index k = 0; k < 4; ++k) {
            before.lambda[k] = rng.uniform();
        }
        Vector mu_batch(6);
        Vector lambda_batch(4);
        for (Eigen::Index k = 0; k < 6; ++k) {
            mu_batch[k] = rng.uniform();
        }
        for (Eigen::Index k = 0; k < 4; ++k) {
            lambda_batch[k] = rng.uniform();
        }
        RbmParams shifted = p;
        shifted.visible_bias += before.nu_lambda * (p.weights.transpose() * (lambda_batch - before.lambda));
        shifted.hidden_bias += before.nu_mu * (p.weights * (mu_batch - before.mu));
        CenteringState after = before;
        after.mu = (1.0 - before.nu_mu) * before.mu + before.nu_mu * mu_batch;
        after.lambda = (1.0 - before.nu_lambda) * before.lambda + before.nu_lambda * lambda_batch;

        const RbmParams u0 = uncentered(p, before);
        const RbmParams u1 = uncentered(shifted, after);
        const double z0 = brute_log_z(u0);
        const double z1 = brute_log_z(u1);
        for (std::uint64_t vc = 0; vc < 64; ++vc) {
            const Vector v = bits_of(vc, 6);
            const double p0 = std::exp(brute_log_marginal(u0, v) - z0);
            const double p1 = std::exp(brute_log_marginal(u1, v) - z1);
            worst = std::max(worst, std::abs(p0 - p1));
        }
    }
    r.checks.push_back(check_at_most("bias re-parameterization preserves p(v)", worst, 1e-9, "10 models, m=6 n=4"));
    return r;
}

OracleReport suite_bounds(std::uint64_t seed) {
    OracleReport r{"bounds", {}};
    RngStream rng(seed, 107);
    double worst_range = 0.0;
    double worst_norm_ratio = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const ModelDims dims{1 + rng.next_u64() % 8, 1 + rng.next_u64() % 6};
        const RbmParams p = random_params(dims, rng, 4.0 * rng.uniform());
        const Vector v = random_pattern(dims.visible, rng);
        const double limit = std::sqrt(static_cast<double>(dims.visible * dims.hidden + dims.visible + dims.hidden));
        const BinaryPattern vk = run_chain(p, v, 1, rng);
        for (const GradientRecord& g :
             {grad_g(p, v), estimate_grad_f(p, vk), trial % 10 == 0 ? exact_grad_f(p) : grad_g(p, v)}) {
            worst_range = std::max({worst_range, -g.min_coeff(), g.max_coeff() - 1.0});
            worst_norm_ratio = std::max(worst_norm_ratio, g.norm() / limit);
        }
    }
    r.checks.push_back(check_at_most("components outside [0, 1] (max excursion)", worst_range, 0.0, "10^4 fuzzed cases"));
    r.checks.push_back(check_at_most("norm / sqrt(mn + m + n)", worst_norm_ratio, 1.0));
    return r;
}

} // namespace

bool OracleReport::passed() const {
    for (const auto& c : checks) {
        if (!c.passed) {
            return false;
        }
    }
    return true;
}

std::string OracleReport::text() const {
    std::ostringstream out;
    out << "[" << suite << "]\n";
    for (const auto& c : checks) {
        char line[512];
        std::snprintf(line, sizeof(line), "  %s  %-58s measured=%.3e tol=%.3e", c.passed ? "PASS" : "FAIL",
                      c.name.c_str(), c.measured, c.tolerance);
        out << line;
        if (!c.detail.empty()) {
            out << "  (" << c.detail << ")";
        }
        out << "\n";
    }
    return out.str();
}

std::vector<std::string> oracle_suite_names() {
    return {"gradients", "enumeration", "sampler", "cd-equivalence", "ais", "centering", "bounds"};
}

std::vector<OracleReport> run_oracle_suite(const std::string& name, std::uint64_t seed) {
    if (name == "all") {
        std::vector<OracleReport> all;
        for (const auto& n : oracle_suite_names()) {
            all.push_back(run_oracle_suite(n, seed).front());
        }
        return all;
    }
    if (name == "gradients") {
        return {suite_gradients(seed)};
    }
    if (name == "enumeration") {
        return {suite_enumeration(seed)};
    }
    if (name == "sampler") {
        return {suite_sampler(seed)};
    }
    if (name == "cd-equivalence") {
        return {suite_cd_equivalence(seed)};
    }
    if (name == "ais") {
        return {suite_ais(seed)};
    }
    if (name == "centering") {
        return {suite_centering(seed)};
    }
    if (name == "bounds") {
        return {suite_bounds(seed)};
    }
    throw ConfigError("unknown oracle suite '" + name + "'");
}

} // namespace dcrbm
