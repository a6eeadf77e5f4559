#include "dcrbm/evaluator.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "dcrbm/errors.hpp"
#include "dcrbm/kernels.hpp"
#include "dcrbm/numerics.hpp"
#include "dcrbm/reference.hpp"

namespace dcrbm {

namespace {

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k) {
        out[static_cast<std::size_t>(k)] = kDigits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string ais_config_hash(const AisConfig& cfg) {
    const nlohmann::json j = {{"num_particles", cfg.num_particles},
                              {"num_temps", cfg.num_temps},
                              {"schedule", "linear"},
                              {"base", "visible-biases"}};
    return fnv1a_hex(j.dump());
}

template <typename WeightsFn>
LogZEstimate run_ais(const RbmParams& params, const AisConfig& cfg, const RngStream& rng, WeightsFn&& weights_fn) {
    params.validate();
    cfg.validate();
    const std::vector<double> betas = temperature_ladder(cfg);
    std::vector<RngStream> particle_rngs;
    particle_rngs.reserve(static_cast<std::size_t>(cfg.num_particles));
    for (int p = 0; p < cfg.num_particles; ++p) {
        particle_rngs.push_back(rng.substream(static_cast<std::uint64_t>(p)));
    }

    LogZEstimate est;
    est.log_weights = weights_fn(params, betas, particle_rngs);
    est.log_z_base = ais_base_log_partition(params);

    LogSumExp sum_w;
    LogSumExp sum_w2;
    for (Eigen::Index p = 0; p < est.log_weights.size(); ++p) {
        sum_w.add(est.log_weights[p]);
        sum_w2.add(2.0 * est.log_weights[p]);
    }
    est.log_z = sum_w.value() - std::log(static_cast<double>(cfg.num_particles)) + est.log_z_base;
    est.ess = std::exp(2.0 * sum_w.value() - sum_w2.value());
    return est;
}

} // namespace

void AisConfig::validate() const {
    if (num_particles < 2) {
        throw ConfigError("AIS needs at least 2 particles");
    }
    if (num_temps < 2) {
        throw ConfigError("AIS needs at least 2 temperatures");
    }
}

std::vector<double> temperature_ladder(const AisConfig& cfg) {
    cfg.validate();
    std::vector<double> betas(static_cast<std::size_t>(cfg.num_temps));
    const double last = static_cast<double>(cfg.num_temps - 1);
    for (std::size_t k = 0; k < betas.size(); ++k) {
        betas[k] = static_cast<double>(k) / last;
    }
    betas.back() = 1.0;
    return betas;
}

double ais_base_log_partition(const RbmParams& params) {
    double total = static_cast<double>(params.dims.hidden) * std::numbers::ln2;
    for (Eigen::Index j = 0; j < params.visible_bias.size(); ++j) {
        total += softplus(params.visible_bias[j]);
    }
    return total;
}

LogZEstimate ais_log_partition(const RbmParams& params, const AisConfig& cfg, const RngStream& rng) {
    return run_ais(params, cfg, rng, [](const RbmParams& p, const std::vector<double>& b, std::vector<RngStream>& r) {
        return kernels::ais_log_weights(p, b, r);
    });
}

LogZEstimate ais_log_partition_reference(const RbmParams& params, const AisConfig& cfg, const RngStream& rng) {
    return run_ais(params, cfg, rng, [](const RbmParams& p, const std::vector<double>& b, std::vector<RngStream>& r) {
        return reference::ais_log_weights(p, b, r);
    });
}

double atll_estimated(const RbmParams& params, const Matrix& testset, const AisConfig& cfg, const RngStream& rng) {
    return evaluate_ais(params, testset, cfg, rng).atll;
}

std::string to_string(AtllKind kind) { return kind == AtllKind::Exact ? "exact" : "ais"; }

AtllKind parse_atll_kind(const std::string& text) {
    if (text == "exact") {
        return AtllKind::Exact;
    }
    if (text == "ais") {
        return AtllKind::Ais;
    }
    throw ConfigError("unknown evaluation mode '" + text + "' (expected exact or ais)");
}

EvaluationRecord evaluate_exact(const RbmParams& params, const Matrix& testset, int cap) {
    if (testset.cols() == 0) {
        throw Error("ATLL needs a non-empty test set");
    }
    EvaluationRecord rec;
    rec.kind = AtllKind::Exact;
    rec.log_z = exact_log_partition(params, cap);
    rec.atll = kernels::g_values(params, testset).mean() - rec.log_z;
    rec.config_hash = fnv1a_hex("exact:" + std::to_string(cap));
    return rec;
}

EvaluationRecord evaluate_ais(const RbmParams& params, const Matrix& testset, const AisConfig& cfg,
                              const RngStream& rng) {
    if (testset.cols() == 0) {
        throw Error("ATLL needs a non-empty test set");
    }
    const LogZEstimate est = ais_log_partition(params, cfg, rng);
    EvaluationRecord rec;
    rec.kind = AtllKind::Ais;
    rec.log_z = est.log_z;
    rec.ess = est.ess;
    rec.atll = kernels::g_values(params, testset).mean() - est.log_z;
    rec.config_hash = ais_config_hash(cfg);
    return rec;
}

std::string evaluation_record_json(const EvaluationRecord& record) {
    const nlohmann::json j = {{"schema_version", 1},          {"kind", to_string(record.kind)},
                              {"log_z", record.log_z},         {"ess", record.ess},
                              {"atll", record.atll},           {"config_hash", record.config_hash}};
    return j.dump(2);
}

} // namespace dcrbm
