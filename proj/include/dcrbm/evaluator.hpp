#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"

namespace dcrbm {

enum class TemperatureSchedule { Linear };

/// AIS base distribution. Only the zero-coupling RBM sharing the target's
/// visible biases is provided.
enum class AisBase { VisibleBiases };

struct AisConfig {
    int num_particles = 100;
    int num_temps = 10000;
    TemperatureSchedule schedule = TemperatureSchedule::Linear;
    AisBase base = AisBase::VisibleBiases;

    void validate() const;
};

/// Inverse temperatures beta_0 = 0 < ... < beta_{T-1} = 1.
std::vector<double> temperature_ladder(const AisConfig& cfg);

struct LogZEstimate {
    double log_z = 0.0;
    Vector log_weights;
    double ess = 0.0;
    double log_z_base = 0.0;
};

/// log Z of the base model: sum_j softplus(b_j) + n log 2.
double ais_base_log_partition(const RbmParams& params);

/// Annealed importance sampling estimate of log Z. Particle p draws from
/// rng.substream(p), so the result depends only on the stream identity.
LogZEstimate ais_log_partition(const RbmParams& params, const AisConfig& cfg, const RngStream& rng);

/// Same estimate through the serial reference kernel.
LogZEstimate ais_log_partition_reference(const RbmParams& params, const AisConfig& cfg, const RngStream& rng);

/// Mean over the columns of `testset` of g(v) - log Z_hat, with log Z
/// estimated once.
double atll_estimated(const RbmParams& params, const Matrix& testset, const AisConfig& cfg, const RngStream& rng);

enum class AtllKind { Exact, Ais };
std::string to_string(AtllKind kind);
AtllKind parse_atll_kind(const std::string& text);

struct EvaluationRecord {
    double log_z = 0.0;
    double ess = 0.0;
    double atll = 0.0;
    AtllKind kind = AtllKind::Exact;
    std::string config_hash;
};

/// Exact evaluation through enumeration (ess reported as 0).
EvaluationRecord evaluate_exact(const RbmParams& params, const Matrix& testset, int cap = kDefaultEnumerationCap);

EvaluationRecord evaluate_ais(const RbmParams& params, const Matrix& testset, const AisConfig& cfg,
                              const RngStream& rng);

std::string evaluation_record_json(const EvaluationRecord& record);

} // namespace dcrbm
