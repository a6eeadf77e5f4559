#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcrbm/evaluator.hpp"
#include "dcrbm/model.hpp"
#include "dcrbm/rng.hpp"
#include "dcrbm/sampler.hpp"

namespace dcrbm {

enum class Algorithm { CD, PCD, SDCP, CSDCP, CG };
std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& text);

/// Whether the algorithm trains the centered parameterization.
bool is_centered(Algorithm algorithm);

enum class VisibleBiasInit { Zero, BaseRate };

struct InitScheme {
    double weight_sigma = 0.01;
    VisibleBiasInit visible_bias = VisibleBiasInit::BaseRate;
};

/// Clamp applied to pixel means before the logit in base-rate init.
inline constexpr double kBaseRateEpsilon = 1e-4;

struct TrainConfig {
    Algorithm algorithm = Algorithm::CD;
    double eta = 0.1;
    int K = 1;        // chain length for CD, PCD and CG
    int d = 1;        // inner iterations for SDCP and CSDCP
    int Kprime = 1;   // inner chain length for SDCP and CSDCP
    std::size_t batch_size = 0;  // 0 or >= N: full batch
    int epochs = 1;
    double nu_mu = 0.01;
    double nu_lambda = 0.01;
    InitScheme init;
    std::uint64_t seed = 0;
    int eval_interval = 100;

    void validate() const;

    /// Gibbs transitions per training sample per update.
    int transitions_per_sample() const;
};

/// One persistent chain per mini-batch slot.
struct PersistentChains {
    Matrix states;                // m x batch_size
    std::vector<RngStream> rngs;  // one per chain

    std::size_t size() const { return rngs.size(); }
    ChainState chain(std::size_t slot) const;
};

struct CenteredUpdate {
    RbmParams params;
    CenteringState centering;
};

struct PcdUpdate {
    RbmParams params;
    PersistentChains chains;
};

/// W ~ N(0, sigma^2), c = 0, b = 0 or logit of the clamped pixel means.
RbmParams init_params(ModelDims dims, const InitScheme& scheme, const Matrix& train_data, RngStream& rng);

/// mu = data mean, lambda = 0.5.
CenteringState init_centering(const Matrix& train_data, std::size_t hidden, double nu_mu, double nu_lambda);

/// One stream per chain slot, ids 0..count-1 under `seed`.
std::vector<RngStream> chain_streams(std::uint64_t seed, std::size_t count);

/// CD-K on a mini-batch (columns of `batch`). Sample i runs its chain on
/// rngs[i].
RbmParams cd_update(const RbmParams& params, const Matrix& batch, const TrainConfig& cfg, std::span<RngStream> rngs);

/// PCD: like CD but chains start from the stored states, which are replaced
/// by the new chain ends.
PcdUpdate pcd_update(const RbmParams& params, const Matrix& batch, PersistentChains chains, const TrainConfig& cfg);

/// Mini-batch S-DCP: d gradient steps on the convex surrogate
/// f(theta) - theta . grad g(theta_t), each from a Kprime-step chain.
RbmParams sdcp_update_minibatch(const RbmParams& params, const Matrix& batch, const TrainConfig& cfg,
                                std::span<RngStream> rngs);

/// Mini-batch S-DCP with centered gradients.
CenteredUpdate csdcp_update_minibatch(const RbmParams& params, const Matrix& batch, const TrainConfig& cfg,
                                      const CenteringState& centering, std::span<RngStream> rngs);

/// Centered-gradient CD baseline: csdcp_update_minibatch with d = 1, Kprime = K.
CenteredUpdate cg_update(const RbmParams& params, const Matrix& batch, const TrainConfig& cfg,
                         const CenteringState& centering, std::span<RngStream> rngs);

/// All (d, Kprime) with d * Kprime = K, ordered by d.
std::vector<std::pair<int, int>> match_budget(int K);

enum class EvaluationMode { Auto, Exact, Ais };

struct EvaluationConfig {
    EvaluationMode mode = EvaluationMode::Auto;
    int enumeration_cap = kDefaultEnumerationCap;
    AisConfig ais;
};

/// Everything needed to continue a run bit-exactly.
struct TrainerState {
    TrainConfig config;
    int epochs_done = 0;
    RbmParams params;
    std::optional<CenteringState> centering;
    std::vector<RngStream> chain_rngs;
    std::optional<PersistentChains> persistent;
};

struct CurvePoint {
    int epoch = 0;
    double atll = 0.0;
    AtllKind kind = AtllKind::Exact;
};

struct TrainingRun {
    TrainConfig config;
    std::vector<CurvePoint> curve;
    std::vector<double> epoch_seconds;
    std::vector<std::uint64_t> epoch_transitions;  // counted from stream draws
    RbmParams initial_params;
    TrainerState final_state;
};

/// Model distribution represented by a trainer state (undoes centering).
RbmParams represented_params(const TrainerState& state);

TrainerState initial_trainer_state(const Matrix& train_data, std::size_t hidden, const TrainConfig& cfg);

/// Runs cfg.epochs epochs with per-epoch reshuffling and evaluates ATLL at
/// epoch 0, every eval_interval epochs, and at the last epoch.
TrainingRun train(const Matrix& train_data, const Matrix& test_data, std::size_t hidden, const TrainConfig& cfg,
                  const EvaluationConfig& eval = {});

/// Continues `state` up to state.config.epochs.
TrainingRun resume_training(const Matrix& train_data, const Matrix& test_data, TrainerState state,
                            const EvaluationConfig& eval = {});

} // namespace dcrbm
