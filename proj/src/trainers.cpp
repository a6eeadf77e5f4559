#include "dcrbm/trainers.hpp"

#include <algorithm>
#include <chrono>

#include "dcrbm/data.hpp"
#include "dcrbm/errors.hpp"
#include "dcrbm/kernels.hpp"
#include "dcrbm/numerics.hpp"

namespace dcrbm {

namespace {

const Vector kNoOffset;

// Sufficient statistics of one phase: sum over the batch of
// (h - lambda)(v - mu)^T, v and h.
struct PhaseSums {
    Matrix w;
    Vector b;
    Vector c;
};

Matrix centered_copy(const Matrix& values, const Vector& offset) {
    if (offset.size() == 0) {
        return values;
    }
    Matrix out = values;
    out.colwise() -= offset;
    return out;
}

// p(h = 1 | v) for every column of `visible`.
Matrix hidden_probs(const RbmParams& params, const Matrix& visible, const Vector& mu) {
    const Matrix centered = centered_copy(visible, mu);
    Matrix act = params.weights * centered;
    act.colwise() += params.hidden_bias;
    return act.unaryExpr([](double t) { return sigmoid(t); });
}

PhaseSums phase_sums(const Matrix& visible, const Matrix& hidden, const Vector& mu, const Vector& lambda) {
    const Matrix cv = centered_copy(visible, mu);
    const Matrix ch = centered_copy(hidden, lambda);
    return PhaseSums{ch * cv.transpose(), visible.rowwise().sum(), hidden.rowwise().sum()};
}

// The single place where the ascent direction (positive minus negative
// phase, batch-averaged) is applied: theta <- theta + eta (pos - neg) / N.
void ascend(RbmParams& params, const PhaseSums& pos, const PhaseSums& neg, double eta, Eigen::Index batch) {
    const auto n = static_cast<double>(batch);
    params.weights += eta * ((pos.w - neg.w) / n);
    params.visible_bias += eta * ((pos.b - neg.b) / n);
    params.hidden_bias += eta * ((pos.c - neg.c) / n);
}

void check_batch(const RbmParams& params, const Matrix& batch, std::size_t streams) {
    if (batch.cols() == 0) {
        throw Error("mini-batch is empty");
    }
    if (static_cast<std::size_t>(batch.rows()) != params.dims.visible) {
        throw DimensionError("mini-batch rows must equal the visible dimension");
    }
    if (streams < static_cast<std::size_t>(batch.cols())) {
        throw DimensionError("need one random stream per mini-batch sample");
    }
}

void check_update_config(const TrainConfig& cfg) {
    if (!(cfg.eta >= 0.0)) {
        throw ConfigError("learning rate must be non-negative");
    }
    if (cfg.K < 0) {
        throw ConfigError("K must be non-negative");
    }
    if (cfg.d < 1 || cfg.Kprime < 1) {
        throw ConfigError("S-DCP needs d >= 1 and Kprime >= 1");
    }
}

std::uint64_t total_draws(const std::vector<RngStream>& rngs) {
    std::uint64_t total = 0;
    for (const auto& r : rngs) {
        total += r.position();
    }
    return total;
}

std::size_t chain_slots(const TrainConfig& cfg, std::size_t samples) {
    return (cfg.batch_size == 0 || cfg.batch_size > samples) ? samples : cfg.batch_size;
}

CurvePoint evaluate_point(const TrainerState& state, const Matrix& test_data, const EvaluationConfig& eval,
                          int epoch) {
    const RbmParams model = represented_params(state);
    const bool exact_ok = std::min(model.dims.visible, model.dims.hidden) <=
                          static_cast<std::size_t>(std::max(0, eval.enumeration_cap));
    bool use_exact = false;
    switch (eval.mode) {
    case EvaluationMode::Exact:
        use_exact = true;
        break;
    case EvaluationMode::Ais:
        use_exact = false;
        break;
    case EvaluationMode::Auto:
        use_exact = exact_ok;
        break;
    }
    if (use_exact) {
        return CurvePoint{epoch, evaluate_exact(model, test_data, eval.enumeration_cap).atll, AtllKind::Exact};
    }
    const RngStream rng(state.config.seed, streams::kEvaluationBase + static_cast<std::uint64_t>(epoch));
    return CurvePoint{epoch, evaluate_ais(model, test_data, eval.ais, rng).atll, AtllKind::Ais};
}

} // namespace

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
    case Algorithm::CD:
        return "CD";
    case Algorithm::PCD:
        return "PCD";
    case Algorithm::SDCP:
        return "SDCP";
    case Algorithm::CSDCP:
        return "CSDCP";
    case Algorithm::CG:
        return "CG";
    }
    return "?";
}

Algorithm parse_algorithm(const std::string& text) {
    std::string t;
    for (char ch : text) {
        if (ch != '-' && ch != '_') {
            t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
        }
    }
    if (t == "CD") {
        return Algorithm::CD;
    }
    if (t == "PCD") {
        return Algorithm::PCD;
    }
    if (t == "SDCP") {
        return Algorithm::SDCP;
    }
    if (t == "CSDCP") {
        return Algorithm::CSDCP;
    }
    if (t == "CG") {
        return Algorithm::CG;
    }
    throw ConfigError("unknown algorithm '" + text + "' (expected CD, PCD, SDCP, CSDCP or CG)");
}

bool is_centered(Algorithm algorithm) { return algorithm == Algorithm::CSDCP || algorithm == Algorithm::CG; }

void TrainConfig::validate() const {
    if (!(eta > 0.0)) {
        throw ConfigError("learning rate eta must be > 0");
    }
    if (epochs < 0) {
        throw ConfigError("epochs must be >= 0");
    }
    if (eval_interval < 1) {
        throw ConfigError("eval_interval must be >= 1");
    }
    if (!(nu_mu >= 0.0 && nu_mu <= 1.0) || !(nu_lambda >= 0.0 && nu_lambda <= 1.0)) {
        throw ConfigError("sliding factors must lie in [0, 1]");
    }
    if (!(init.weight_sigma >= 0.0)) {
        throw ConfigError("weight_sigma must be >= 0");
    }
    switch (algorithm) {
    case Algorithm::CD:
    case Algorithm::PCD:
    case Algorithm::CG:
        if (K < 1) {
            throw ConfigError(to_string(algorithm) + " needs K >= 1");
        }
        break;
    case Algorithm::SDCP:
    case Algorithm::CSDCP:
        if (d < 1 || Kprime < 1) {
            throw ConfigError(to_string(algorithm) + " needs d >= 1 and Kprime >= 1");
        }
        break;
    }
}

int TrainConfig::transitions_per_sample() const {
    return (algorithm == Algorithm::SDCP || algorithm == Algorithm::CSDCP) ? d * Kprime : K;
}

ChainState PersistentChains::chain(std::size_t slot) const {
    return ChainState{states.col(static_cast<Eigen::Index>(slot)), rngs.at(slot)};
}

RbmParams init_params(ModelDims dims, const InitScheme& scheme, const Matrix& train_data, RngStream& rng) {
    RbmParams params = RbmParams::zeros(dims);
    for (Eigen::Index i = 0; i < params.weights.rows(); ++i) {
        for (Eigen::Index j = 0; j < params.weights.cols(); ++j) {
            params.weights(i, j) = scheme.weight_sigma * rng.normal();
        }
    }
    if (scheme.visible_bias == VisibleBiasInit::BaseRate) {
        if (train_data.cols() == 0) {
            throw Error("base-rate initialization needs training data");
        }
        if (static_cast<std::size_t>(train_data.rows()) != dims.visible) {
            throw DimensionError("training data rows must equal the visible dimension");
        }
        const Vector mean = train_data.rowwise().mean();
        for (Eigen::Index j = 0; j < mean.size(); ++j) {
            params.visible_bias[j] = logit(std::clamp(mean[j], kBaseRateEpsilon, 1.0 - kBaseRateEpsilon));
        }
    }
    return params;
}

CenteringState init_centering(const Matrix& train_data, std::size_t hidden, double nu_mu, double nu_lambda) {
    if (train_data.cols() == 0) {
        throw Error("centering offsets need training data");
    }
    return CenteringState{train_data.rowwise().mean(), Vector::Constant(static_cast<Eigen::Index>(hidden), 0.5), nu_mu,
                          nu_lambda};
}

std::vector<RngStream> chain_streams(std::uint64_t seed, std::size_t count) {
    std::vector<RngStream> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        out.emplace_back(seed, static_cast<std::uint64_t>(k));
    }
    return out;
}

RbmParams cd_update(const RbmParams& params, const Matrix& batch, const TrainConfig& cfg, std::span<RngStream> rngs) {
    check_batch(params, batch, rngs.size());
    check_update_config(cfg);

    Matrix chain_ends = batch;
    kernels::run_chains(params, chain_ends, cfg.K, kNoOffset, kNoOffset, rngs);

    const PhaseSums pos = phase_sums(batch, hidden_probs(params, batch, kNoOffset), kNoOffset, kNoOffset);
    const PhaseSums neg = phase_sums(chain_ends, hidden_probs(params, chain_ends, kNoOffset), kNoOffset, kNoOffset);
    RbmParams next = params;
    ascend(next, pos, neg, cfg.eta, batch.cols());
    return next;
}

PcdUpdate pcd_update(const RbmParams& params, const Matrix& batch, PersistentChains chains, const TrainConfig& cfg) {
    if (chains.size() != static_cast<std::size_t>(batch.cols()) || chains.states.cols() != batch.cols()) {
        throw DimensionError("persistent chain count must equal the mini-batch size");
    }
    check_batch(params, batch, chains.size());
    check_update_config(cfg);

    kernels::run_chains(params, chains.states, cfg.K, kNoOffset, kNoOffset, chains.rngs);

    const PhaseSums pos = phase_sums(batch, hidden_probs(params, batch, kNoOffset), kNoOffset, kNoOffset);
    const PhaseSums neg =
        phase_sums(chains.states, hidden_probs(params, chains.states, kNoOffset), kNoOffset, kNoOffset);
    RbmParams next = params;
    ascend(next, pos, neg, cfg.eta, batch.cols());
    return PcdUpdate{std::move(next), std::move(chains)};
}

RbmParams sdcp_update_minibatch(const RbmParams& params, const Matrix& batch, const TrainConfig& cfg,
                                std::span<RngStream> rngs) {
    check_batch(params, batch, rngs.size());
    check_update_config(cfg);

    // grad g at theta_t is frozen for the whole inner loop.
    const PhaseSums frozen_pos = phase_sums(batch, hidden_probs(params, batch, kNoOffset), kNoOffset, kNoOffset);

    RbmParams working = params;
    Matrix samples = batch;  // V_T: chains continue across inner iterations
    for (int l = 0; l < cfg.d; ++l) {
        kernels::run_chains(working, samples, cfg.Kprime, kNoOffset, kNoOffset, rngs);
        const PhaseSums neg = phase_sums(samples, hidden_probs(working, samples, kNoOffset), kNoOffset, kNoOffset);
        // Each inner step is a fresh batch-averaged step on the surrogate.
        ascend(working, frozen_pos, neg, cfg.eta, batch.cols());
    }
    return working;
}

CenteredUpdate csdcp_update_minibatch(const RbmParams& params, const Matrix& batch, const TrainConfig& cfg,
                                      const CenteringState& centering, std::span<RngStream> rngs) {
    check_batch(params, batch, rngs.size());
    check_update_config(cfg);
    centering.validate(params.dims);

    CenteringState offsets = centering;
    const double nu_mu = offsets.nu_mu;
    const double nu_lambda = offsets.nu_lambda;

    const Matrix data_hidden = hidden_probs(params, batch, offsets.mu);  // H_p
    const Vector mu_batch = batch.rowwise().mean();
    const Vector lambda_batch = data_hidden.rowwise().mean();

    RbmParams working = params;
    Matrix samples = batch;  // V_n
    PhaseSums pos;
    for (int l = 0; l < cfg.d; ++l) {
        kernels::run_chains(working, samples, cfg.Kprime, offsets.mu, offsets.lambda, rngs);
        const Matrix model_hidden = hidden_probs(working, samples, offsets.mu);  // H_n

        // Shift the biases so the represented distribution is unchanged by
        // the offset update that follows.
        working.visible_bias += nu_lambda * (working.weights.transpose() * (lambda_batch - offsets.lambda));
        working.hidden_bias += nu_mu * (working.weights * (mu_batch - offsets.mu));
        offsets.mu = (1.0 - nu_mu) * offsets.mu + nu_mu * mu_batch;
        offsets.lambda = (1.0 - nu_lambda) * offsets.lambda + nu_lambda * lambda_batch;

        if (l == 0) {
            pos = phase_sums(batch, data_hidden, offsets.mu, offsets.lambda);
        }
        const PhaseSums neg = phase_sums(samples, model_hidden, offsets.mu, offsets.lambda);
        ascend(working, pos, neg, cfg.eta, batch.cols());
    }
    return CenteredUpdate{std::move(working), std::move(offsets)};
}

CenteredUpdate cg_update(const RbmParams& params, const Matrix& batch, const TrainConfig& cfg,
                         const CenteringState& centering, std::span<RngStream> rngs) {
    TrainConfig single = cfg;
    single.d = 1;
    single.Kprime = cfg.K;
    return csdcp_update_minibatch(params, batch, single, centering, rngs);
}

std::vector<std::pair<int, int>> match_budget(int K) {
    if (K < 1) {
        throw ConfigError("budget K must be >= 1");
    }
    std::vector<std::pair<int, int>> out;
    for (int d = 1; d <= K; ++d) {
        if (K % d == 0) {
            out.emplace_back(d, K / d);
        }
    }
    return out;
}

RbmParams represented_params(const TrainerState& state) {
    if (state.centering) {
        return uncentered(state.params, *state.centering);
    }
    return state.params;
}

TrainerState initial_trainer_state(const Matrix& train_data, std::size_t hidden, const TrainConfig& cfg) {
    cfg.validate();
    if (train_data.cols() == 0) {
        throw Error("training set is empty");
    }
    const ModelDims dims{static_cast<std::size_t>(train_data.rows()), hidden};
    dims.validate();

    TrainerState state;
    state.config = cfg;
    RngStream init_rng(cfg.seed, streams::kInit);
    state.params = init_params(dims, cfg.init, train_data, init_rng);
    if (is_centered(cfg.algorithm)) {
        state.centering = init_centering(train_data, hidden, cfg.nu_mu, cfg.nu_lambda);
    }
    const std::size_t slots = chain_slots(cfg, static_cast<std::size_t>(train_data.cols()));
    if (cfg.algorithm == Algorithm::PCD) {
        // Chains start at the first training samples and are never reset.
        PersistentChains chains;
        chains.states = train_data.leftCols(static_cast<Eigen::Index>(slots));
        chains.rngs = chain_streams(cfg.seed, slots);
        state.persistent = std::move(chains);
    } else {
        state.chain_rngs = chain_streams(cfg.seed, slots);
    }
    return state;
}

TrainingRun train(const Matrix& train_data, const Matrix& test_data, std::size_t hidden, const TrainConfig& cfg,
                  const EvaluationConfig& eval) {
    return resume_training(train_data, test_data, initial_trainer_state(train_data, hidden, cfg), eval);
}

TrainingRun resume_training(const Matrix& train_data, const Matrix& test_data, TrainerState state,
                            const EvaluationConfig& eval) {
    const TrainConfig cfg = state.config;
    cfg.validate();
    if (static_cast<std::size_t>(train_data.rows()) != state.params.dims.visible) {
        throw DimensionError("training data rows must equal the visible dimension");
    }

    TrainingRun run;
    run.config = cfg;
    run.initial_params = state.params;
    if (state.epochs_done == 0) {
        run.curve.push_back(evaluate_point(state, test_data, eval, 0));
    }

    const ModelDims dims = state.params.dims;
    for (int epoch = state.epochs_done + 1; epoch <= cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        std::vector<RngStream>& rngs = state.persistent ? state.persistent->rngs : state.chain_rngs;
        const std::uint64_t draws_before = total_draws(rngs);

        const std::vector<Matrix> batches =
            minibatches(train_data, cfg.batch_size, cfg.seed, static_cast<std::uint64_t>(epoch));
        for (const Matrix& batch : batches) {
            const auto len = static_cast<std::size_t>(batch.cols());
            std::span<RngStream> slot_rngs(rngs.data(), len);
            switch (cfg.algorithm) {
            case Algorithm::CD:
                state.params = cd_update(state.params, batch, cfg, slot_rngs);
                break;
            case Algorithm::SDCP:
                state.params = sdcp_update_minibatch(state.params, batch, cfg, slot_rngs);
                break;
            case Algorithm::CSDCP: {
                CenteredUpdate up = csdcp_update_minibatch(state.params, batch, cfg, *state.centering, slot_rngs);
                state.params = std::move(up.params);
                state.centering = std::move(up.centering);
                break;
            }
            case Algorithm::CG: {
                CenteredUpdate up = cg_update(state.params, batch, cfg, *state.centering, slot_rngs);
                state.params = std::move(up.params);
                state.centering = std::move(up.centering);
                break;
            }
            case Algorithm::PCD: {
                PersistentChains& all = *state.persistent;
                PersistentChains subset;
                subset.states = all.states.leftCols(static_cast<Eigen::Index>(len));
                subset.rngs.assign(all.rngs.begin(), all.rngs.begin() + static_cast<std::ptrdiff_t>(len));
                PcdUpdate up = pcd_update(state.params, batch, std::move(subset), cfg);
                state.params = std::move(up.params);
                all.states.leftCols(static_cast<Eigen::Index>(len)) = up.chains.states;
                std::copy(up.chains.rngs.begin(), up.chains.rngs.end(), all.rngs.begin());
                break;
            }
            }
        }

        state.epochs_done = epoch;
        run.epoch_transitions.push_back((total_draws(rngs) - draws_before) / (dims.visible + dims.hidden));
        run.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());

        if (epoch % cfg.eval_interval == 0 || epoch == cfg.epochs) {
            run.curve.push_back(evaluate_point(state, test_data, eval, epoch));
        }
    }
    run.final_state = std::move(state);
    return run;
}

} // namespace dcrbm
