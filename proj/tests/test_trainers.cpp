#include <doctest.h>

#include <cmath>

#include "dcrbm/data.hpp"
#include "dcrbm/errors.hpp"
#include "dcrbm/serialize.hpp"
#include "dcrbm/trainers.hpp"
#include "test_oracles.hpp"

using namespace dcrbm;

namespace {

Matrix random_batch(std::size_t m, Eigen::Index count, RngStream& rng) {
    Matrix out(static_cast<Eigen::Index>(m), count);
    for (Eigen::Index c = 0; c < count; ++c) {
        out.col(c) = oracle::random_binary(m, rng);
    }
    return out;
}

TrainConfig make(Algorithm a, int K, int d, int kp, double eta = 0.1) {
    TrainConfig cfg;
    cfg.algorithm = a;
    cfg.K = K;
    cfg.d = d;
    cfg.Kprime = kp;
    cfg.eta = eta;
    return cfg;
}

} // namespace

TEST_SUITE("trainers") {

TEST_CASE("algorithm names") {
    CHECK(parse_algorithm("cs-dcp") == Algorithm::CSDCP);
    CHECK(parse_algorithm("S_DCP") == Algorithm::SDCP);
    CHECK(parse_algorithm("cd") == Algorithm::CD);
    CHECK(parse_algorithm("PCD") == Algorithm::PCD);
    CHECK(parse_algorithm("cg") == Algorithm::CG);
    CHECK_THROWS_AS(parse_algorithm("ssd"), ConfigError);
    for (auto a : {Algorithm::CD, Algorithm::PCD, Algorithm::SDCP, Algorithm::CSDCP, Algorithm::CG}) {
        CHECK(parse_algorithm(to_string(a)) == a);
    }
}

TEST_CASE("budget matching") {
    const auto pairs = match_budget(12);
    REQUIRE(pairs.size() == 6);
    CHECK(pairs.front() == std::pair{1, 12});
    CHECK(pairs[2] == std::pair{3, 4});
    for (auto [d, kp] : match_budget(24)) {
        CHECK(d * kp == 24);
    }
    CHECK_THROWS_AS(match_budget(0), ConfigError);
    CHECK(make(Algorithm::SDCP, 1, 6, 4).transitions_per_sample() == 24);
    CHECK(make(Algorithm::CD, 24, 1, 1).transitions_per_sample() == 24);
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    cfg.eta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.eta = 0.1;
    cfg.nu_mu = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.nu_mu = 0.01;
    cfg.algorithm = Algorithm::SDCP;
    cfg.d = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("S-DCP with d = 1 reproduces CD bit for bit") {
    RngStream rng(51, 0);
    const Matrix batch = random_batch(9, 12, rng);
    RbmParams a = oracle::random_params({9, 4}, rng, 0.1);
    RbmParams b = a;
    auto ra = chain_streams(3, 12);
    auto rb = chain_streams(3, 12);
    for (int t = 0; t < 100; ++t) {
        a = cd_update(a, batch, make(Algorithm::CD, 5, 1, 1), ra);
        b = sdcp_update_minibatch(b, batch, make(Algorithm::SDCP, 0, 1, 5), rb);
        REQUIRE(a.identical(b));
    }
    CHECK(ra == rb);
}

TEST_CASE("CG is CS-DCP with one inner step") {
    RngStream rng(52, 0);
    const Matrix batch = random_batch(8, 10, rng);
    const RbmParams p = oracle::random_params({8, 3}, rng, 0.1);
    CenteringState c = init_centering(batch, 3, 0.05, 0.02);
    auto ra = chain_streams(4, 10);
    auto rb = chain_streams(4, 10);
    const CenteredUpdate a = cg_update(p, batch, make(Algorithm::CG, 6, 1, 1), c, ra);
    const CenteredUpdate b = csdcp_update_minibatch(p, batch, make(Algorithm::CSDCP, 0, 1, 6), c, rb);
    CHECK(a.params.identical(b.params));
    CHECK(a.centering.mu == b.centering.mu);
    CHECK(a.centering.lambda == b.centering.lambda);
}

TEST_CASE("CS-DCP with zero offsets and frozen centering is S-DCP") {
    RngStream rng(53, 0);
    const Matrix batch = random_batch(7, 6, rng);
    RbmParams a = oracle::random_params({7, 3}, rng, 0.2);
    RbmParams b = a;
    CenteringState zero = CenteringState::zeros(a.dims);
    auto ra = chain_streams(5, 6);
    auto rb = chain_streams(5, 6);
    for (int t = 0; t < 20; ++t) {
        a = sdcp_update_minibatch(a, batch, make(Algorithm::SDCP, 0, 3, 2), ra);
        CenteredUpdate up = csdcp_update_minibatch(b, batch, make(Algorithm::CSDCP, 0, 3, 2), zero, rb);
        b = up.params;
        REQUIRE(a.identical(b));
    }
}

TEST_CASE("S-DCP inner steps follow the convex surrogate") {
    // Hand-rolled inner loop from the definitions.
    RngStream rng(54, 0);
    const Matrix batch = random_batch(5, 4, rng);
    const RbmParams p = oracle::random_params({5, 2}, rng, 0.3);
    const TrainConfig cfg = make(Algorithm::SDCP, 0, 3, 2, 0.2);
    auto rngs = chain_streams(6, 4);
    const RbmParams got = sdcp_update_minibatch(p, batch, cfg, rngs);

    auto own = chain_streams(6, 4);
    GradientRecord pos = GradientRecord::zeros(p.dims);
    for (Eigen::Index i = 0; i < 4; ++i) {
        pos += grad_g(p, batch.col(i));
    }
    RbmParams theta = p;
    Matrix chains = batch;
    for (int l = 0; l < 3; ++l) {
        GradientRecord neg = GradientRecord::zeros(p.dims);
        for (Eigen::Index i = 0; i < 4; ++i) {
            chains.col(i) = run_chain(theta, chains.col(i), 2, own[static_cast<std::size_t>(i)]);
            neg += estimate_grad_f(theta, chains.col(i));
        }
        GradientRecord step = pos;
        step -= neg;
        step *= 0.2 / 4.0;
        theta.weights += step.dW;
        theta.visible_bias += step.db;
        theta.hidden_bias += step.dc;
    }
    CHECK((got.weights - theta.weights).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((got.visible_bias - theta.visible_bias).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((got.hidden_bias - theta.hidden_bias).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("CS-DCP preserves the represented distribution across re-parameterization") {
    RngStream rng(55, 0);
    const Matrix batch = random_batch(6, 5, rng);
    const RbmParams p = oracle::random_params({6, 3}, rng, 0.5);
    const CenteringState c = init_centering(batch, 3, 0.3, 0.4);
    // With eta tiny the update is dominated by the bias shift; at eta -> 0
    // only the re-parameterization remains.
    TrainConfig cfg = make(Algorithm::CSDCP, 0, 1, 1, 1e-300);
    auto rngs = chain_streams(1, 5);
    const CenteredUpdate up = csdcp_update_minibatch(p, batch, cfg, c, rngs);
    const RbmParams before = uncentered(p, c);
    const RbmParams after = uncentered(up.params, up.centering);
    const auto pa = oracle::visible_marginal(before);
    const auto pb = oracle::visible_marginal(after);
    for (std::size_t k = 0; k < pa.size(); ++k) {
        REQUIRE(std::abs(pa[k] - pb[k]) < 1e-9);
    }
    CHECK((up.centering.mu - c.mu).norm() > 0.0);
}

TEST_CASE("PCD chain bookkeeping") {
    RngStream rng(56, 0);
    const Matrix batch = random_batch(5, 4, rng);
    const RbmParams p = oracle::random_params({5, 2}, rng, 0.3);
    PersistentChains chains{batch, chain_streams(2, 4)};
    const PcdUpdate up = pcd_update(p, batch, chains, make(Algorithm::PCD, 3, 1, 1));
    CHECK(up.chains.rngs[0].position() == 3 * 7);
    PersistentChains wrong{batch.leftCols(3), chain_streams(2, 3)};
    CHECK_THROWS_AS(pcd_update(p, batch, wrong, make(Algorithm::PCD, 3, 1, 1)), DimensionError);
}

TEST_CASE("initialization") {
    const Matrix data = gen_shifting_bar(9, 1).patterns;
    TrainConfig cd = make(Algorithm::CD, 12, 1, 1);
    cd.seed = 8;
    TrainConfig cs = make(Algorithm::CSDCP, 0, 3, 4);
    cs.seed = 8;
    const TrainerState a = initial_trainer_state(data, 4, cd);
    const TrainerState b = initial_trainer_state(data, 4, cs);
    CHECK(a.params.identical(b.params));
    CHECK(a.params.hidden_bias.isZero());
    CHECK(a.params.visible_bias[0] == doctest::Approx(std::log((1.0 / 9) / (8.0 / 9))));
    CHECK(std::abs(a.params.weights.mean()) < 0.01);
    REQUIRE(b.centering.has_value());
    CHECK(b.centering->lambda.isApproxToConstant(0.5));
    CHECK(b.centering->mu.isApproxToConstant(1.0 / 9));
    TrainConfig zero = cd;
    zero.init.visible_bias = VisibleBiasInit::Zero;
    CHECK(initial_trainer_state(data, 4, zero).params.visible_bias.isZero());
}

TEST_CASE("budget parity is counted from the streams") {
    RngStream rng(57, 0);
    const Matrix data = random_batch(6, 11, rng);
    TrainConfig cd = make(Algorithm::CD, 24, 1, 1);
    cd.epochs = 3;
    cd.batch_size = 4;
    TrainConfig sd = make(Algorithm::SDCP, 0, 6, 4);
    sd.epochs = 3;
    sd.batch_size = 4;
    const TrainingRun a = train(data, data, 3, cd);
    const TrainingRun b = train(data, data, 3, sd);
    REQUIRE(a.epoch_transitions.size() == 3);
    CHECK(a.epoch_transitions == b.epoch_transitions);
    CHECK(a.epoch_transitions[0] == 24 * 11);
}

TEST_CASE("training curve") {
    const Matrix data = gen_shifting_bar(9, 1).patterns;
    TrainConfig cfg = make(Algorithm::CSDCP, 0, 3, 4, 0.3);
    cfg.epochs = 250;
    cfg.eval_interval = 100;
    const TrainingRun run = train(data, data, 4, cfg);
    REQUIRE(run.curve.size() == 4);
    CHECK(run.curve[0].epoch == 0);
    CHECK(run.curve[1].epoch == 100);
    CHECK(run.curve[3].epoch == 250);
    for (const auto& p : run.curve) {
        CHECK(p.kind == AtllKind::Exact);
        CHECK(p.atll < -std::log(9.0) + 1e-12);
    }
    // Base-rate init: independent units with p = 1/9.
    CHECK(run.curve[0].atll == doctest::Approx(9 * (std::log(1.0 / 9) / 9 + std::log(8.0 / 9) * 8 / 9)).epsilon(1e-3));
}

TEST_CASE("resuming from a checkpoint is bit-exact") {
    const Matrix data = gen_bars_stripes(3).patterns;
    for (auto algo : {Algorithm::CD, Algorithm::PCD, Algorithm::SDCP, Algorithm::CSDCP, Algorithm::CG}) {
        TrainConfig cfg = make(algo, 4, 2, 2, 0.2);
        cfg.batch_size = 5;
        cfg.epochs = 12;
        cfg.seed = 17;
        const TrainingRun whole = train(data, data, 3, cfg);

        TrainConfig half = cfg;
        half.epochs = 5;
        const TrainingRun first = train(data, data, 3, half);
        TrainerState restored = checkpoint_from_json(nlohmann::json::parse(checkpoint_to_json(first.final_state).dump()));
        restored.config.epochs = 12;
        const TrainingRun rest = resume_training(data, data, restored);
        CHECK(rest.final_state.params.identical(whole.final_state.params));
        CHECK(rest.curve.back().atll == whole.curve.back().atll);
    }
}

}
