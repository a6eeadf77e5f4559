#include "dcrbm/serialize.hpp"

#include "dcrbm/errors.hpp"
#include "io_util.hpp"

namespace dcrbm {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        out.push_back(v[k]);
    }
    return out;
}

Vector vector_from_json(const json& j, std::size_t expected, const char* what) {
    if (!j.is_array() || j.size() != expected) {
        throw ParseError(std::string(what) + " must be an array of length " + std::to_string(expected), 0);
    }
    Vector out(static_cast<Eigen::Index>(expected));
    for (std::size_t k = 0; k < expected; ++k) {
        out[static_cast<Eigen::Index>(k)] = j[k].get<double>();
    }
    return out;
}

json matrix_rows_to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        out.push_back(std::move(row));
    }
    return out;
}

Matrix matrix_from_rows(const json& j, std::size_t rows, std::size_t cols, const char* what) {
    if (!j.is_array() || j.size() != rows) {
        throw ParseError(std::string(what) + " must have " + std::to_string(rows) + " rows", 0);
    }
    Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        out.row(static_cast<Eigen::Index>(r)) = vector_from_json(j[r], cols, what).transpose();
    }
    return out;
}

json parse_file(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
}

std::string visible_bias_name(VisibleBiasInit v) { return v == VisibleBiasInit::Zero ? "zero" : "base_rate"; }

VisibleBiasInit parse_visible_bias(const std::string& s) {
    if (s == "zero") {
        return VisibleBiasInit::Zero;
    }
    if (s == "base_rate" || s == "base-rate") {
        return VisibleBiasInit::BaseRate;
    }
    throw ConfigError("unknown visible_bias init '" + s + "' (expected zero or base_rate)");
}

} // namespace

json params_to_json(const RbmParams& params) {
    return json{{"format", "dcrbm-params"},
                {"version", kParamsFormatVersion},
                {"m", params.dims.visible},
                {"n", params.dims.hidden},
                {"W", matrix_rows_to_json(params.weights)},
                {"b", vector_to_json(params.visible_bias)},
                {"c", vector_to_json(params.hidden_bias)}};
}

RbmParams params_from_json(const json& j) {
    try {
        if (j.value("format", std::string()) != "dcrbm-params") {
            throw ParseError("not a dcrbm-params document", 0);
        }
        if (j.at("version").get<int>() != kParamsFormatVersion) {
            throw ParseError("unsupported params version " + j.at("version").dump(), 0);
        }
        const ModelDims dims{j.at("m").get<std::size_t>(), j.at("n").get<std::size_t>()};
        dims.validate();
        RbmParams p{dims, matrix_from_rows(j.at("W"), dims.hidden, dims.visible, "W"),
                    vector_from_json(j.at("b"), dims.visible, "b"), vector_from_json(j.at("c"), dims.hidden, "c")};
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed params document: ") + e.what(), 0);
    }
}

json config_to_json(const TrainConfig& cfg) {
    return json{{"algorithm", to_string(cfg.algorithm)},
                {"eta", cfg.eta},
                {"K", cfg.K},
                {"d", cfg.d},
                {"Kprime", cfg.Kprime},
                {"batch_size", cfg.batch_size},
                {"epochs", cfg.epochs},
                {"nu_mu", cfg.nu_mu},
                {"nu_lambda", cfg.nu_lambda},
                {"init", {{"weight_sigma", cfg.init.weight_sigma}, {"visible_bias", visible_bias_name(cfg.init.visible_bias)}}},
                {"seed", cfg.seed},
                {"eval_interval", cfg.eval_interval}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig cfg;
    try {
        cfg.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        cfg.eta = j.value("eta", cfg.eta);
        cfg.K = j.value("K", cfg.K);
        cfg.d = j.value("d", cfg.d);
        cfg.Kprime = j.value("Kprime", cfg.Kprime);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.epochs = j.value("epochs", cfg.epochs);
        cfg.nu_mu = j.value("nu_mu", cfg.nu_mu);
        cfg.nu_lambda = j.value("nu_lambda", cfg.nu_lambda);
        if (j.contains("init")) {
            const json& init = j.at("init");
            cfg.init.weight_sigma = init.value("weight_sigma", cfg.init.weight_sigma);
            if (init.contains("visible_bias")) {
                cfg.init.visible_bias = parse_visible_bias(init.at("visible_bias").get<std::string>());
            }
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.eval_interval = j.value("eval_interval", cfg.eval_interval);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed training config: ") + e.what());
    }
    return cfg;
}

json centering_to_json(const CenteringState& c) {
    return json{{"mu", vector_to_json(c.mu)},
                {"lambda", vector_to_json(c.lambda)},
                {"nu_mu", c.nu_mu},
                {"nu_lambda", c.nu_lambda}};
}

CenteringState centering_from_json(const json& j) {
    const json& mu = j.at("mu");
    const json& lambda = j.at("lambda");
    return CenteringState{vector_from_json(mu, mu.size(), "mu"), vector_from_json(lambda, lambda.size(), "lambda"),
                          j.at("nu_mu").get<double>(), j.at("nu_lambda").get<double>()};
}

json rng_to_json(const RngStream& rng) {
    return json{{"seed", rng.seed()}, {"stream", rng.stream_id()}, {"position", rng.position()}};
}

RngStream rng_from_json(const json& j) {
    return RngStream(j.at("seed").get<std::uint64_t>(), j.at("stream").get<std::uint64_t>(),
                     j.at("position").get<std::uint64_t>());
}

json checkpoint_to_json(const TrainerState& state) {
    json j{{"format", "dcrbm-checkpoint"},
           {"version", kCheckpointFormatVersion},
           {"epochs_done", state.epochs_done},
           {"config", config_to_json(state.config)},
           {"params", params_to_json(state.params)}};
    if (state.centering) {
        j["centering"] = centering_to_json(*state.centering);
    }
    json rngs = json::array();
    for (const auto& r : state.chain_rngs) {
        rngs.push_back(rng_to_json(r));
    }
    j["chain_rngs"] = std::move(rngs);
    if (state.persistent) {
        json chains = json::array();
        for (std::size_t k = 0; k < state.persistent->size(); ++k) {
            const ChainState c = state.persistent->chain(k);
            chains.push_back(json{{"v", vector_to_json(c.v)}, {"rng", rng_to_json(c.rng)}});
        }
        j["persistent_chains"] = std::move(chains);
    }
    return j;
}

TrainerState checkpoint_from_json(const json& j) {
    try {
        if (j.value("format", std::string()) != "dcrbm-checkpoint") {
            throw ParseError("not a dcrbm-checkpoint document", 0);
        }
        if (j.at("version").get<int>() != kCheckpointFormatVersion) {
            throw ParseError("unsupported checkpoint version " + j.at("version").dump(), 0);
        }
        TrainerState state;
        state.epochs_done = j.at("epochs_done").get<int>();
        state.config = config_from_json(j.at("config"));
        state.params = params_from_json(j.at("params"));
        if (j.contains("centering")) {
            state.centering = centering_from_json(j.at("centering"));
            state.centering->validate(state.params.dims);
        }
        for (const auto& r : j.at("chain_rngs")) {
            state.chain_rngs.push_back(rng_from_json(r));
        }
        if (j.contains("persistent_chains")) {
            const json& chains = j.at("persistent_chains");
            PersistentChains pc;
            pc.states.resize(static_cast<Eigen::Index>(state.params.dims.visible),
                             static_cast<Eigen::Index>(chains.size()));
            for (std::size_t k = 0; k < chains.size(); ++k) {
                pc.states.col(static_cast<Eigen::Index>(k)) =
                    vector_from_json(chains[k].at("v"), state.params.dims.visible, "chain state");
                pc.rngs.push_back(rng_from_json(chains[k].at("rng")));
            }
            state.persistent = std::move(pc);
        }
        return state;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
    }
}

void save_params(const std::filesystem::path& path, const RbmParams& params) {
    detail::write_file_atomic(path, params_to_json(params).dump() + "\n");
}

RbmParams load_params(const std::filesystem::path& path) { return params_from_json(parse_file(path)); }

void save_checkpoint(const std::filesystem::path& path, const TrainerState& state) {
    detail::write_file_atomic(path, checkpoint_to_json(state).dump() + "\n");
}

TrainerState load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(parse_file(path)); }

RbmParams load_model(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("model file not found: " + path.string());
    }
    const json j = parse_file(path);
    if (j.value("format", std::string()) == "dcrbm-checkpoint") {
        return represented_params(checkpoint_from_json(j));
    }
    return params_from_json(j);
}

} // namespace dcrbm
