#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dcrbm/model.hpp"
#include "dcrbm/trainers.hpp"

namespace dcrbm {

inline constexpr int kParamsFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;

/// {"format": "dcrbm-params", "version": 1, "m", "n", "W" (n rows of m), "b", "c"}.
/// Doubles are written with round-trip precision, so load(save(p)) is bit-exact.
nlohmann::json params_to_json(const RbmParams& params);
RbmParams params_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

nlohmann::json centering_to_json(const CenteringState& c);
CenteringState centering_from_json(const nlohmann::json& j);

nlohmann::json rng_to_json(const RngStream& rng);
RngStream rng_from_json(const nlohmann::json& j);

/// Params, config snapshot, centering, chain states and stream positions.
nlohmann::json checkpoint_to_json(const TrainerState& state);
TrainerState checkpoint_from_json(const nlohmann::json& j);

void save_params(const std::filesystem::path& path, const RbmParams& params);
RbmParams load_params(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const TrainerState& state);
TrainerState load_checkpoint(const std::filesystem::path& path);

/// Represented model of a file holding either plain params or a checkpoint.
RbmParams load_model(const std::filesystem::path& path);

} // namespace dcrbm
