#pragma once

// JSON converters for the model and training configurations. Used for run
// configs, resolved-config snapshots and checkpoint metadata.

#include "dpgan/datasets.hpp"
#include "dpgan/discriminator.hpp"
#include "dpgan/generator.hpp"
#include "dpgan/losses.hpp"
#include "dpgan/train_config.hpp"

#include <nlohmann/json.hpp>

namespace dpgan {

void to_json(nlohmann::json& j, const GraphUnetPPConfig& c);
void from_json(const nlohmann::json& j, GraphUnetPPConfig& c);
void to_json(nlohmann::json& j, const MLPUnetPPConfig& c);
void from_json(const nlohmann::json& j, MLPUnetPPConfig& c);
void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);
void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);
void to_json(nlohmann::json& j, const TTURConfig& c);
void from_json(const nlohmann::json& j, TTURConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const SyntheticSpec& c);
void from_json(const nlohmann::json& j, SyntheticSpec& c);

}  // namespace dpgan
