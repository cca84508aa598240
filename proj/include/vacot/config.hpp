// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/dataset.hpp"
#include "vacot/engine.hpp"
#include "vacot/grpo.hpp"
#include "vacot/reward.hpp"
#include "vacot/sim_backend.hpp"
#include "vacot/toy_env.hpp"

#include <filesystem>
#include <functional>
#include <optional>

namespace vacot {

/// Settings shared by the command-line tools. Every section is optional in the
/// file; missing keys keep their defaults.
///
/// Precedence: command-line flags > config file > environment. Tokens are read
/// from the environment only.
struct AppConfig {
    std::string annotator_url;
    std::string scorer_url;
    std::string backend_url;
    std::string annotator_token;
    std::string scorer_token;

    EngineConfig engine;
    SimSpec sim;
    RewardWeights weights;
    GrpoConfig grpo;
    ToyFlowEnv toy_env;
    ToyTrainOptions toy_train;
    OptimizerSettings optimizer;
    std::size_t concurrency = 1;
    std::size_t image_token_cost = 1024;
    std::size_t pack_budget = 32000;
    double perfect_fraction = 0.2;
};

using EnvLookup = std::function<std::string(const char*)>;

/// Environment variables: VACOT_ANNOTATOR_URL, VACOT_ANNOTATOR_TOKEN,
/// VACOT_SCORER_URL, VACOT_SCORER_TOKEN, VACOT_BACKEND_URL.
EnvLookup process_env();

/// Parses a config document. Throws InvalidConfig.
AppConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const AppConfig& config); // tokens omitted

/// Defaults, overlaid by the file (when given), with URLs the file leaves empty
/// and all tokens taken from `env`.
AppConfig load_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env = process_env());

} // namespace vacot
