// SPDX-License-Identifier: Apache-2.0
#pragma once

// Desk-scale stand-in for denoising: a T-step Gaussian reverse process over
// low-dimensional vectors, conditioned on a reference point, rewarded by how
// close the final state lands to it.

#include "vacot/grpo.hpp"

#include <functional>
#include <random>
#include <string>

namespace vacot {

struct ToyFlowEnv {
    std::size_t state_dim = 2;
    std::size_t num_steps = 4;
    double step_noise = 0.1;    // sigma_t, constant over steps
    double init_scale = 1.0;    // x_T ~ N(0, init_scale^2 I)
    double target_radius = 1.0; // conditions lie on this circle (first two dims)
    std::size_t time_degree = 3;

    void validate() const;

    PolicyShape policy_shape() const;
    NoiseSchedule schedule() const;
    GaussianStepPolicy initial_policy() const;

    Condition sample_condition(std::mt19937_64& rng) const;
    Vec target(const Condition& condition) const;
    Trajectory rollout(const GaussianStepPolicy& policy, const Condition& condition, std::mt19937_64& rng) const;
};

nlohmann::json to_json(const ToyFlowEnv& env);
ToyFlowEnv toy_env_from_json(const nlohmann::json& j);

using RewardFn = std::function<double(const Vec& final_state, const Condition& condition)>;

/// exp(-|x_0 - target|^2)
RewardFn default_reward(const ToyFlowEnv& env);

struct ToyTrainOptions {
    int iterations = 200;
    std::size_t conditions_per_iteration = 8;
    std::size_t eval_conditions = 64; // fixed probe set, G rollouts each
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const ToyTrainOptions& o);
ToyTrainOptions toy_train_options_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OptimizerSettings& o);
OptimizerSettings optimizer_settings_from_json(const nlohmann::json& j);

struct TrainingRow {
    int iter = 0;
    double mean_reward = 0.0;   // over this iteration's sampled groups
    double kl = 0.0;            // KL(policy || reference) after the update, on visited states
    double clip_fraction = 0.0; // share of (i, t) terms where the clip bound bites
    double objective = 0.0;     // mean over the iteration's minibatch steps
    double eval_reward = 0.0;   // fixed probe set, before the update

    bool operator==(const TrainingRow&) const = default;
};

struct TrainingReport {
    std::vector<TrainingRow> rows;
    double initial_eval_reward = 0.0;
    double final_eval_reward = 0.0;
    Vec initial_params;
    Vec final_params;
};

/// Each iteration snapshots the sampling policy, rolls out G trajectories per
/// sampled condition, scores and normalises them, then takes one Adam ascent
/// step per group on the objective (a single pass over the batch). The
/// reference policy is the policy as passed in. Throws DivergenceDetected on
/// non-finite parameters.
TrainingReport train_toy(const ToyFlowEnv& env, GaussianStepPolicy& policy, const GrpoConfig& config,
                         const OptimizerSettings& optimizer, const ToyTrainOptions& options, const RewardFn& reward);

/// Mean reward over a fixed set of conditions and noise streams.
double probe_reward(const ToyFlowEnv& env, const GaussianStepPolicy& policy, const RewardFn& reward,
                    std::size_t conditions, std::size_t group_size, std::uint64_t seed);

/// Delimited (tab-separated) report with a header row.
std::string to_tsv(const std::vector<TrainingRow>& rows);
std::vector<TrainingRow> parse_training_tsv(std::string_view text);

} // namespace vacot
