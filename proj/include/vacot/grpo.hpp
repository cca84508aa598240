// SPDX-License-Identifier: Apache-2.0
#pragma once

// Group-relative policy optimisation over multi-step Gaussian trajectories:
// group-normalised advantages, the per-step clipped ratio surrogate, and a
// closed-form KL penalty toward a reference policy.

#include "vacot/policy.hpp"

#include <span>
#include <vector>

namespace vacot {

struct GrpoConfig {
    std::size_t group_size = 4; // G
    std::size_t num_steps = 4;  // T
    double clip_epsilon = 0.2;
    double kl_beta = 0.0;
    double std_floor = 1e-8;

    void validate() const; // throws InvalidConfig
};

nlohmann::json to_json(const GrpoConfig& c);
GrpoConfig grpo_config_from_json(const nlohmann::json& j);

struct Condition {
    Vec prompt;
    Vec context;

    /// prompt ++ context, the policy's conditioning input.
    Vec features() const;
    bool operator==(const Condition&) const = default;
};

/// States x_T, ..., x_0 of one reverse trajectory; x_0 is the generated output.
struct Trajectory {
    std::vector<Vec> states;

    std::size_t num_steps() const noexcept { return states.empty() ? 0 : states.size() - 1; }
    /// x_t for t in [0, T].
    const Vec& state(std::size_t t) const { return states.at(num_steps() - t); }
    const Vec& final_state() const { return states.back(); }
};

struct TrajectoryGroup {
    std::vector<Trajectory> trajectories;
    Vec rewards;
    Condition condition;
};

/// (R_i - mean) / max(std, std_floor), population std. Throws GroupTooSmall for G < 2.
Vec group_advantages(std::span<const double> rewards, double std_floor = 1e-8);

/// exp(logp_new - logp_old). Throws NonFiniteLogProb.
double step_ratio(double logp_new, double logp_old);

/// min(r * A, clip(r, 1 - eps, 1 + eps) * A)
double clipped_term(double ratio, double advantage, double epsilon);

/// True when the clipped branch is strictly the smaller one (no gradient flows).
bool clip_binds(double ratio, double advantage, double epsilon);

struct StatePoint {
    Vec x;
    std::size_t t = 1;
    Vec condition;
};

/// Mean over the batch of KL(N(mu_a, sigma_t^2 I) || N(mu_b, sigma_t^2 I)).
/// Throws ScheduleMismatch if the policies differ in shape or noise schedule.
double gaussian_kl(const GaussianStepPolicy& a, const GaussianStepPolicy& b, std::span<const StatePoint> batch);

/// Every visited pre-transition state (x_t, t, c), t = T..1, of a group.
std::vector<StatePoint> visited_states(const TrajectoryGroup& group);

struct ObjectiveEval {
    double objective = 0.0;
    double surrogate = 0.0;
    double kl = 0.0;
    double clip_fraction = 0.0;
    Vec gradient; // d objective / d policy params
};

/// Averaged over groups: (1/G) sum_i (1/T) sum_t clipped_term(r_t^i, A_i, eps)
/// - beta * KL(policy || reference), with r_t^i the ratio of the policy to the
/// sampling policy on the recorded transition.
ObjectiveEval grpo_objective_with_gradient(std::span<const TrajectoryGroup> groups, const GaussianStepPolicy& policy,
                                           const GaussianStepPolicy& old_policy,
                                           const GaussianStepPolicy& ref_policy, const GrpoConfig& config);

double grpo_objective(std::span<const TrajectoryGroup> groups, const GaussianStepPolicy& policy,
                      const GaussianStepPolicy& old_policy, const GaussianStepPolicy& ref_policy,
                      const GrpoConfig& config);

} // namespace vacot
