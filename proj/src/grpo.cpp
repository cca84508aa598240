// SPDX-License-Identifier: Apache-2.0
#include "vacot/grpo.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace vacot {

using nlohmann::json;

void GrpoConfig::validate() const
{
    if (group_size < 2)
        throw Error(Errc::InvalidConfig, fmt::format("group_size must be >= 2, got {}", group_size));
    if (num_steps < 1)
        throw Error(Errc::InvalidConfig, "num_steps must be >= 1");
    if (!(clip_epsilon > 0.0))
        throw Error(Errc::InvalidConfig, fmt::format("clip_epsilon must be > 0, got {}", clip_epsilon));
    if (!(kl_beta >= 0.0) || !std::isfinite(kl_beta))
        throw Error(Errc::InvalidConfig, fmt::format("kl_beta must be >= 0, got {}", kl_beta));
    if (!(std_floor > 0.0))
        throw Error(Errc::InvalidConfig, "std_floor must be positive");
}

json to_json(const GrpoConfig& c)
{
    return {{"group_size", c.group_size},     {"num_steps", c.num_steps}, {"clip_epsilon", c.clip_epsilon},
            {"kl_beta", c.kl_beta},           {"std_floor", c.std_floor}};
}

GrpoConfig grpo_config_from_json(const json& j)
{
    GrpoConfig c;
    c.group_size = j.value("group_size", c.group_size);
    c.num_steps = j.value("num_steps", c.num_steps);
    c.clip_epsilon = j.value("clip_epsilon", c.clip_epsilon);
    c.kl_beta = j.value("kl_beta", c.kl_beta);
    c.std_floor = j.value("std_floor", c.std_floor);
    c.validate();
    return c;
}

Vec Condition::features() const
{
    Vec f = prompt;
    f.insert(f.end(), context.begin(), context.end());
    return f;
}

Vec group_advantages(std::span<const double> rewards, double std_floor)
{
    if (rewards.size() < 2)
        throw Error(Errc::GroupTooSmall, fmt::format("advantages need a group of at least 2, got {}", rewards.size()));
    double const n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards)
        mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards)
        var += (r - mean) * (r - mean);
    var /= n;
    double const denom = std::max(std::sqrt(var), std_floor);

    Vec adv;
    adv.reserve(rewards.size());
    for (double r : rewards)
        adv.push_back((r - mean) / denom);
    return adv;
}

double step_ratio(double logp_new, double logp_old)
{
    if (!std::isfinite(logp_new) || !std::isfinite(logp_old))
        throw Error(Errc::NonFiniteLogProb, fmt::format("log-probabilities {} / {}", logp_new, logp_old));
    return std::exp(logp_new - logp_old);
}

double clipped_term(double ratio, double advantage, double epsilon)
{
    double const clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return std::min(ratio * advantage, clipped * advantage);
}

bool clip_binds(double ratio, double advantage, double epsilon)
{
    double const clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
    return clipped * advantage < ratio * advantage;
}

namespace {

void require_compatible(const GaussianStepPolicy& a, const GaussianStepPolicy& b)
{
    if (!a.compatible_with(b))
        throw Error(Errc::ScheduleMismatch, "policies differ in shape or noise schedule");
}

double step_kl(const GaussianStepPolicy& a, const GaussianStepPolicy& b, const StatePoint& p, Vec* mean_diff)
{
    auto const ma = a.step_mean(p.x, p.t, p.condition);
    auto const mb = b.step_mean(p.x, p.t, p.condition);
    double const var = a.schedule().at(p.t) * a.schedule().at(p.t);
    if (mean_diff) {
        mean_diff->resize(ma.size());
        for (std::size_t k = 0; k < ma.size(); ++k)
            (*mean_diff)[k] = (ma[k] - mb[k]) / var;
    }
    return squared_distance(ma, mb) / (2.0 * var);
}

} // namespace

double gaussian_kl(const GaussianStepPolicy& a, const GaussianStepPolicy& b, std::span<const StatePoint> batch)
{
    require_compatible(a, b);
    if (batch.empty())
        return 0.0;
    double sum = 0.0;
    for (auto const& p : batch)
        sum += step_kl(a, b, p, nullptr);
    return sum / static_cast<double>(batch.size());
}

std::vector<StatePoint> visited_states(const TrajectoryGroup& group)
{
    std::vector<StatePoint> out;
    auto const c = group.condition.features();
    for (auto const& traj : group.trajectories) {
        for (std::size_t t = traj.num_steps(); t >= 1; --t)
            out.push_back(StatePoint {traj.state(t), t, c});
    }
    return out;
}

ObjectiveEval grpo_objective_with_gradient(std::span<const TrajectoryGroup> groups, const GaussianStepPolicy& policy,
                                           const GaussianStepPolicy& old_policy,
                                           const GaussianStepPolicy& ref_policy, const GrpoConfig& config)
{
    config.validate();
    require_compatible(policy, old_policy);
    require_compatible(policy, ref_policy);
    if (groups.empty())
        throw Error(Errc::EmptyBatch, "objective needs at least one trajectory group");
    if (policy.num_steps() != config.num_steps)
        throw Error(Errc::InvalidConfig, fmt::format("policy has {} steps, config {}", policy.num_steps(),
                                                     config.num_steps));

    ObjectiveEval out;
    out.gradient.assign(policy.params().size(), 0.0);
    std::size_t clipped = 0;
    std::size_t terms = 0;
    double const n_groups = static_cast<double>(groups.size());
    double const G = static_cast<double>(config.group_size);
    double const T = static_cast<double>(config.num_steps);

    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto const& group = groups[g];
        if (group.trajectories.size() != config.group_size || group.rewards.size() != config.group_size)
            throw Error(Errc::InvalidConfig,
                        fmt::format("group {}: {} trajectories / {} rewards, expected {}", g,
                                    group.trajectories.size(), group.rewards.size(), config.group_size),
                        g);
        auto const adv = group_advantages(group.rewards, config.std_floor);
        auto const c = group.condition.features();

        double surrogate = 0.0;
        for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
            auto const& traj = group.trajectories[i];
            if (traj.num_steps() != config.num_steps)
                throw Error(Errc::InvalidConfig,
                            fmt::format("group {}, trajectory {}: {} transitions, expected {}", g, i,
                                        traj.num_steps(), config.num_steps),
                            g);
            for (std::size_t t = config.num_steps; t >= 1; --t) {
                auto const& x_t = traj.state(t);
                auto const& x_prev = traj.state(t - 1);
                double r = 0.0;
                try {
                    r = step_ratio(policy.log_prob(x_prev, x_t, t, c), old_policy.log_prob(x_prev, x_t, t, c));
                } catch (const Error& e) {
                    throw Error(e.code(), fmt::format("group {}, trajectory {}, step {}: {}", g, i, t, e.what()), g);
                }
                surrogate += clipped_term(r, adv[i], config.clip_epsilon) / (G * T);
                ++terms;
                if (clip_binds(r, adv[i], config.clip_epsilon)) {
                    ++clipped;
                } else {
                    // d(r A)/d theta = A r d log pi_theta / d theta
                    policy.accumulate_log_prob_grad(x_prev, x_t, t, c, adv[i] * r / (G * T * n_groups),
                                                    out.gradient);
                }
            }
        }

        // KL is always reported; its gradient only matters when beta > 0.
        double kl = 0.0;
        auto const batch = visited_states(group);
        double const m = static_cast<double>(batch.size());
        Vec diff;
        for (auto const& p : batch) {
            kl += step_kl(policy, ref_policy, p, &diff) / m;
            if (config.kl_beta > 0.0)
                policy.accumulate_mean_vjp(p.x, p.t, p.condition, diff, -config.kl_beta / (m * n_groups),
                                           out.gradient);
        }
        out.surrogate += surrogate / n_groups;
        out.kl += kl / n_groups;
    }
    out.objective = out.surrogate - config.kl_beta * out.kl;
    out.clip_fraction = terms ? static_cast<double>(clipped) / static_cast<double>(terms) : 0.0;
    return out;
}

double grpo_objective(std::span<const TrajectoryGroup> groups, const GaussianStepPolicy& policy,
                      const GaussianStepPolicy& old_policy, const GaussianStepPolicy& ref_policy,
                      const GrpoConfig& config)
{
    return grpo_objective_with_gradient(groups, policy, old_policy, ref_policy, config).objective;
}

} // namespace vacot
