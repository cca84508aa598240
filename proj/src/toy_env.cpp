// SPDX-License-Identifier: Apache-2.0
#include "vacot/toy_env.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <sstream>

namespace vacot {

using nlohmann::json;

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag, std::uint64_t a, std::uint64_t b)
{
    return hash64(fmt::format("{}:{}:{}:{}", tag, seed, a, b));
}

constexpr std::string_view kTsvHeader = "iter\tmean_reward\tkl\tclip_fraction\tobjective\teval_reward";

} // namespace

void ToyFlowEnv::validate() const
{
    if (state_dim < 2)
        throw Error(Errc::InvalidConfig, "toy env needs state_dim >= 2");
    if (num_steps < 1)
        throw Error(Errc::InvalidConfig, "toy env needs num_steps >= 1");
    if (!(step_noise > 0.0) || !(init_scale >= 0.0) || !(target_radius >= 0.0))
        throw Error(Errc::InvalidConfig, "toy env scales must be non-negative (step_noise positive)");
}

PolicyShape ToyFlowEnv::policy_shape() const
{
    return PolicyShape {state_dim, state_dim, time_degree};
}

NoiseSchedule ToyFlowEnv::schedule() const
{
    return NoiseSchedule::constant(num_steps, step_noise);
}

GaussianStepPolicy ToyFlowEnv::initial_policy() const
{
    validate();
    return GaussianStepPolicy(policy_shape(), schedule());
}

Condition ToyFlowEnv::sample_condition(std::mt19937_64& rng) const
{
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    double const a = angle(rng);
    Vec c(state_dim, 0.0);
    c[0] = target_radius * std::cos(a);
    c[1] = target_radius * std::sin(a);
    return Condition {{}, std::move(c)};
}

Vec ToyFlowEnv::target(const Condition& condition) const
{
    return condition.context;
}

Trajectory ToyFlowEnv::rollout(const GaussianStepPolicy& policy, const Condition& condition,
                               std::mt19937_64& rng) const
{
    std::normal_distribution<double> normal(0.0, init_scale);
    Trajectory traj;
    traj.states.reserve(num_steps + 1);
    Vec x(state_dim);
    for (auto& v : x)
        v = normal(rng);
    traj.states.push_back(x);
    auto const c = condition.features();
    for (std::size_t t = num_steps; t >= 1; --t)
        traj.states.push_back(policy.sample_step(traj.states.back(), t, c, rng));
    return traj;
}

RewardFn default_reward(const ToyFlowEnv& env)
{
    return [env](const Vec& x0, const Condition& c) { return std::exp(-squared_distance(x0, env.target(c))); };
}

json to_json(const ToyFlowEnv& env)
{
    return {{"state_dim", env.state_dim},   {"num_steps", env.num_steps},         {"step_noise", env.step_noise},
            {"init_scale", env.init_scale}, {"target_radius", env.target_radius}, {"time_degree", env.time_degree}};
}

ToyFlowEnv toy_env_from_json(const json& j)
{
    ToyFlowEnv e;
    e.state_dim = j.value("state_dim", e.state_dim);
    e.num_steps = j.value("num_steps", e.num_steps);
    e.step_noise = j.value("step_noise", e.step_noise);
    e.init_scale = j.value("init_scale", e.init_scale);
    e.target_radius = j.value("target_radius", e.target_radius);
    e.time_degree = j.value("time_degree", e.time_degree);
    e.validate();
    return e;
}

json to_json(const ToyTrainOptions& o)
{
    return {{"iterations", o.iterations},
            {"conditions_per_iteration", o.conditions_per_iteration},
            {"eval_conditions", o.eval_conditions},
            {"seed", o.seed}};
}

ToyTrainOptions toy_train_options_from_json(const json& j)
{
    ToyTrainOptions o;
    o.iterations = j.value("iterations", o.iterations);
    o.conditions_per_iteration = j.value("conditions_per_iteration", o.conditions_per_iteration);
    o.eval_conditions = j.value("eval_conditions", o.eval_conditions);
    o.seed = j.value("seed", o.seed);
    if (o.iterations < 0 || o.conditions_per_iteration == 0)
        throw Error(Errc::InvalidConfig, "iterations must be >= 0 and conditions_per_iteration >= 1");
    return o;
}

json to_json(const OptimizerSettings& o)
{
    return {{"learning_rate", o.learning_rate}, {"beta1", o.beta1}, {"beta2", o.beta2}, {"epsilon", o.epsilon}};
}

OptimizerSettings optimizer_settings_from_json(const json& j)
{
    OptimizerSettings o;
    o.learning_rate = j.value("learning_rate", o.learning_rate);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.epsilon = j.value("epsilon", o.epsilon);
    if (!(o.learning_rate >= 0.0))
        throw Error(Errc::InvalidConfig, "learning_rate must be >= 0");
    return o;
}

double probe_reward(const ToyFlowEnv& env, const GaussianStepPolicy& policy, const RewardFn& reward,
                    std::size_t conditions, std::size_t group_size, std::uint64_t seed)
{
    if (conditions == 0 || group_size == 0)
        return 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < conditions; ++j) {
        std::mt19937_64 rng(stream_seed(seed, "probe", j, 0));
        auto const cond = env.sample_condition(rng);
        for (std::size_t i = 0; i < group_size; ++i)
            sum += reward(env.rollout(policy, cond, rng).final_state(), cond);
    }
    return sum / static_cast<double>(conditions * group_size);
}

TrainingReport train_toy(const ToyFlowEnv& env, GaussianStepPolicy& policy, const GrpoConfig& config,
                         const OptimizerSettings& optimizer, const ToyTrainOptions& options, const RewardFn& reward)
{
    env.validate();
    config.validate();
    if (config.num_steps != env.num_steps || policy.num_steps() != env.num_steps)
        throw Error(Errc::InvalidConfig, fmt::format("num_steps disagree: config {}, env {}, policy {}",
                                                     config.num_steps, env.num_steps, policy.num_steps()));

    TrainingReport report;
    report.initial_params = policy.params();
    GaussianStepPolicy const reference = policy;
    Adam adam(policy.params().size(), optimizer);
    auto probe = [&] {
        return probe_reward(env, policy, reward, options.eval_conditions, config.group_size, options.seed);
    };
    report.initial_eval_reward = probe();

    for (int it = 0; it < options.iterations; ++it) {
        TrainingRow row;
        row.iter = it;
        row.eval_reward = it == 0 ? report.initial_eval_reward : probe();
        GaussianStepPolicy const sampler = policy;

        std::vector<TrajectoryGroup> groups(options.conditions_per_iteration);
        double reward_sum = 0.0;
        for (std::size_t j = 0; j < groups.size(); ++j) {
            std::mt19937_64 rng(stream_seed(options.seed, "rollout", static_cast<std::uint64_t>(it), j));
            auto& g = groups[j];
            g.condition = env.sample_condition(rng);
            for (std::size_t i = 0; i < config.group_size; ++i) {
                g.trajectories.push_back(env.rollout(sampler, g.condition, rng));
                g.rewards.push_back(reward(g.trajectories.back().final_state(), g.condition));
                reward_sum += g.rewards.back();
            }
        }
        row.mean_reward = reward_sum / static_cast<double>(groups.size() * config.group_size);

        double objective_sum = 0.0;
        double clip_sum = 0.0;
        for (auto const& g : groups) {
            auto const eval = grpo_objective_with_gradient(std::span(&g, 1), policy, sampler, reference, config);
            objective_sum += eval.objective;
            clip_sum += eval.clip_fraction;
            adam.ascend(policy.mutable_params(), eval.gradient);
            for (double p : policy.params()) {
                if (!std::isfinite(p))
                    throw Error(Errc::DivergenceDetected, fmt::format("non-finite parameter at iteration {}", it),
                                static_cast<std::size_t>(it));
            }
        }
        row.objective = objective_sum / static_cast<double>(groups.size());
        row.clip_fraction = clip_sum / static_cast<double>(groups.size());

        double kl = 0.0;
        for (auto const& g : groups) {
            auto const states = visited_states(g);
            kl += gaussian_kl(policy, reference, states) / static_cast<double>(groups.size());
        }
        row.kl = kl;
        report.rows.push_back(row);
    }
    report.final_eval_reward = probe();
    report.final_params = policy.params();
    return report;
}

std::string to_tsv(const std::vector<TrainingRow>& rows)
{
    std::string out(kTsvHeader);
    out += '\n';
    for (auto const& r : rows)
        out += fmt::format("{}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\t{:.17g}\n", r.iter, r.mean_reward, r.kl,
                           r.clip_fraction, r.objective, r.eval_reward);
    return out;
}

std::vector<TrainingRow> parse_training_tsv(std::string_view text)
{
    std::istringstream in {std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kTsvHeader)
        throw Error(Errc::MalformedInput, "training report must start with the header row");
    std::vector<TrainingRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        TrainingRow r;
        std::string rest;
        if (!(ls >> r.iter >> r.mean_reward >> r.kl >> r.clip_fraction >> r.objective >> r.eval_reward) || (ls >> rest))
            throw Error(Errc::MalformedInput, fmt::format("training report line {} is malformed", lineno), lineno);
        rows.push_back(r);
    }
    return rows;
}

} // namespace vacot
