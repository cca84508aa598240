// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace vacot;
using vacot::testing::error_code_of;
using vacot::testing::Gen;

TEST_CASE("rollouts follow the schedule")
{
    ToyFlowEnv const env;
    Gen gen(1);
    auto const policy = env.initial_policy();
    auto const cond = env.sample_condition(gen.rng());
    CHECK(std::abs(l2_norm(cond.context) - 1.0) < 1e-12);
    auto const traj = env.rollout(policy, cond, gen.rng());
    CHECK(traj.num_steps() == env.num_steps);
    CHECK(traj.states.size() == env.num_steps + 1);

    auto const r = default_reward(env);
    CHECK(r(cond.context, cond) == 1.0);
    Vec off = cond.context;
    off[0] += 1.0;
    CHECK(r(off, cond) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("log densities of the reverse step")
{
    ToyFlowEnv const env;
    auto const policy = env.initial_policy();
    Vec const x {0.3, -0.2}, c {1.0, 0.0};
    // Zero velocity: mean is x_t, so the density peaks at x_prev = x_t.
    double const sigma = env.step_noise;
    double const expected = -std::log(2.0 * M_PI * sigma * sigma);
    CHECK(policy.log_prob(x, x, 2, c) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(policy.flow_time(env.num_steps) == 0.0);
    CHECK(policy.flow_time(1) == doctest::Approx(0.75));
}

TEST_CASE("zero learning rate leaves everything in place")
{
    ToyFlowEnv const env;
    auto policy = env.initial_policy();
    GrpoConfig const config;
    OptimizerSettings opt;
    opt.learning_rate = 0.0;
    ToyTrainOptions o;
    o.iterations = 10;
    o.seed = 5;
    auto const report = train_toy(env, policy, config, opt, o, default_reward(env));
    CHECK(report.final_params == report.initial_params);
    CHECK(policy.params() == report.initial_params);
    REQUIRE(report.rows.size() == 10);
    for (auto const& row : report.rows) {
        CHECK(row.eval_reward == report.initial_eval_reward);
        CHECK(row.kl == 0.0);
    }
    CHECK(report.final_eval_reward == report.initial_eval_reward);
}

TEST_CASE("training is replay-deterministic and the report round trips")
{
    ToyFlowEnv const env;
    ToyTrainOptions o;
    o.iterations = 15;
    o.seed = 9;
    auto p1 = env.initial_policy(), p2 = env.initial_policy();
    auto const a = train_toy(env, p1, GrpoConfig {}, OptimizerSettings {}, o, default_reward(env));
    auto const b = train_toy(env, p2, GrpoConfig {}, OptimizerSettings {}, o, default_reward(env));
    CHECK(to_tsv(a.rows) == to_tsv(b.rows));
    CHECK(p1.params() == p2.params());
    CHECK(parse_training_tsv(to_tsv(a.rows)) == a.rows);
    CHECK(policy_from_json(to_json(p1)).params() == p1.params());
    CHECK(error_code_of([] { parse_training_tsv("iter\tbogus\n"); }) == Errc::MalformedInput);
}

TEST_CASE("divergence is detected")
{
    ToyFlowEnv const env;
    auto policy = env.initial_policy();
    ToyTrainOptions o;
    o.iterations = 3;
    RewardFn const nan_reward = [](const Vec&, const Condition&) { return std::nan(""); };
    CHECK(error_code_of([&] {
              train_toy(env, policy, GrpoConfig {}, OptimizerSettings {}, o, nan_reward);
          }) == Errc::DivergenceDetected);
}

TEST_CASE("config documents")
{
    ToyFlowEnv env;
    env.num_steps = 6;
    CHECK(toy_env_from_json(to_json(env)).num_steps == 6);
    ToyTrainOptions o;
    o.iterations = 7;
    CHECK(toy_train_options_from_json(to_json(o)).iterations == 7);
    OptimizerSettings s;
    s.learning_rate = 0.5;
    CHECK(optimizer_settings_from_json(to_json(s)).learning_rate == 0.5);
}
