// SPDX-License-Identifier: Apache-2.0
#pragma once

// Toy flow policy: a velocity field that is linear in its parameters over the
// features [x, c, 1] (x) [1, s, s^2, ..., s^k], with s the flow time. The
// reverse transition from x_t to x_{t-1} is Gaussian,
//
//   x_{t-1} ~ N(x_t + v(x_t, 1 - t/T, c) / T, sigma_t^2 I),
//
// so log-densities and their parameter gradients are exact.

#include "vacot/util.hpp"

#include <json.hpp>

#include <random>
#include <span>

namespace vacot {

struct PolicyShape {
    std::size_t state_dim = 2;
    std::size_t condition_dim = 2;
    std::size_t time_degree = 3;

    std::size_t base_features() const noexcept { return state_dim + condition_dim + 1; }
    std::size_t feature_count() const noexcept { return base_features() * (time_degree + 1); }
    std::size_t param_count() const noexcept { return state_dim * feature_count(); }

    bool operator==(const PolicyShape&) const = default;
};

/// Per-step noise scales; sigma[t-1] belongs to reverse step t = 1..T.
struct NoiseSchedule {
    std::vector<double> sigma;

    static NoiseSchedule constant(std::size_t num_steps, double scale);

    std::size_t num_steps() const noexcept { return sigma.size(); }
    double at(std::size_t t) const { return sigma.at(t - 1); }
    void validate() const; // throws InvalidConfig

    bool operator==(const NoiseSchedule&) const = default;
};

class GaussianStepPolicy {
public:
    GaussianStepPolicy(PolicyShape shape, NoiseSchedule schedule);
    GaussianStepPolicy(PolicyShape shape, NoiseSchedule schedule, Vec params);

    const PolicyShape& shape() const noexcept { return shape_; }
    const NoiseSchedule& schedule() const noexcept { return schedule_; }
    std::size_t num_steps() const noexcept { return schedule_.num_steps(); }

    const Vec& params() const noexcept { return params_; }
    Vec& mutable_params() noexcept { return params_; }
    GaussianStepPolicy with_params(Vec params) const;

    /// Same shape and noise schedule, so log-ratios and KLs are well defined.
    bool compatible_with(const GaussianStepPolicy& other) const noexcept;

    Vec features(std::span<const double> x, double time, std::span<const double> condition) const;
    Vec velocity(std::span<const double> x, double time, std::span<const double> condition) const;

    /// Flow time at reverse step t: 0 at pure noise (t = T), approaching 1 near data.
    double flow_time(std::size_t t) const noexcept;

    Vec step_mean(std::span<const double> x_t, std::size_t t, std::span<const double> condition) const;
    double log_prob(std::span<const double> x_prev, std::span<const double> x_t, std::size_t t,
                    std::span<const double> condition) const;
    Vec sample_step(std::span<const double> x_t, std::size_t t, std::span<const double> condition,
                    std::mt19937_64& rng) const;

    /// grad += scale * d log_prob / d params
    void accumulate_log_prob_grad(std::span<const double> x_prev, std::span<const double> x_t, std::size_t t,
                                  std::span<const double> condition, double scale, std::span<double> grad) const;

    /// grad += scale * sum_k w_k * d velocity_k / d params
    void accumulate_velocity_vjp(std::span<const double> x, double time, std::span<const double> condition,
                                 std::span<const double> w, double scale, std::span<double> grad) const;

    /// grad += scale * sum_k w_k * d step_mean_k / d params
    void accumulate_mean_vjp(std::span<const double> x_t, std::size_t t, std::span<const double> condition,
                             std::span<const double> w, double scale, std::span<double> grad) const;

private:
    PolicyShape shape_;
    NoiseSchedule schedule_;
    Vec params_;
};

nlohmann::json to_json(const GaussianStepPolicy& policy);
GaussianStepPolicy policy_from_json(const nlohmann::json& j);

struct OptimizerSettings {
    double learning_rate = 0.02;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction. `ascend` maximises, `descend` minimises.
class Adam {
public:
    Adam(std::size_t size, OptimizerSettings settings);

    void ascend(std::span<double> params, std::span<const double> grad);
    void descend(std::span<double> params, std::span<const double> grad);

private:
    void update(std::span<double> params, std::span<const double> grad, double sign);

    OptimizerSettings settings_;
    Vec m_;
    Vec v_;
    long step_ = 0;
};

} // namespace vacot
