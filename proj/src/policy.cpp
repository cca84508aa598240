// SPDX-License-Identifier: Apache-2.0
#include "vacot/policy.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace vacot {

NoiseSchedule NoiseSchedule::constant(std::size_t num_steps, double scale)
{
    return NoiseSchedule {std::vector<double>(num_steps, scale)};
}

void NoiseSchedule::validate() const
{
    if (sigma.empty())
        throw Error(Errc::InvalidConfig, "noise schedule needs at least one step");
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i]))
            throw Error(Errc::InvalidConfig, fmt::format("sigma at step {} must be positive, got {}", i + 1, sigma[i]));
    }
}

GaussianStepPolicy::GaussianStepPolicy(PolicyShape shape, NoiseSchedule schedule):
    GaussianStepPolicy(shape, std::move(schedule), Vec(shape.param_count(), 0.0))
{
}

GaussianStepPolicy::GaussianStepPolicy(PolicyShape shape, NoiseSchedule schedule, Vec params):
    shape_(shape), schedule_(std::move(schedule)), params_(std::move(params))
{
    if (shape_.state_dim == 0)
        throw Error(Errc::InvalidConfig, "policy state dimension must be positive");
    schedule_.validate();
    if (params_.size() != shape_.param_count())
        throw Error(Errc::InvalidConfig,
                    fmt::format("policy expects {} parameters, got {}", shape_.param_count(), params_.size()));
}

GaussianStepPolicy GaussianStepPolicy::with_params(Vec params) const
{
    return GaussianStepPolicy(shape_, schedule_, std::move(params));
}

bool GaussianStepPolicy::compatible_with(const GaussianStepPolicy& other) const noexcept
{
    return shape_ == other.shape_ && schedule_ == other.schedule_;
}

Vec GaussianStepPolicy::features(std::span<const double> x, double time, std::span<const double> condition) const
{
    Vec base;
    base.reserve(shape_.base_features());
    for (std::size_t i = 0; i < shape_.state_dim; ++i)
        base.push_back(x[i]);
    for (std::size_t i = 0; i < shape_.condition_dim; ++i)
        base.push_back(i < condition.size() ? condition[i] : 0.0);
    base.push_back(1.0);

    Vec phi;
    phi.reserve(shape_.feature_count());
    double power = 1.0;
    for (std::size_t k = 0; k <= shape_.time_degree; ++k) {
        for (double b : base)
            phi.push_back(b * power);
        power *= time;
    }
    return phi;
}

Vec GaussianStepPolicy::velocity(std::span<const double> x, double time, std::span<const double> condition) const
{
    auto const phi = features(x, time, condition);
    auto const f = phi.size();
    Vec v(shape_.state_dim, 0.0);
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = dot(std::span(params_).subspan(k * f, f), phi);
    return v;
}

double GaussianStepPolicy::flow_time(std::size_t t) const noexcept
{
    return 1.0 - static_cast<double>(t) / static_cast<double>(num_steps());
}

Vec GaussianStepPolicy::step_mean(std::span<const double> x_t, std::size_t t, std::span<const double> condition) const
{
    auto v = velocity(x_t, flow_time(t), condition);
    double const dt = 1.0 / static_cast<double>(num_steps());
    for (std::size_t k = 0; k < v.size(); ++k)
        v[k] = x_t[k] + dt * v[k];
    return v;
}

double GaussianStepPolicy::log_prob(std::span<const double> x_prev, std::span<const double> x_t, std::size_t t,
                                    std::span<const double> condition) const
{
    auto const mu = step_mean(x_t, t, condition);
    double const sigma = schedule_.at(t);
    double const var = sigma * sigma;
    double const d = static_cast<double>(mu.size());
    return -squared_distance(x_prev, mu) / (2.0 * var) - 0.5 * d * std::log(2.0 * std::numbers::pi * var);
}

Vec GaussianStepPolicy::sample_step(std::span<const double> x_t, std::size_t t, std::span<const double> condition,
                                    std::mt19937_64& rng) const
{
    auto mu = step_mean(x_t, t, condition);
    std::normal_distribution<double> normal(0.0, schedule_.at(t));
    for (auto& m : mu)
        m += normal(rng);
    return mu;
}

void GaussianStepPolicy::accumulate_velocity_vjp(std::span<const double> x, double time,
                                                 std::span<const double> condition, std::span<const double> w,
                                                 double scale, std::span<double> grad) const
{
    auto const phi = features(x, time, condition);
    auto const f = phi.size();
    for (std::size_t k = 0; k < shape_.state_dim; ++k) {
        double const wk = scale * w[k];
        if (wk == 0.0)
            continue;
        for (std::size_t j = 0; j < f; ++j)
            grad[k * f + j] += wk * phi[j];
    }
}

void GaussianStepPolicy::accumulate_mean_vjp(std::span<const double> x_t, std::size_t t,
                                             std::span<const double> condition, std::span<const double> w,
                                             double scale, std::span<double> grad) const
{
    double const dt = 1.0 / static_cast<double>(num_steps());
    accumulate_velocity_vjp(x_t, flow_time(t), condition, w, scale * dt, grad);
}

void GaussianStepPolicy::accumulate_log_prob_grad(std::span<const double> x_prev, std::span<const double> x_t,
                                                  std::size_t t, std::span<const double> condition, double scale,
                                                  std::span<double> grad) const
{
    auto const mu = step_mean(x_t, t, condition);
    double const sigma = schedule_.at(t);
    Vec w(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k)
        w[k] = (x_prev[k] - mu[k]) / (sigma * sigma);
    accumulate_mean_vjp(x_t, t, condition, w, scale, grad);
}

nlohmann::json to_json(const GaussianStepPolicy& policy)
{
    auto const& s = policy.shape();
    return {{"state_dim", s.state_dim},
            {"condition_dim", s.condition_dim},
            {"time_degree", s.time_degree},
            {"sigma", policy.schedule().sigma},
            {"params", policy.params()}};
}

GaussianStepPolicy policy_from_json(const nlohmann::json& j)
{
    try {
        PolicyShape shape {j.at("state_dim").get<std::size_t>(), j.at("condition_dim").get<std::size_t>(),
                           j.at("time_degree").get<std::size_t>()};
        return GaussianStepPolicy(shape, NoiseSchedule {j.at("sigma").get<Vec>()}, j.at("params").get<Vec>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::MalformedInput, std::string("policy: ") + e.what());
    }
}

Adam::Adam(std::size_t size, OptimizerSettings settings): settings_(settings), m_(size, 0.0), v_(size, 0.0) {}

void Adam::ascend(std::span<double> params, std::span<const double> grad)
{
    update(params, grad, +1.0);
}

void Adam::descend(std::span<double> params, std::span<const double> grad)
{
    update(params, grad, -1.0);
}

void Adam::update(std::span<double> params, std::span<const double> grad, double sign)
{
    ++step_;
    double const bc1 = 1.0 - std::pow(settings_.beta1, static_cast<double>(step_));
    double const bc2 = 1.0 - std::pow(settings_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = settings_.beta1 * m_[i] + (1.0 - settings_.beta1) * grad[i];
        v_[i] = settings_.beta2 * v_[i] + (1.0 - settings_.beta2) * grad[i] * grad[i];
        double const mhat = m_[i] / bc1;
        double const vhat = v_[i] / bc2;
        params[i] += sign * settings_.learning_rate * mhat / (std::sqrt(vhat) + settings_.epsilon);
    }
}

} // namespace vacot
