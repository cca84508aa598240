// SPDX-License-Identifier: Apache-2.0
#include "vacot/flow_matching.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace vacot {

std::vector<FlowDraw> sample_flow_draws(std::size_t count, std::size_t dim, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal;
    std::vector<FlowDraw> draws(count);
    for (auto& d : draws) {
        d.time = uniform(rng);
        d.noise.resize(dim);
        for (auto& x : d.noise)
            x = normal(rng);
    }
    return draws;
}

namespace {

FlowLoss evaluate(const GaussianStepPolicy& policy, std::span<const FlowSample> batch,
                  std::span<const FlowDraw> draws, bool with_gradient)
{
    if (batch.empty())
        throw Error(Errc::EmptyBatch, "flow-matching loss needs a non-empty batch");
    if (draws.size() != batch.size())
        throw Error(Errc::InvalidConfig, fmt::format("{} draws for a batch of {}", draws.size(), batch.size()));

    FlowLoss out;
    if (with_gradient)
        out.gradient.assign(policy.params().size(), 0.0);
    double const n = static_cast<double>(batch.size());
    auto const dim = policy.shape().state_dim;
    Vec x(dim);
    Vec residual(dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        auto const& s = batch[i];
        auto const& d = draws[i];
        for (std::size_t k = 0; k < dim; ++k)
            x[k] = (1.0 - d.time) * d.noise[k] + d.time * s.target[k];
        auto const v = policy.velocity(x, d.time, s.condition);
        for (std::size_t k = 0; k < dim; ++k)
            residual[k] = v[k] - (s.target[k] - d.noise[k]);
        out.loss += dot(residual, residual) / n;
        if (with_gradient)
            policy.accumulate_velocity_vjp(x, d.time, s.condition, residual, 2.0 / n, out.gradient);
    }
    return out;
}

} // namespace

double flow_matching_loss(const GaussianStepPolicy& policy, std::span<const FlowSample> batch,
                          std::span<const FlowDraw> draws)
{
    return evaluate(policy, batch, draws, false).loss;
}

FlowLoss flow_matching_loss_with_gradient(const GaussianStepPolicy& policy, std::span<const FlowSample> batch,
                                          std::span<const FlowDraw> draws)
{
    return evaluate(policy, batch, draws, true);
}

FlowTrainReport train_flow_matching(GaussianStepPolicy& policy, std::span<const FlowSample> dataset,
                                    const FlowTrainOptions& options)
{
    if (dataset.empty())
        throw Error(Errc::EmptyBatch, "flow-matching training needs data");
    auto const dim = policy.shape().state_dim;

    std::mt19937_64 eval_rng(options.seed ^ 0x5eedf10a7ULL);
    std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);
    std::vector<FlowSample> eval_batch;
    for (std::size_t i = 0; i < options.eval_size; ++i)
        eval_batch.push_back(dataset[pick(eval_rng)]);
    auto const eval_draws = sample_flow_draws(eval_batch.size(), dim, eval_rng);

    FlowTrainReport report;
    report.initial_loss = flow_matching_loss(policy, eval_batch, eval_draws);

    std::mt19937_64 rng(options.seed);
    Adam adam(policy.params().size(), options.optimizer);
    std::vector<FlowSample> batch(options.batch_size);
    for (int it = 0; it < options.iterations; ++it) {
        for (auto& s : batch)
            s = dataset[pick(rng)];
        auto const draws = sample_flow_draws(batch.size(), dim, rng);
        auto const l = flow_matching_loss_with_gradient(policy, batch, draws);
        adam.descend(policy.mutable_params(), l.gradient);
        report.batch_losses.push_back(l.loss);
        for (double p : policy.params()) {
            if (!std::isfinite(p))
                throw Error(Errc::DivergenceDetected, fmt::format("non-finite parameter at iteration {}", it),
                            static_cast<std::size_t>(it));
        }
    }
    report.final_loss = flow_matching_loss(policy, eval_batch, eval_draws);
    return report;
}

std::vector<FlowSample> circle_dataset(std::size_t count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::vector<FlowSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        double const a = angle(rng);
        Vec c {std::cos(a), std::sin(a)};
        out.push_back(FlowSample {c, c});
    }
    return out;
}

} // namespace vacot
