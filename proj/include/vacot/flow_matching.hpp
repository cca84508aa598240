// SPDX-License-Identifier: Apache-2.0
#pragma once

// Velocity-prediction training on straight interpolation paths:
// x_s = (1 - s) * noise + s * target, regressed onto (target - noise).

#include "vacot/policy.hpp"

#include <random>
#include <span>
#include <vector>

namespace vacot {

struct FlowSample {
    Vec target;
    Vec condition;
};

/// Interpolation time and noise endpoint for one sample.
struct FlowDraw {
    double time = 0.0;
    Vec noise;
};

/// time ~ U[0, 1), noise ~ N(0, I).
std::vector<FlowDraw> sample_flow_draws(std::size_t count, std::size_t dim, std::mt19937_64& rng);

struct FlowLoss {
    double loss = 0.0;
    Vec gradient;
};

/// Mean over the batch of |v(x_s, s, c) - (target - noise)|^2. Throws EmptyBatch.
double flow_matching_loss(const GaussianStepPolicy& policy, std::span<const FlowSample> batch,
                          std::span<const FlowDraw> draws);
FlowLoss flow_matching_loss_with_gradient(const GaussianStepPolicy& policy, std::span<const FlowSample> batch,
                                          std::span<const FlowDraw> draws);

struct FlowTrainOptions {
    int iterations = 1500;
    std::size_t batch_size = 64;
    std::size_t eval_size = 512;
    OptimizerSettings optimizer {.learning_rate = 0.02};
    std::uint64_t seed = 0;
};

struct FlowTrainReport {
    double initial_loss = 0.0; // on a fixed evaluation draw
    double final_loss = 0.0;   // same draw, after training
    std::vector<double> batch_losses;
};

FlowTrainReport train_flow_matching(GaussianStepPolicy& policy, std::span<const FlowSample> dataset,
                                    const FlowTrainOptions& options);

/// Seeded 2-D dataset: conditions on the unit circle, target = condition.
std::vector<FlowSample> circle_dataset(std::size_t count, std::uint64_t seed);

} // namespace vacot
