// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/engine.hpp"

#include <cstdint>
#include <memory>

namespace vacot {

/// Parameters of the vector-valued stand-in for the unified model.
struct SimSpec {
    std::size_t dimension = 2;
    double refinement_rate = 0.5;       // eta in (0, 1]
    double satisfaction_threshold = 0.9; // tau in (0, 1)
    double noise_scale = 0.0;           // sigma >= 0
    std::uint64_t seed = 0;

    void validate() const; // throws InvalidSpec
};

nlohmann::json to_json(const SimSpec& spec);
SimSpec sim_spec_from_json(const nlohmann::json& j);

/// Deterministic backend over feature-vector images.
///
/// Planning emits one Identity item per context image (an empty FixedTemplate
/// plan for a text-only prompt) and Y0 = mean(context) + sigma * N(0, I) drawn
/// from the seeded stream. Evaluation marks item i satisfied iff
/// cos(Y, v_i) >= tau; when something is violated the image moves
/// Y <- Y + eta * (v_j - Y) toward the lowest-scoring violated source v_j,
/// ties going to the lowest index.
class SimulatedBackend final : public GenerationBackend {
public:
    explicit SimulatedBackend(SimSpec spec);

    PlanAndImage plan_and_generate(const Prompt& prompt, const VisualContext& context) override;
    FeedbackAndImage evaluate_and_refine(const Prompt& prompt, const VisualContext& context, const Checklist& plan,
                                         const ImageRef& current) override;

    const SimSpec& spec() const noexcept { return spec_; }

    int plan_calls() const noexcept { return plan_calls_; }
    int refine_calls() const noexcept { return refine_calls_; }

private:
    const Vec& context_vector(const VisualContext& context, std::size_t one_based) const;

    SimSpec spec_;
    int plan_calls_ = 0;
    int refine_calls_ = 0;
};

std::unique_ptr<GenerationBackend> simulated_backend(const SimSpec& spec);

} // namespace vacot
