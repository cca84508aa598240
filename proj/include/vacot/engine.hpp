// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plan -> generate -> bounded evaluate-and-refine loop over an abstract
// generation backend, recording a complete trace of the episode.

#include "vacot/context.hpp"
#include "vacot/reward.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace vacot {

struct PlanAndImage {
    Checklist plan;
    ImageRef image;
};

struct FeedbackAndImage {
    EvalFeedback feedback;
    ImageRef image;
};

/// The unified understanding/generation model. When the returned feedback is
/// satisfied, the returned image must equal `current`.
class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;

    virtual PlanAndImage plan_and_generate(const Prompt& prompt, const VisualContext& context) = 0;
    virtual FeedbackAndImage evaluate_and_refine(const Prompt& prompt, const VisualContext& context,
                                                 const Checklist& plan, const ImageRef& current) = 0;
};

struct EngineConfig {
    int max_iterations = 3;
    bool record_rewards = false;
    std::uint64_t seed = 0;

    void validate() const; // throws InvalidConfig
    bool operator==(const EngineConfig&) const = default;
};

enum class Termination { Satisfied, MaxIterations };

std::string_view to_string(Termination t) noexcept;

struct EpisodeStep {
    int iteration = 0; // 1-based
    EvalFeedback feedback;
    ImageRef image;
    std::optional<RewardBreakdown> reward;

    bool operator==(const EpisodeStep&) const = default;
};

struct EpisodeTrace {
    EngineConfig config;
    std::string prompt;
    std::vector<ImageRef> context;
    Checklist plan;
    ImageRef initial_image;
    std::vector<EpisodeStep> steps;
    ImageRef final_image;
    Termination terminated_by = Termination::MaxIterations;

    bool operator==(const EpisodeTrace&) const = default;
};

/// Runs one episode: a single plan_and_generate call, then up to
/// max_iterations evaluate_and_refine calls, stopping right after the first
/// satisfied feedback. Rewards, when recorded, never affect control flow.
///
/// Backend exceptions surface as BackendFailure with the iteration index
/// (0 for the planning call); a plan that fails validation raises PlanInvalid.
EpisodeTrace run_episode(GenerationBackend& backend, const Prompt& prompt, const VisualContext& context,
                         const EngineConfig& config, const RewardEvaluator* scorer = nullptr);

nlohmann::json to_json(const EngineConfig& config);
EngineConfig engine_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EpisodeTrace& trace);
EpisodeTrace trace_from_json(const nlohmann::json& j);

/// One newline-terminated document per episode.
std::string serialize(const EpisodeTrace& trace);
EpisodeTrace parse_trace(std::string_view raw);

} // namespace vacot
