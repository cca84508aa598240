// SPDX-License-Identifier: Apache-2.0
#include "vacot/engine.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

namespace vacot {

using nlohmann::json;

void EngineConfig::validate() const
{
    if (max_iterations < 1)
        throw Error(Errc::InvalidConfig, fmt::format("max_iterations must be >= 1, got {}", max_iterations));
}

std::string_view to_string(Termination t) noexcept
{
    return t == Termination::Satisfied ? "satisfied" : "max_iterations";
}

namespace {

template <typename F>
auto call_backend(std::size_t iteration, F&& f)
{
    try {
        return f();
    } catch (const Error& e) {
        throw Error(Errc::BackendFailure,
                    fmt::format("backend failed at iteration {}: {}: {}", iteration, e.name(), e.what()), iteration);
    } catch (const std::exception& e) {
        throw Error(Errc::BackendFailure, fmt::format("backend failed at iteration {}: {}", iteration, e.what()),
                    iteration);
    }
}

} // namespace

EpisodeTrace run_episode(GenerationBackend& backend, const Prompt& prompt, const VisualContext& context,
                         const EngineConfig& config, const RewardEvaluator* scorer)
{
    config.validate();
    if (config.record_rewards && scorer == nullptr)
        throw Error(Errc::InvalidConfig, "record_rewards requires a reward evaluator");

    auto initial = call_backend(0, [&] { return backend.plan_and_generate(prompt, context); });

    if (auto violations = validate_against_context(initial.plan, context.size()); !violations.empty()) {
        std::string what;
        for (auto const& v : violations)
            what += (what.empty() ? "" : ", ") + describe(v);
        throw Error(Errc::PlanInvalid, "plan fails validation: " + what, violations.front().item_index);
    }

    EpisodeTrace trace {
        .config = config,
        .prompt = prompt.text(),
        .context = context.images,
        .plan = initial.plan,
        .initial_image = initial.image,
        .steps = {},
        .final_image = initial.image,
        .terminated_by = Termination::MaxIterations,
    };

    ImageRef current = std::move(initial.image);
    for (int i = 1; i <= config.max_iterations; ++i) {
        auto const iteration = static_cast<std::size_t>(i);
        auto result = call_backend(iteration,
                                   [&] { return backend.evaluate_and_refine(prompt, context, trace.plan, current); });
        call_backend(iteration, [&] {
            check_feedback_against(result.feedback, trace.plan);
            return 0;
        });
        if (result.feedback.satisfied() && !(result.image == current))
            throw Error(Errc::BackendFailure,
                        fmt::format("backend changed the image at iteration {} despite satisfied feedback", i),
                        iteration);

        EpisodeStep step {i, std::move(result.feedback), std::move(result.image), std::nullopt};
        if (config.record_rewards)
            step.reward = (*scorer)(trace.plan, context, step.image, prompt.text());

        current = step.image;
        bool const satisfied = step.feedback.satisfied();
        trace.steps.push_back(std::move(step));
        if (satisfied) {
            trace.terminated_by = Termination::Satisfied;
            break;
        }
    }
    trace.final_image = current;
    return trace;
}

json to_json(const EngineConfig& config)
{
    return {{"max_iterations", config.max_iterations},
            {"record_rewards", config.record_rewards},
            {"seed", config.seed}};
}

EngineConfig engine_config_from_json(const json& j)
{
    EngineConfig c;
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.record_rewards = j.value("record_rewards", c.record_rewards);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

json to_json(const EpisodeTrace& trace)
{
    json context = json::array();
    for (auto const& img : trace.context)
        context.push_back(to_json(img));
    json steps = json::array();
    for (auto const& s : trace.steps) {
        json sj = {{"iteration", s.iteration}, {"feedback", to_json(s.feedback)}, {"image", to_json(s.image)}};
        if (s.reward)
            sj["reward"] = to_json(*s.reward);
        steps.push_back(std::move(sj));
    }
    return {{"config", to_json(trace.config)},
            {"prompt", trace.prompt},
            {"context", std::move(context)},
            {"plan", to_json(trace.plan)},
            {"initial_image", to_json(trace.initial_image)},
            {"steps", std::move(steps)},
            {"final_image", to_json(trace.final_image)},
            {"terminated_by", to_string(trace.terminated_by)}};
}

EpisodeTrace trace_from_json(const json& j)
{
    try {
        EpisodeTrace t {
            .config = engine_config_from_json(j.at("config")),
            .prompt = j.at("prompt").get<std::string>(),
            .context = {},
            .plan = checklist_from_json(j.at("plan")),
            .initial_image = image_from_json(j.at("initial_image")),
            .steps = {},
            .final_image = image_from_json(j.at("final_image")),
            .terminated_by = Termination::MaxIterations,
        };
        for (auto const& img : j.at("context"))
            t.context.push_back(image_from_json(img));
        for (auto const& sj : j.at("steps")) {
            EpisodeStep s {sj.at("iteration").get<int>(), feedback_from_json(sj.at("feedback")),
                           image_from_json(sj.at("image")), std::nullopt};
            if (auto it = sj.find("reward"); it != sj.end())
                s.reward = breakdown_from_json(*it);
            t.steps.push_back(std::move(s));
        }
        auto const term = j.at("terminated_by").get<std::string>();
        if (term == "satisfied")
            t.terminated_by = Termination::Satisfied;
        else if (term != "max_iterations")
            throw Error(Errc::MalformedInput, "unknown termination '" + term + "'");
        if (t.steps.empty() || t.steps.size() > static_cast<std::size_t>(t.config.max_iterations))
            throw Error(Errc::MalformedInput, fmt::format("trace has {} steps for max_iterations {}", t.steps.size(),
                                                          t.config.max_iterations));
        return t;
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, std::string("trace: ") + e.what());
    }
}

std::string serialize(const EpisodeTrace& trace)
{
    return to_json(trace).dump(2) + "\n";
}

EpisodeTrace parse_trace(std::string_view raw)
{
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, std::string("trace is not a structured document: ") + e.what());
    }
    return trace_from_json(j);
}

} // namespace vacot
