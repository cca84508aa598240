// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vacot/engine.hpp"
#include "vacot/transport.hpp"

namespace vacot {

/// Generation backend behind a remote model server.
///
/// Request:  {"op": "plan_and_generate", "prompt", "images": [image...]}
///           {"op": "evaluate_and_refine", "prompt", "images", "plan", "current"}
/// Response: {"ok": bool, "plan"?: checklist, "feedback"?: feedback, "image": image, "error"?: str}
///
/// Documents use the canonical checklist/feedback schema; server errors raise
/// TransportFailure, which the engine reports as BackendFailure.
class HttpGenerationBackend final : public GenerationBackend {
public:
    explicit HttpGenerationBackend(JsonTransport transport);

    PlanAndImage plan_and_generate(const Prompt& prompt, const VisualContext& context) override;
    FeedbackAndImage evaluate_and_refine(const Prompt& prompt, const VisualContext& context, const Checklist& plan,
                                         const ImageRef& current) override;

private:
    nlohmann::json call(nlohmann::json request);

    JsonTransport transport_;
};

} // namespace vacot
