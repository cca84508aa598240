// SPDX-License-Identifier: Apache-2.0
#include "vacot/http_backend.hpp"

#include "vacot/error.hpp"

namespace vacot {

using nlohmann::json;

namespace {

json images_json(const VisualContext& context)
{
    json arr = json::array();
    for (auto const& img : context.images)
        arr.push_back(to_json(img));
    return arr;
}

} // namespace

HttpGenerationBackend::HttpGenerationBackend(JsonTransport transport): transport_(std::move(transport)) {}

json HttpGenerationBackend::call(json request)
{
    auto const op = request.at("op").get<std::string>();
    auto response = transport_(request);
    if (!response.is_object() || !response.value("ok", false))
        throw Error(Errc::TransportFailure,
                    op + " error: " + (response.is_object() ? response.value("error", "unspecified") : response.dump()));
    return response;
}

PlanAndImage HttpGenerationBackend::plan_and_generate(const Prompt& prompt, const VisualContext& context)
{
    auto r = call({{"op", "plan_and_generate"}, {"prompt", prompt.text()}, {"images", images_json(context)}});
    try {
        return {checklist_from_json(r.at("plan")), image_from_json(r.at("image"))};
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, std::string("plan_and_generate response: ") + e.what());
    }
}

FeedbackAndImage HttpGenerationBackend::evaluate_and_refine(const Prompt& prompt, const VisualContext& context,
                                                            const Checklist& plan, const ImageRef& current)
{
    auto r = call({{"op", "evaluate_and_refine"},
                   {"prompt", prompt.text()},
                   {"images", images_json(context)},
                   {"plan", to_json(plan)},
                   {"current", to_json(current)}});
    try {
        return {feedback_from_json(r.at("feedback")), image_from_json(r.at("image"))};
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, std::string("evaluate_and_refine response: ") + e.what());
    }
}

} // namespace vacot
