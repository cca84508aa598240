// SPDX-License-Identifier: Apache-2.0
#include "vacot/annotator.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <random>
#include <sstream>

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

ServiceAnnotator::ServiceAnnotator(JsonTransport transport, AnnotatorPromptIds prompt_ids):
    transport_(std::move(transport)), prompt_ids_(std::move(prompt_ids))
{
}

json ServiceAnnotator::plan_request(const Prompt& prompt, const VisualContext& context, const std::string& prompt_id)
{
    return {{"op", "plan"}, {"prompt", prompt.text()}, {"images", images_json(context)}, {"system_prompt_id", prompt_id}};
}

json ServiceAnnotator::eval_request(const Prompt& prompt, const VisualContext& context, const Checklist& plan,
                                    const ImageRef& negative, const ImageRef& final_gt, const std::string& prompt_id)
{
    return {{"op", "eval"},
            {"prompt", prompt.text()},
            {"images", images_json(context)},
            {"plan", to_json(plan)},
            {"negative", to_json(negative)},
            {"gt", to_json(final_gt)},
            {"system_prompt_id", prompt_id}};
}

std::string ServiceAnnotator::fetch_document(const json& request)
{
    json response;
    try {
        response = transport_(request);
    } catch (const Error& e) {
        if (e.code() == Errc::AnnotatorUnavailable)
            throw;
        throw Error(Errc::AnnotatorUnavailable, fmt::format("annotator unreachable: {}", e.what()));
    }
    if (!response.is_object() || !response.value("ok", false))
        throw Error(Errc::AnnotatorUnavailable,
                    "annotator error: " + (response.is_object() ? response.value("error", "unspecified") : response.dump()));
    auto it = response.find("document");
    if (it == response.end() || !it->is_string())
        throw Error(Errc::SchemaViolation, "annotator response carries no document");
    return it->get<std::string>();
}

Checklist ServiceAnnotator::annotate_plan(const Prompt& prompt, const VisualContext& context)
{
    auto const doc = fetch_document(plan_request(prompt, context, prompt_ids_.plan));
    try {
        return parse_checklist(doc);
    } catch (const Error& e) {
        throw Error(Errc::SchemaViolation, fmt::format("plan document rejected: {}: {}", e.name(), e.what()), e.index());
    }
}

EvalFeedback ServiceAnnotator::annotate_eval(const Prompt& prompt, const VisualContext& context,
                                             const Checklist& plan, const ImageRef& negative,
                                             const ImageRef& final_gt)
{
    auto const doc = fetch_document(eval_request(prompt, context, plan, negative, final_gt, prompt_ids_.eval));
    try {
        auto feedback = parse_feedback(doc);
        check_feedback_against(feedback, plan);
        return feedback;
    } catch (const Error& e) {
        throw Error(Errc::SchemaViolation, fmt::format("evaluation document rejected: {}: {}", e.name(), e.what()),
                    e.index());
    }
}

AnnotationCache::AnnotationCache(std::filesystem::path dir): dir_(std::move(dir))
{
    std::filesystem::create_directories(dir_);
}

std::string AnnotationCache::key(const json& request)
{
    return content_hash_hex(request.dump());
}

std::filesystem::path AnnotationCache::entry_path(const std::string& key) const
{
    return dir_ / (key + ".json");
}

std::optional<json> AnnotationCache::lookup(const json& request) const
{
    auto const k = key(request);
    {
        std::lock_guard lock(mutex_);
        if (auto it = memo_.find(k); it != memo_.end())
            return it->second;
    }
    auto const path = entry_path(k);
    if (!std::filesystem::exists(path))
        return std::nullopt;
    json entry;
    try {
        entry = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, fmt::format("corrupt cache entry {}: {}", path.string(), e.what()));
    }
    auto response = entry.at("response");
    std::lock_guard lock(mutex_);
    memo_.emplace(k, response);
    return response;
}

void AnnotationCache::store(const json& request, const json& response)
{
    auto const k = key(request);
    json const entry = {{"request", request}, {"response", response}};
    write_file_atomic(entry_path(k), entry.dump(2) + "\n");
    std::lock_guard lock(mutex_);
    memo_[k] = response;
}

JsonTransport caching_transport(JsonTransport upstream, std::shared_ptr<AnnotationCache> cache, CacheMode mode)
{
    return [upstream = std::move(upstream), cache = std::move(cache), mode](const json& request) {
        if (auto hit = cache->lookup(request))
            return *hit;
        if (mode == CacheMode::ReplayOnly)
            throw Error(Errc::AnnotatorUnavailable,
                        "replay cache has no entry " + AnnotationCache::key(request).substr(0, 16));
        auto response = upstream(request);
        if (response.is_object() && response.value("ok", false))
            cache->store(request, response);
        return response;
    };
}

namespace {

std::string noun_phrase_before(const std::string& prompt, std::size_t pos)
{
    std::istringstream in(prompt.substr(0, pos));
    std::vector<std::string> words;
    for (std::string w; in >> w;)
        words.push_back(w);
    if (words.empty())
        return {};
    std::size_t start = words.size() > 2 ? words.size() - 2 : 0;
    for (std::size_t i = words.size(); i-- > 0 && i + 4 > words.size();) {
        if (words[i] == "the" || words[i] == "a" || words[i] == "an" || words[i] == "The" || words[i] == "A") {
            start = i;
            break;
        }
    }
    std::string out;
    for (std::size_t i = start; i < words.size(); ++i)
        out += (out.empty() ? "" : " ") + words[i];
    return out;
}

json mock_plan(const json& req)
{
    auto const prompt = req.at("prompt").get<std::string>();
    auto const n = req.at("images").size();
    if (n == 0)
        return {{"ok", true}, {"document", serialize(fixed_template_plan(prompt))}};

    std::vector<CheckItem> items;
    for (std::size_t k = 1; k <= n; ++k) {
        auto const id = ImageId::input(k).str();
        if (prompt.find("style of " + id) != std::string::npos) {
            items.push_back(CheckItem::make(CheckType::Style, ElementRef {ImageId::input(k), "artistic style", {}},
                                            "artistic style"));
            continue;
        }
        std::string description;
        if (auto pos = prompt.find("in " + id); pos != std::string::npos)
            description = noun_phrase_before(prompt, pos);
        if (description.empty())
            description = "subject of " + id;
        items.push_back(
            CheckItem::make(CheckType::Identity, ElementRef {ImageId::input(k), description, {}}, description));
    }
    return {{"ok", true},
            {"document", serialize(Checklist(std::move(items), PlanOrigin::GroundTruthAnnotation))}};
}

json mock_eval(const json& req)
{
    auto const plan = checklist_from_json(req.at("plan"));
    if (req.at("negative") == req.at("gt"))
        return {{"ok", true}, {"document", serialize(EvalFeedback::all_satisfied(plan))}};

    std::mt19937_64 rng(hash64(req.dump()));
    std::vector<ItemVerdict> verdicts;
    bool any_violated = false;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        bool const ok = rng() % 3 == 0;
        any_violated = any_violated || !ok;
        verdicts.push_back({i, ok, ok ? 0.9 : 0.3, ok ? "preserved" : "not preserved"});
    }
    if (!any_violated && !verdicts.empty()) {
        verdicts.front().satisfied = false;
        verdicts.front().score = 0.3;
        verdicts.front().critique = "not preserved";
    }
    std::string instruction;
    for (auto const& v : verdicts) {
        if (v.satisfied)
            continue;
        auto const& item = plan.items()[v.item_index];
        instruction += fmt::format("{}Restore the {} of {} from {}.", instruction.empty() ? "" : " ",
                                   to_string(item.check_type), item.source.description, item.source.image_id.str());
    }
    // An empty plan cannot express a violation.
    if (verdicts.empty())
        return {{"ok", true}, {"document", serialize(EvalFeedback::all_satisfied(plan))}};
    return {{"ok", true}, {"document", serialize(EvalFeedback::make(std::move(verdicts), instruction))}};
}

} // namespace

JsonTransport mock_annotator_service()
{
    return [](const json& req) -> json {
        try {
            auto const op = req.at("op").get<std::string>();
            if (op == "plan")
                return mock_plan(req);
            if (op == "eval")
                return mock_eval(req);
            return {{"ok", false}, {"error", "unknown op " + op}};
        } catch (const std::exception& e) {
            return {{"ok", false}, {"error", e.what()}};
        }
    };
}

ImageRef MockDegrader::generate_negative(const Prompt&, const VisualContext&, const ImageRef& final_gt,
                                         std::uint64_t variation_seed)
{
    std::mt19937_64 rng(variation_seed);
    if (final_gt.is_vector()) {
        std::normal_distribution<double> normal(0.0, scale_);
        Vec v = final_gt.vector();
        for (auto& x : v)
            x += normal(rng);
        return ImageRef::from_vector(std::move(v));
    }
    auto const bytes = final_gt.content_bytes();
    std::vector<std::uint8_t> out(bytes.begin(), bytes.end());
    if (out.empty())
        out.push_back(0);
    for (std::size_t i = 0; i < out.size(); i += 7)
        out[i] = static_cast<std::uint8_t>(out[i] ^ static_cast<std::uint8_t>(rng() | 1));
    return ImageRef::from_blob(std::move(out));
}

} // namespace vacot
