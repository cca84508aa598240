// SPDX-License-Identifier: Apache-2.0
#include "vacot/plan.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <charconv>

namespace vacot {

using nlohmann::json;

namespace {

constexpr std::string_view kGenerated = "GENERATED";
constexpr std::string_view kImagePrefix = "image_";

PlanOrigin parse_origin(std::string_view tag)
{
    if (tag == "model_generated")
        return PlanOrigin::ModelGenerated;
    if (tag == "fixed_template")
        return PlanOrigin::FixedTemplate;
    if (tag == "ground_truth_annotation")
        return PlanOrigin::GroundTruthAnnotation;
    throw Error(Errc::MalformedDocument, fmt::format("unknown plan origin '{}'", tag));
}

const json& require(const json& obj, const char* key, const std::string& where, std::optional<std::size_t> index)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        throw Error(Errc::MissingField, fmt::format("{}: missing field '{}'", where, key), index);
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where,
                           std::optional<std::size_t> index)
{
    auto const& v = require(obj, key, where, index);
    if (!v.is_string())
        throw Error(Errc::MissingField, fmt::format("{}: field '{}' must be a string", where, key), index);
    return v.get<std::string>();
}

json region_to_json(const Region& r)
{
    return {{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}};
}

Region region_from_json(const json& j, const std::string& where, std::size_t index)
{
    if (!j.is_object())
        throw Error(Errc::MalformedRegion, where + ": region must be an object", index);
    Region r;
    for (auto [key, slot] : {std::pair {"x0", &r.x0}, {"y0", &r.y0}, {"x1", &r.x1}, {"y1", &r.y1}}) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_number())
            throw Error(Errc::MalformedRegion, fmt::format("{}: region.{} missing or non-numeric", where, key), index);
        *slot = it->get<double>();
    }
    if (!r.valid())
        throw Error(Errc::MalformedRegion,
                    fmt::format("{}: region [{}, {}, {}, {}] is not a box inside [0,1]^2", where, r.x0, r.y0, r.x1,
                                r.y1),
                    index);
    return r;
}

json element_to_json(const ElementRef& e)
{
    json j = {{"image_id", e.image_id.str()}, {"description", e.description}};
    if (e.region)
        j["region"] = region_to_json(*e.region);
    return j;
}

ElementRef element_from_json(const json& j, const std::string& where, std::size_t index)
{
    if (!j.is_object())
        throw Error(Errc::MissingField, where + " must be an object", index);
    ElementRef e;
    auto const id = require_string(j, "image_id", where, index);
    try {
        e.image_id = ImageId::parse(id);
    } catch (const Error& err) {
        throw Error(Errc::MalformedReference, where + ": " + err.what(), index);
    }
    e.description = require_string(j, "description", where, index);
    if (auto it = j.find("region"); it != j.end() && !it->is_null())
        e.region = region_from_json(*it, where, index);
    return e;
}

json parse_document(std::string_view raw)
{
    try {
        return json::parse(raw);
    } catch (const json::parse_error& e) {
        throw Error(Errc::MalformedDocument, std::string("not a structured document: ") + e.what());
    }
}

} // namespace

std::string_view to_string(CheckType type) noexcept
{
    switch (type) {
    case CheckType::Identity: return "identity";
    case CheckType::Style: return "style";
    case CheckType::Attribute: return "attribute";
    }
    return "?";
}

CheckType parse_check_type(std::string_view tag)
{
    if (tag == "identity")
        return CheckType::Identity;
    if (tag == "style")
        return CheckType::Style;
    if (tag == "attribute")
        return CheckType::Attribute;
    throw Error(Errc::UnknownCheckType, fmt::format("unknown check_type '{}'", tag));
}

ImageId ImageId::input(std::size_t one_based)
{
    if (one_based == 0)
        throw Error(Errc::MalformedReference, "image indices are 1-based");
    return ImageId {one_based};
}

ImageId ImageId::parse(std::string_view text)
{
    if (text == kGenerated)
        return generated();
    if (text.starts_with(kImagePrefix)) {
        auto digits = text.substr(kImagePrefix.size());
        std::size_t k = 0;
        auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec == std::errc {} && end == digits.data() + digits.size() && !digits.empty() && digits[0] != '0')
            return input(k);
    }
    throw Error(Errc::MalformedReference, fmt::format("'{}' is neither image_<k> nor GENERATED", text));
}

std::string ImageId::str() const
{
    if (is_generated())
        return std::string(kGenerated);
    return fmt::format("{}{}", kImagePrefix, index_);
}

bool Region::valid() const noexcept
{
    return 0.0 <= x0 && x0 < x1 && x1 <= 1.0 && 0.0 <= y0 && y0 < y1 && y1 <= 1.0;
}

CheckItem CheckItem::make(CheckType type, ElementRef source, std::string target_description,
                          std::optional<Region> target_region)
{
    if (source.image_id.is_generated())
        throw Error(Errc::MalformedReference, "check source must be a context image");
    ElementRef target {ImageId::generated(), std::move(target_description), target_region};
    return CheckItem {type, std::move(source), std::move(target)};
}

std::string_view to_string(PlanOrigin origin) noexcept
{
    switch (origin) {
    case PlanOrigin::ModelGenerated: return "model_generated";
    case PlanOrigin::FixedTemplate: return "fixed_template";
    case PlanOrigin::GroundTruthAnnotation: return "ground_truth_annotation";
    }
    return "?";
}

Checklist::Checklist(std::vector<CheckItem> items, PlanOrigin origin): items_(std::move(items)), origin_(origin)
{
    if (items_.empty() && origin_ != PlanOrigin::FixedTemplate)
        throw Error(Errc::EmptyPlan, fmt::format("a {} checklist needs at least one item", to_string(origin_)));
}

EvalFeedback EvalFeedback::make(std::vector<ItemVerdict> verdicts, std::string edit_instruction)
{
    EvalFeedback f;
    f.satisfied_ = true;
    for (auto const& v : verdicts) {
        f.satisfied_ = f.satisfied_ && v.satisfied;
        if (v.score && !(*v.score >= 0.0 && *v.score <= 1.0))
            throw Error(Errc::InvalidFeedback, fmt::format("verdict score {} outside [0,1]", *v.score), v.item_index);
    }
    if (f.satisfied_ && !edit_instruction.empty())
        throw Error(Errc::InvalidFeedback, "satisfied feedback must carry an empty edit instruction");
    if (!f.satisfied_ && edit_instruction.empty())
        throw Error(Errc::InvalidFeedback, "unsatisfied feedback must carry an edit instruction");
    f.verdicts_ = std::move(verdicts);
    f.edit_instruction_ = std::move(edit_instruction);
    return f;
}

EvalFeedback EvalFeedback::all_satisfied(const Checklist& plan, std::string_view critique)
{
    std::vector<ItemVerdict> verdicts;
    verdicts.reserve(plan.size());
    for (std::size_t i = 0; i < plan.size(); ++i)
        verdicts.push_back(ItemVerdict {i, true, 1.0, std::string(critique)});
    return make(std::move(verdicts), "");
}

std::string_view to_string(ViolationKind kind) noexcept
{
    switch (kind) {
    case ViolationKind::OutOfRangeSource: return "OutOfRangeSource";
    case ViolationKind::GeneratedSource: return "GeneratedSource";
    case ViolationKind::NonGeneratedTarget: return "NonGeneratedTarget";
    case ViolationKind::InvalidRegion: return "InvalidRegion";
    case ViolationKind::EmptyPlan: return "EmptyPlan";
    }
    return "?";
}

std::string describe(const Violation& v)
{
    return fmt::format("{}(item {})", to_string(v.kind), v.item_index);
}

std::vector<Violation> validate_against_context(const Checklist& plan, std::size_t context_size)
{
    std::vector<Violation> out;
    if (plan.empty() && plan.origin() != PlanOrigin::FixedTemplate)
        out.push_back({ViolationKind::EmptyPlan, 0});
    for (std::size_t i = 0; i < plan.size(); ++i) {
        auto const& item = plan.items()[i];
        if (item.source.image_id.is_generated())
            out.push_back({ViolationKind::GeneratedSource, i});
        else if (item.source.image_id.index() > context_size)
            out.push_back({ViolationKind::OutOfRangeSource, i});
        if (!item.target.image_id.is_generated())
            out.push_back({ViolationKind::NonGeneratedTarget, i});
        if ((item.source.region && !item.source.region->valid())
            || (item.target.region && !item.target.region->valid()))
            out.push_back({ViolationKind::InvalidRegion, i});
    }
    return out;
}

void check_feedback_against(const EvalFeedback& feedback, const Checklist& plan)
{
    for (auto const& v : feedback.verdicts()) {
        if (v.item_index >= plan.size())
            throw Error(Errc::InvalidFeedback,
                        fmt::format("verdict for item {} but plan has {} items", v.item_index, plan.size()),
                        v.item_index);
    }
}

Checklist fixed_template_plan(std::string_view prompt)
{
    if (prompt.empty())
        throw Error(Errc::EmptyPrompt, "fixed-template planning needs a non-empty prompt");
    return Checklist({}, PlanOrigin::FixedTemplate);
}

json to_json(const Checklist& plan)
{
    json items = json::array();
    for (auto const& item : plan.items()) {
        items.push_back({{"check_type", to_string(item.check_type)},
                         {"source", element_to_json(item.source)},
                         {"target", element_to_json(item.target)}});
    }
    return {{"items", std::move(items)}, {"origin", to_string(plan.origin())}};
}

Checklist checklist_from_json(const json& doc)
{
    if (!doc.is_object())
        throw Error(Errc::MalformedDocument, "checklist document must be an object");
    auto const& items_j = require(doc, "items", "checklist", std::nullopt);
    if (!items_j.is_array())
        throw Error(Errc::MalformedDocument, "checklist 'items' must be an array");
    auto const origin = parse_origin(require_string(doc, "origin", "checklist", std::nullopt));

    std::vector<CheckItem> items;
    items.reserve(items_j.size());
    for (std::size_t i = 0; i < items_j.size(); ++i) {
        auto const& ij = items_j[i];
        auto const where = fmt::format("items[{}]", i);
        if (!ij.is_object())
            throw Error(Errc::MalformedDocument, where + " must be an object", i);
        CheckItem item;
        auto const tag = require_string(ij, "check_type", where, i);
        try {
            item.check_type = parse_check_type(tag);
        } catch (const Error& e) {
            throw Error(Errc::UnknownCheckType, where + ": " + e.what(), i);
        }
        item.source = element_from_json(require(ij, "source", where, i), where + ".source", i);
        item.target = element_from_json(require(ij, "target", where, i), where + ".target", i);
        items.push_back(std::move(item));
    }
    return Checklist(std::move(items), origin);
}

Checklist parse_checklist(std::string_view raw)
{
    return checklist_from_json(parse_document(raw));
}

std::string serialize(const Checklist& plan)
{
    return to_json(plan).dump(2) + "\n";
}

json to_json(const EvalFeedback& feedback)
{
    json verdicts = json::array();
    for (auto const& v : feedback.verdicts()) {
        json vj = {{"item_index", v.item_index}, {"satisfied", v.satisfied}, {"critique", v.critique}};
        if (v.score)
            vj["score"] = *v.score;
        verdicts.push_back(std::move(vj));
    }
    return {{"verdicts", std::move(verdicts)},
            {"satisfied", feedback.satisfied()},
            {"edit_instruction", feedback.edit_instruction()}};
}

EvalFeedback feedback_from_json(const json& doc)
{
    if (!doc.is_object())
        throw Error(Errc::MalformedDocument, "feedback document must be an object");
    auto const& vs = require(doc, "verdicts", "feedback", std::nullopt);
    if (!vs.is_array())
        throw Error(Errc::MalformedDocument, "feedback 'verdicts' must be an array");
    auto const& sat = require(doc, "satisfied", "feedback", std::nullopt);
    if (!sat.is_boolean())
        throw Error(Errc::MalformedDocument, "feedback 'satisfied' must be a boolean");
    auto instruction = require_string(doc, "edit_instruction", "feedback", std::nullopt);

    std::vector<ItemVerdict> verdicts;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        auto const& vj = vs[i];
        auto const where = fmt::format("verdicts[{}]", i);
        if (!vj.is_object())
            throw Error(Errc::MalformedDocument, where + " must be an object", i);
        ItemVerdict v;
        auto const& idx = require(vj, "item_index", where, i);
        if (!idx.is_number_unsigned())
            throw Error(Errc::MalformedDocument, where + ": item_index must be a non-negative integer", i);
        v.item_index = idx.get<std::size_t>();
        auto const& s = require(vj, "satisfied", where, i);
        if (!s.is_boolean())
            throw Error(Errc::MalformedDocument, where + ": satisfied must be a boolean", i);
        v.satisfied = s.get<bool>();
        if (auto it = vj.find("score"); it != vj.end() && !it->is_null()) {
            if (!it->is_number())
                throw Error(Errc::MalformedDocument, where + ": score must be a number", i);
            v.score = it->get<double>();
        }
        v.critique = require_string(vj, "critique", where, i);
        verdicts.push_back(std::move(v));
    }
    auto feedback = EvalFeedback::make(std::move(verdicts), std::move(instruction));
    if (feedback.satisfied() != sat.get<bool>())
        throw Error(Errc::InvalidFeedback, "'satisfied' disagrees with the conjunction of the verdicts");
    return feedback;
}

EvalFeedback parse_feedback(std::string_view raw)
{
    return feedback_from_json(parse_document(raw));
}

std::string serialize(const EvalFeedback& feedback)
{
    return to_json(feedback).dump(2) + "\n";
}

} // namespace vacot
