// SPDX-License-Identifier: Apache-2.0
#pragma once

// Visual checklist (plan) and evaluation-feedback domain model, with the
// canonical document schema both travel in.

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vacot {

enum class CheckType { Identity, Style, Attribute };

std::string_view to_string(CheckType type) noexcept;
CheckType parse_check_type(std::string_view tag); // throws UnknownCheckType

/// Either an input-image index (1-based, "image_k") or the GENERATED output.
class ImageId {
public:
    static ImageId generated() noexcept { return ImageId {0}; }
    static ImageId input(std::size_t one_based);
    static ImageId parse(std::string_view text); // throws MalformedReference

    bool is_generated() const noexcept { return index_ == 0; }
    /// 1-based context index; meaningless for GENERATED.
    std::size_t index() const noexcept { return index_; }
    std::string str() const;

    bool operator==(const ImageId&) const = default;

private:
    explicit ImageId(std::size_t index) noexcept: index_(index) {}
    std::size_t index_;
};

/// Axis-aligned box in normalised [0,1] image coordinates.
struct Region {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;

    bool valid() const noexcept;
    bool operator==(const Region&) const = default;
};

struct ElementRef {
    ImageId image_id = ImageId::generated();
    std::string description;
    std::optional<Region> region;

    bool operator==(const ElementRef&) const = default;
};

struct CheckItem {
    CheckType check_type = CheckType::Identity;
    ElementRef source;
    ElementRef target;

    /// Builds an item checking `source` against the generated image. Throws
    /// MalformedReference if `source` names GENERATED.
    static CheckItem make(CheckType type, ElementRef source, std::string target_description,
                          std::optional<Region> target_region = std::nullopt);

    bool operator==(const CheckItem&) const = default;
};

enum class PlanOrigin { ModelGenerated, FixedTemplate, GroundTruthAnnotation };

std::string_view to_string(PlanOrigin origin) noexcept;

class Checklist {
public:
    /// Throws EmptyPlan when `items` is empty and the origin is not FixedTemplate.
    Checklist(std::vector<CheckItem> items, PlanOrigin origin);

    const std::vector<CheckItem>& items() const noexcept { return items_; }
    PlanOrigin origin() const noexcept { return origin_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }

    bool operator==(const Checklist&) const = default;

private:
    std::vector<CheckItem> items_;
    PlanOrigin origin_;
};

struct ItemVerdict {
    std::size_t item_index = 0;
    bool satisfied = false;
    std::optional<double> score;
    std::string critique;

    bool operator==(const ItemVerdict&) const = default;
};

/// Self-reflection output. `satisfied()` is always the conjunction of the verdicts,
/// and the edit instruction is empty exactly when satisfied.
class EvalFeedback {
public:
    /// Throws InvalidFeedback if the instruction/satisfaction pairing is violated
    /// or a verdict score lies outside [0,1].
    static EvalFeedback make(std::vector<ItemVerdict> verdicts, std::string edit_instruction);

    /// Every item of `plan` satisfied, empty instruction.
    static EvalFeedback all_satisfied(const Checklist& plan, std::string_view critique = "consistent");

    const std::vector<ItemVerdict>& verdicts() const noexcept { return verdicts_; }
    bool satisfied() const noexcept { return satisfied_; }
    const std::string& edit_instruction() const noexcept { return edit_instruction_; }

    bool operator==(const EvalFeedback&) const = default;

private:
    EvalFeedback() = default;

    std::vector<ItemVerdict> verdicts_;
    bool satisfied_ = true;
    std::string edit_instruction_;
};

enum class ViolationKind { OutOfRangeSource, GeneratedSource, NonGeneratedTarget, InvalidRegion, EmptyPlan };

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    std::size_t item_index;

    bool operator==(const Violation&) const = default;
};

std::string describe(const Violation& v);

std::vector<Violation> validate_against_context(const Checklist& plan, std::size_t context_size);

/// Throws InvalidFeedback if a verdict indexes past the plan.
void check_feedback_against(const EvalFeedback& feedback, const Checklist& plan);

/// Text-only prompts: an empty FixedTemplate plan. Throws EmptyPrompt.
Checklist fixed_template_plan(std::string_view prompt);

Checklist parse_checklist(std::string_view raw);
std::string serialize(const Checklist& plan);

EvalFeedback parse_feedback(std::string_view raw);
std::string serialize(const EvalFeedback& feedback);

// Tree forms, for embedding in larger documents.
nlohmann::json to_json(const Checklist& plan);
nlohmann::json to_json(const EvalFeedback& feedback);
Checklist checklist_from_json(const nlohmann::json& doc);
EvalFeedback feedback_from_json(const nlohmann::json& doc);

} // namespace vacot
