// SPDX-License-Identifier: Apache-2.0
#pragma once

// Composite visual/text consistency reward. Checklist items are dispatched to
// type-specific scorers: Identity and Attribute go through detect -> crop ->
// embed object similarity, Style through whole-image style embeddings.

#include "vacot/context.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vacot {


struct BoundingBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;
    double confidence = 1.0;

    bool valid() const noexcept;
    static BoundingBox full_frame() noexcept { return {}; }
    bool operator==(const BoundingBox&) const = default;
};

/// Crop bookkeeping: the image plus the box to cut from it.
struct Crop {
    const ImageRef& image;
    BoundingBox box;
};

/// Detector, embedders and text-image scorers behind one interface. Embedders
/// must return unit-norm vectors (within 1e-6).
class ScorerSuite {
public:
    virtual ~ScorerSuite() = default;

    virtual std::optional<BoundingBox> detect(const ImageRef& image, const std::string& description) const = 0;
    virtual Vec embed_identity(const Crop& crop) const = 0;
    virtual Vec embed_style(const ImageRef& image) const = 0;
    virtual double score_text_image(const std::string& text, const ImageRef& image) const = 0;

    virtual bool has_extra(const std::string& /*name*/) const { return false; }
    virtual double score_extra(const std::string& name, const std::string& text, const ImageRef& image) const;

    /// Serial suites get their calls serialized by callers that fan out.
    virtual bool concurrent_safe() const { return true; }
};

struct ItemScore {
    std::size_t item_index = 0;
    double score = 0.0;
    std::string detail;

    bool operator==(const ItemScore&) const = default;
};

struct RewardWeights {
    double w_visual = 1.0;
    double w_text = 1.0;
    std::map<std::string, double> extras;

    void validate() const; // throws InvalidConfig on negative or non-finite weights
    double sum() const;
    bool operator==(const RewardWeights&) const = default;
};

nlohmann::json to_json(const RewardWeights& w);
RewardWeights weights_from_json(const nlohmann::json& j);

struct RewardBreakdown {
    std::vector<ItemScore> per_item;
    double r_visual = 0.0;
    double r_text = 0.0;
    std::map<std::string, double> extra_scores;
    double r_total = 0.0;
    RewardWeights weights;

    bool operator==(const RewardBreakdown&) const = default;
};

/// w_visual*r_visual + w_text*r_text + sum_k w_k*s_k, extras in name order.
/// Every breakdown this module returns has r_total equal to this, bit for bit.
double combine(const RewardWeights& weights, double r_visual, double r_text,
               const std::map<std::string, double>& extra_scores);

nlohmann::json to_json(const RewardBreakdown& b);
RewardBreakdown breakdown_from_json(const nlohmann::json& j);

/// Affine map of a cosine into [0,1].
double cosine_to_unit(double cos) noexcept;

/// Detects `description` in both images, embeds both crops and returns the
/// affinely mapped cosine. A detection miss on either side scores 0 with detail
/// "detection-miss".
ItemScore object_similarity(const ScorerSuite& suite, const ImageRef& reference, const ImageRef& generated,
                            const std::string& description);

double style_similarity(const ScorerSuite& suite, const ImageRef& reference, const ImageRef& generated);

struct VisualReward {
    double r_visual = 0.0;
    std::vector<ItemScore> per_item;
};

VisualReward visual_reward(const Checklist& plan, const VisualContext& context, const ImageRef& generated,
                           const ScorerSuite& suite);

RewardBreakdown total_reward(const Checklist& plan, const VisualContext& context, const ImageRef& generated,
                             const std::string& prompt, const ScorerSuite& suite, const RewardWeights& weights);

struct PreferencePair {
    Checklist plan;
    std::vector<ImageRef> context;
    ImageRef gt_image;
    ImageRef negative_image;
};

struct PairOutcome {
    double r_visual_gt = 0.0;
    double r_visual_negative = 0.0;
    bool gt_preferred = false;
};

struct PreferenceReport {
    double fraction = 0.0;
    std::vector<PairOutcome> pairs;
};

/// Fraction of pairs where the ground truth strictly outscores the negative on r_visual.
PreferenceReport preference_validation(const std::vector<PreferencePair>& pairs, const ScorerSuite& suite);

/// Binds a suite and weights for repeated scoring.
class RewardEvaluator {
public:
    RewardEvaluator(const ScorerSuite& suite, RewardWeights weights);

    RewardBreakdown operator()(const Checklist& plan, const VisualContext& context, const ImageRef& generated,
                               const std::string& prompt) const;

    const ScorerSuite& suite() const noexcept { return suite_; }
    const RewardWeights& weights() const noexcept { return weights_; }

private:
    const ScorerSuite& suite_;
    RewardWeights weights_;
};

} // namespace vacot
