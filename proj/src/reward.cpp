// SPDX-License-Identifier: Apache-2.0
#include "vacot/reward.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace vacot {

using nlohmann::json;

namespace {

void check_unit(const Vec& v, std::string_view which)
{
    double const n = l2_norm(v);
    if (v.empty() || !std::isfinite(n) || std::abs(n - 1.0) > 1e-6)
        throw Error(Errc::EmbedderFailure, fmt::format("{} embedder returned a vector of norm {}", which, n));
}

void check_same_dim(const Vec& a, const Vec& b, std::string_view which)
{
    if (a.size() != b.size())
        throw Error(Errc::EmbedderFailure,
                    fmt::format("{} embeddings differ in dimension ({} vs {})", which, a.size(), b.size()));
}

void check_unit_score(double s, std::string_view which)
{
    if (!(s >= 0.0 && s <= 1.0))
        throw Error(Errc::EmbedderFailure, fmt::format("{} scorer returned {} outside [0,1]", which, s));
}

} // namespace

bool BoundingBox::valid() const noexcept
{
    return 0.0 <= x0 && x0 < x1 && x1 <= 1.0 && 0.0 <= y0 && y0 < y1 && y1 <= 1.0 && confidence >= 0.0
           && confidence <= 1.0;
}

double ScorerSuite::score_extra(const std::string& name, const std::string&, const ImageRef&) const
{
    throw Error(Errc::UnknownExtraScorer, fmt::format("suite has no extra scorer '{}'", name));
}

void RewardWeights::validate() const
{
    auto check = [](std::string_view name, double w) {
        if (!std::isfinite(w) || w < 0.0)
            throw Error(Errc::InvalidConfig, fmt::format("weight {} = {} must be finite and >= 0", name, w));
    };
    check("w_visual", w_visual);
    check("w_text", w_text);
    for (auto const& [k, w] : extras)
        check(k, w);
}

double RewardWeights::sum() const
{
    double s = w_visual + w_text;
    for (auto const& [k, w] : extras)
        s += w;
    return s;
}

json to_json(const RewardWeights& w)
{
    return {{"w_visual", w.w_visual}, {"w_text", w.w_text}, {"extras", w.extras}};
}

RewardWeights weights_from_json(const json& j)
{
    if (!j.is_object())
        throw Error(Errc::MalformedInput, "weights must be an object");
    RewardWeights w;
    w.w_visual = j.value("w_visual", 1.0);
    w.w_text = j.value("w_text", 1.0);
    if (auto it = j.find("extras"); it != j.end())
        w.extras = it->get<std::map<std::string, double>>();
    w.validate();
    return w;
}

double combine(const RewardWeights& weights, double r_visual, double r_text,
               const std::map<std::string, double>& extra_scores)
{
    double total = weights.w_visual * r_visual + weights.w_text * r_text;
    for (auto const& [name, w] : weights.extras)
        total += w * extra_scores.at(name);
    return total;
}

json to_json(const RewardBreakdown& b)
{
    json items = json::array();
    for (auto const& s : b.per_item)
        items.push_back({{"item_index", s.item_index}, {"score", s.score}, {"detail", s.detail}});
    return {{"per_item", std::move(items)}, {"r_visual", b.r_visual},      {"r_text", b.r_text},
            {"extras", b.extra_scores},     {"r_total", b.r_total},        {"weights", to_json(b.weights)}};
}

RewardBreakdown breakdown_from_json(const json& j)
{
    try {
        RewardBreakdown b;
        for (auto const& s : j.at("per_item"))
            b.per_item.push_back(
                {s.at("item_index").get<std::size_t>(), s.at("score").get<double>(), s.at("detail").get<std::string>()});
        b.r_visual = j.at("r_visual").get<double>();
        b.r_text = j.at("r_text").get<double>();
        b.extra_scores = j.at("extras").get<std::map<std::string, double>>();
        b.r_total = j.at("r_total").get<double>();
        b.weights = weights_from_json(j.at("weights"));
        return b;
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, std::string("reward breakdown: ") + e.what());
    }
}

double cosine_to_unit(double cos) noexcept
{
    return std::clamp((cos + 1.0) / 2.0, 0.0, 1.0);
}

ItemScore object_similarity(const ScorerSuite& suite, const ImageRef& reference, const ImageRef& generated,
                            const std::string& description)
{
    auto const ref_box = suite.detect(reference, description);
    auto const gen_box = suite.detect(generated, description);
    if (!ref_box || !gen_box)
        return {0, 0.0, "detection-miss"};

    auto const ref_emb = suite.embed_identity(Crop {reference, *ref_box});
    auto const gen_emb = suite.embed_identity(Crop {generated, *gen_box});
    check_unit(ref_emb, "identity");
    check_unit(gen_emb, "identity");
    check_same_dim(ref_emb, gen_emb, "identity");
    double const c = cosine(ref_emb, gen_emb);
    return {0, cosine_to_unit(c), fmt::format("object-similarity cos={:.6f}", c)};
}

double style_similarity(const ScorerSuite& suite, const ImageRef& reference, const ImageRef& generated)
{
    auto const ref_emb = suite.embed_style(reference);
    auto const gen_emb = suite.embed_style(generated);
    check_unit(ref_emb, "style");
    check_unit(gen_emb, "style");
    check_same_dim(ref_emb, gen_emb, "style");
    return cosine_to_unit(cosine(ref_emb, gen_emb));
}

VisualReward visual_reward(const Checklist& plan, const VisualContext& context, const ImageRef& generated,
                           const ScorerSuite& suite)
{
    VisualReward out;
    if (plan.empty())
        return out;

    double sum = 0.0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        auto const& item = plan.items()[i];
        auto const& reference = context.at(item.source.image_id);
        ItemScore s;
        try {
            switch (item.check_type) {
            case CheckType::Identity:
            case CheckType::Attribute: s = object_similarity(suite, reference, generated, item.source.description); break;
            case CheckType::Style: {
                double const v = style_similarity(suite, reference, generated);
                s = {0, v, "style-similarity"};
                break;
            }
            }
        } catch (const Error& e) {
            if (e.code() == Errc::EmbedderFailure)
                throw Error(Errc::EmbedderFailure, fmt::format("item {}: {}", i, e.what()), i);
            throw;
        }
        s.item_index = i;
        sum += s.score;
        out.per_item.push_back(std::move(s));
    }
    out.r_visual = sum / static_cast<double>(plan.size());
    return out;
}

RewardBreakdown total_reward(const Checklist& plan, const VisualContext& context, const ImageRef& generated,
                             const std::string& prompt, const ScorerSuite& suite, const RewardWeights& weights)
{
    weights.validate();
    for (auto const& [name, w] : weights.extras) {
        if (!suite.has_extra(name))
            throw Error(Errc::UnknownExtraScorer, fmt::format("suite has no extra scorer '{}'", name));
    }

    RewardBreakdown b;
    auto visual = visual_reward(plan, context, generated, suite);
    b.per_item = std::move(visual.per_item);
    b.r_visual = visual.r_visual;
    b.r_text = suite.score_text_image(prompt, generated);
    check_unit_score(b.r_text, "text-image");
    for (auto const& [name, w] : weights.extras) {
        double const s = suite.score_extra(name, prompt, generated);
        check_unit_score(s, name);
        b.extra_scores[name] = s;
    }
    b.weights = weights;
    b.r_total = combine(weights, b.r_visual, b.r_text, b.extra_scores);
    return b;
}

PreferenceReport preference_validation(const std::vector<PreferencePair>& pairs, const ScorerSuite& suite)
{
    if (pairs.empty())
        throw Error(Errc::EmptyInput, "preference validation needs at least one pair");
    PreferenceReport report;
    std::size_t wins = 0;
    for (auto const& p : pairs) {
        VisualContext ctx {p.context};
        PairOutcome o;
        o.r_visual_gt = visual_reward(p.plan, ctx, p.gt_image, suite).r_visual;
        o.r_visual_negative = visual_reward(p.plan, ctx, p.negative_image, suite).r_visual;
        o.gt_preferred = o.r_visual_gt > o.r_visual_negative;
        wins += o.gt_preferred ? 1 : 0;
        report.pairs.push_back(o);
    }
    report.fraction = static_cast<double>(wins) / static_cast<double>(pairs.size());
    return report;
}

RewardEvaluator::RewardEvaluator(const ScorerSuite& suite, RewardWeights weights):
    suite_(suite), weights_(std::move(weights))
{
    weights_.validate();
}

RewardBreakdown RewardEvaluator::operator()(const Checklist& plan, const VisualContext& context,
                                            const ImageRef& generated, const std::string& prompt) const
{
    return total_reward(plan, context, generated, prompt, suite_, weights_);
}

} // namespace vacot
