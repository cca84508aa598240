// SPDX-License-Identifier: Apache-2.0
#include "vacot/sim_backend.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <random>

namespace vacot {

using nlohmann::json;

void SimSpec::validate() const
{
    if (dimension == 0)
        throw Error(Errc::InvalidSpec, "dimension must be positive");
    if (!(refinement_rate > 0.0 && refinement_rate <= 1.0))
        throw Error(Errc::InvalidSpec, fmt::format("refinement_rate {} outside (0, 1]", refinement_rate));
    if (!(satisfaction_threshold > 0.0 && satisfaction_threshold < 1.0))
        throw Error(Errc::InvalidSpec, fmt::format("satisfaction_threshold {} outside (0, 1)", satisfaction_threshold));
    if (!(noise_scale >= 0.0))
        throw Error(Errc::InvalidSpec, fmt::format("noise_scale {} must be >= 0", noise_scale));
}

json to_json(const SimSpec& spec)
{
    return {{"dimension", spec.dimension},
            {"refinement_rate", spec.refinement_rate},
            {"satisfaction_threshold", spec.satisfaction_threshold},
            {"noise_scale", spec.noise_scale},
            {"seed", spec.seed}};
}

SimSpec sim_spec_from_json(const json& j)
{
    SimSpec s;
    s.dimension = j.value("dimension", s.dimension);
    s.refinement_rate = j.value("refinement_rate", s.refinement_rate);
    s.satisfaction_threshold = j.value("satisfaction_threshold", s.satisfaction_threshold);
    s.noise_scale = j.value("noise_scale", s.noise_scale);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
}

SimulatedBackend::SimulatedBackend(SimSpec spec): spec_(spec)
{
    spec_.validate();
}

const Vec& SimulatedBackend::context_vector(const VisualContext& context, std::size_t one_based) const
{
    auto const& v = context.at(ImageId::input(one_based)).vector();
    if (v.size() != spec_.dimension)
        throw Error(Errc::InvalidImage,
                    fmt::format("image_{} has dimension {}, expected {}", one_based, v.size(), spec_.dimension));
    return v;
}

PlanAndImage SimulatedBackend::plan_and_generate(const Prompt& prompt, const VisualContext& context)
{
    ++plan_calls_;
    std::mt19937_64 rng(spec_.seed);
    std::normal_distribution<double> normal;

    Vec y(spec_.dimension, 0.0);
    std::vector<CheckItem> items;
    for (std::size_t k = 1; k <= context.size(); ++k) {
        auto const& v = context_vector(context, k);
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] += v[i] / static_cast<double>(context.size());
        auto description = fmt::format("subject of image_{}", k);
        items.push_back(CheckItem::make(CheckType::Identity, ElementRef {ImageId::input(k), description, {}},
                                        description));
    }
    for (auto& x : y)
        x += spec_.noise_scale * normal(rng);

    Checklist plan = items.empty() ? fixed_template_plan(prompt.text())
                                   : Checklist(std::move(items), PlanOrigin::ModelGenerated);
    return {std::move(plan), ImageRef::from_vector(std::move(y))};
}

FeedbackAndImage SimulatedBackend::evaluate_and_refine(const Prompt&, const VisualContext& context,
                                                       const Checklist& plan, const ImageRef& current)
{
    ++refine_calls_;
    auto const& y = current.vector();
    if (y.size() != spec_.dimension)
        throw Error(Errc::InvalidImage, fmt::format("current image has dimension {}, expected {}", y.size(),
                                                    spec_.dimension));

    std::vector<ItemVerdict> verdicts;
    std::optional<std::size_t> worst;
    double worst_cos = 2.0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        auto const& item = plan.items()[i];
        auto const& v = context_vector(context, item.source.image_id.index());
        double const c = cosine(y, v);
        bool const ok = c >= spec_.satisfaction_threshold;
        verdicts.push_back(ItemVerdict {
            i, ok, cosine_to_unit(c),
            ok ? fmt::format("cosine {:.4f} meets {:.4f}", c, spec_.satisfaction_threshold)
               : fmt::format("cosine {:.4f} below {:.4f}", c, spec_.satisfaction_threshold)});
        if (!ok && c < worst_cos) {
            worst_cos = c;
            worst = i;
        }
    }

    if (!worst)
        return {EvalFeedback::make(std::move(verdicts), ""), current};

    auto const& src = plan.items()[*worst].source;
    auto const& target = context_vector(context, src.image_id.index());
    Vec next = y;
    for (std::size_t i = 0; i < next.size(); ++i)
        next[i] += spec_.refinement_rate * (target[i] - next[i]);

    auto instruction = fmt::format("move toward {} ({})", src.image_id.str(), src.description);
    return {EvalFeedback::make(std::move(verdicts), std::move(instruction)), ImageRef::from_vector(std::move(next))};
}

std::unique_ptr<GenerationBackend> simulated_backend(const SimSpec& spec)
{
    return std::make_unique<SimulatedBackend>(spec);
}

} // namespace vacot
