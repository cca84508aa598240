// SPDX-License-Identifier: Apache-2.0
#pragma once

// Hand-rolled generators and test doubles shared by the unit and acceptance
// suites.

#include "vacot/dataset.hpp"
#include "vacot/engine.hpp"
#include "vacot/error.hpp"
#include "vacot/grpo.hpp"
#include "vacot/reward.hpp"
#include "vacot/toy_env.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace vacot::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed): rng_(seed) {}

    std::mt19937_64& rng() { return rng_; }

    std::size_t index(std::size_t lo, std::size_t hi) // inclusive
    {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng_); }
    bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }

    // Words drawn from a pool that includes quoting, escapes, and non-ASCII text.
    std::string word()
    {
        static const char* const pool[] = {"cat", "woman", "red", "hat", "\"quoted\"", "back\\slash", "tab\there",
                                           "line\nbreak", "caf\xc3\xa9", "\xe6\x97\xa5\xe6\x9c\xac", "{brace}", "a:b",
                                           "GENERATED", "image_9", ""};
        return pool[index(0, std::size(pool) - 1)];
    }
    std::string phrase(std::size_t max_words = 4)
    {
        std::string s;
        for (std::size_t i = 0, n = index(0, max_words); i < n; ++i)
            s += (i ? " " : "") + word();
        return s;
    }
    std::string nonempty_phrase() { return "x" + phrase(); }

    Vec vec(std::size_t dim, double sd = 1.0)
    {
        Vec v(dim);
        for (auto& x : v)
            x = normal(sd);
        return v;
    }

    Region region()
    {
        double x0 = real(0, 0.9), y0 = real(0, 0.9);
        return {x0, y0, real(x0 + 1e-3, 1.0), real(y0 + 1e-3, 1.0)};
    }

    Checklist checklist(std::size_t images)
    {
        std::size_t const n = index(1, 6);
        std::vector<CheckItem> items;
        for (std::size_t i = 0; i < n; ++i) {
            auto const type = static_cast<CheckType>(index(0, 2));
            std::optional<Region> src_region, tgt_region;
            if (coin(0.3))
                src_region = region();
            if (coin(0.3))
                tgt_region = region();
            items.push_back(CheckItem::make(type, ElementRef {ImageId::input(index(1, images)), phrase(), src_region},
                                            phrase(), tgt_region));
        }
        auto const origin = static_cast<PlanOrigin>(index(0, 2));
        return Checklist(std::move(items), origin);
    }

    EvalFeedback feedback(const Checklist& plan)
    {
        std::vector<ItemVerdict> verdicts;
        bool all = true;
        for (std::size_t i = 0; i < plan.size(); ++i) {
            if (coin(0.2))
                continue;
            ItemVerdict v;
            v.item_index = i;
            v.satisfied = coin(0.6);
            if (coin(0.7))
                v.score = real(0.0, 1.0);
            v.critique = phrase();
            all = all && v.satisfied;
            verdicts.push_back(std::move(v));
        }
        return EvalFeedback::make(std::move(verdicts), all ? "" : nonempty_phrase());
    }

    // kind: 0 vector, 1 blob, anything else either.
    ImageRef image(std::size_t dim = 3, int kind = -1)
    {
        if (kind == 0 || (kind != 1 && coin(0.5)))
            return ImageRef::from_vector(vec(dim));
        std::vector<std::uint8_t> bytes(index(1, 24));
        for (auto& b : bytes)
            b = static_cast<std::uint8_t>(index(0, 255));
        return ImageRef::from_blob(std::move(bytes));
    }

    VisualContext context(std::size_t n, int kind = -1)
    {
        VisualContext ctx;
        for (std::size_t i = 0; i < n; ++i)
            ctx.images.push_back(image(3, kind));
        return ctx;
    }

    TrainingSample sample()
    {
        auto const n = index(0, 4);
        auto ctx = context(n);
        auto plan = n == 0 ? fixed_template_plan("prompt") : checklist(n);
        Prompt prompt(nonempty_phrase());
        auto gt = image();
        switch (index(0, 2)) {
        case 0:
            return PlanningSample {prompt, ctx, plan, gt};
        case 1:
            return CorrectionSample {CorrectionKind::Suboptimal, prompt, ctx, plan, image(), feedback(plan), gt};
        default:
            return CorrectionSample {CorrectionKind::Perfect, prompt, ctx, plan, gt, EvalFeedback::all_satisfied(plan),
                                     gt};
        }
    }

private:
    std::mt19937_64 rng_;
};

/// Backend that follows a fixed script: the k-th evaluate call reports
/// satisfied iff script[k-1]; an exhausted script keeps reporting unsatisfied.
class ScriptedBackend final : public GenerationBackend {
public:
    explicit ScriptedBackend(std::vector<bool> script, std::size_t items = 1): script_(std::move(script))
    {
        std::vector<CheckItem> list;
        for (std::size_t i = 0; i < items; ++i)
            list.push_back(CheckItem::make(CheckType::Identity, ElementRef {ImageId::input(1), "subject", {}},
                                           "subject"));
        plan_ = Checklist(std::move(list), PlanOrigin::ModelGenerated);
    }

    PlanAndImage plan_and_generate(const Prompt&, const VisualContext&) override
    {
        ++plan_calls;
        return {plan_, ImageRef::from_vector({0.0, 1.0})};
    }

    FeedbackAndImage evaluate_and_refine(const Prompt&, const VisualContext&, const Checklist&,
                                         const ImageRef& current) override
    {
        ++refine_calls;
        bool const ok = refine_calls <= script_.size() && script_[refine_calls - 1];
        if (ok)
            return {EvalFeedback::all_satisfied(plan_), current};
        std::vector<ItemVerdict> verdicts {{0, false, 0.2, "off"}};
        return {EvalFeedback::make(std::move(verdicts), "fix it"),
                ImageRef::from_vector({static_cast<double>(refine_calls), 1.0})};
    }

    std::size_t plan_calls = 0;
    std::size_t refine_calls = 0;

private:
    std::vector<bool> script_;
    Checklist plan_ {{}, PlanOrigin::FixedTemplate};
};

/// Random groups that share one condition, rolled out under `policy`.
inline std::vector<TrajectoryGroup> random_groups(const ToyFlowEnv& env, const GaussianStepPolicy& policy,
                                                  std::size_t groups, std::size_t group_size, Gen& gen)
{
    std::vector<TrajectoryGroup> out;
    for (std::size_t g = 0; g < groups; ++g) {
        TrajectoryGroup group;
        group.condition = env.sample_condition(gen.rng());
        for (std::size_t i = 0; i < group_size; ++i) {
            group.trajectories.push_back(env.rollout(policy, group.condition, gen.rng()));
            group.rewards.push_back(gen.real(0.0, 1.0));
        }
        out.push_back(std::move(group));
    }
    return out;
}

inline Vec random_params(const GaussianStepPolicy& policy, Gen& gen, double sd)
{
    return gen.vec(policy.params().size(), sd);
}

struct GradCheck {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    double clip_fraction = 0.0;
};

/// Analytic gradient of the GRPO objective against central differences, on the
/// toy policy with random sampling, current and reference parameters. The
/// relative error of each coordinate is |a - n| / max(|a|, |n|, floor).
inline GradCheck grpo_gradient_check(std::uint64_t seed, double kl_beta, double floor, double step = 1e-5)
{
    ToyFlowEnv const env; // d = 2, T = 4
    GrpoConfig config;    // G = 4
    config.kl_beta = kl_beta;
    Gen gen(seed);
    auto const base = env.initial_policy();
    auto const n = base.params().size();
    auto const old_policy = base.with_params(gen.vec(n, 0.3));
    auto const ref_policy = base.with_params(gen.vec(n, 0.3));
    Vec theta = old_policy.params();
    for (auto& x : theta)
        x += gen.normal(0.02);
    auto const policy = base.with_params(theta);
    auto const groups = random_groups(env, old_policy, 2, config.group_size, gen);

    auto const eval = grpo_objective_with_gradient(groups, policy, old_policy, ref_policy, config);
    GradCheck out;
    out.clip_fraction = eval.clip_fraction;
    for (std::size_t k = 0; k < n; ++k) {
        Vec plus = theta, minus = theta;
        plus[k] += step;
        minus[k] -= step;
        double const fd = (grpo_objective(groups, base.with_params(plus), old_policy, ref_policy, config) -
                           grpo_objective(groups, base.with_params(minus), old_policy, ref_policy, config)) /
                          (2.0 * step);
        double const a = eval.gradient[k];
        double const err = std::abs(a - fd);
        out.max_abs_error = std::max(out.max_abs_error, err);
        out.max_rel_error = std::max(out.max_rel_error, err / std::max({std::abs(a), std::abs(fd), floor}));
    }
    return out;
}

/// Fresh directory under the system temp dir; removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("vacot-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::filesystem::path fixture(const std::string& name)
{
    return std::filesystem::path(VACOT_FIXTURES) / name;
}

inline std::vector<PreferencePair> load_preference_pairs(const nlohmann::json& doc)
{
    std::vector<PreferencePair> pairs;
    for (auto const& p : doc) {
        PreferencePair pair {checklist_from_json(p.at("plan")), {}, image_from_json(p.at("gt_image")),
                             image_from_json(p.at("negative_image"))};
        for (auto const& c : p.at("context"))
            pair.context.push_back(image_from_json(c));
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

/// Re-scores the preference fixture straight from its raw vectors: per item
/// (cos + 1) / 2 against the referenced context vector, 0 for "ABSENT"
/// object descriptions, mean over items, strict comparison.
inline double brute_force_preference(const nlohmann::json& doc)
{
    auto const score = [](const nlohmann::json& pair, const nlohmann::json& image) {
        auto const g = image.at("vector").get<std::vector<double>>();
        double total = 0.0;
        auto const& items = pair.at("plan").at("items");
        for (auto const& item : items) {
            auto const desc = item.at("source").at("description").get<std::string>();
            auto const type = item.at("check_type").get<std::string>();
            if (type != "style" && desc.find("ABSENT") != std::string::npos)
                continue;
            auto const id = item.at("source").at("image_id").get<std::string>();
            auto const k = std::stoul(id.substr(6));
            auto const r = pair.at("context").at(k - 1).at("vector").get<std::vector<double>>();
            double d = 0, nr = 0, ng = 0;
            for (std::size_t i = 0; i < r.size(); ++i) {
                d += r[i] * g[i];
                nr += r[i] * r[i];
                ng += g[i] * g[i];
            }
            total += (d / std::sqrt(nr * ng) + 1.0) / 2.0;
        }
        return total / static_cast<double>(items.size());
    };
    std::size_t wins = 0;
    for (auto const& pair : doc)
        wins += score(pair, pair.at("gt_image")) > score(pair, pair.at("negative_image"));
    return static_cast<double>(wins) / static_cast<double>(doc.size());
}

template <class F>
Errc error_code_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    throw std::logic_error("expected a vacot::Error");
}

} // namespace vacot::testing
