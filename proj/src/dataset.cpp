// SPDX-License-Identifier: Apache-2.0
#include "vacot/dataset.hpp"

#include "vacot/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace vacot {

using nlohmann::json;

std::string_view to_string(CorrectionKind kind) noexcept
{
    return kind == CorrectionKind::Suboptimal ? "suboptimal" : "perfect";
}

std::string_view to_string(SampleKind kind) noexcept
{
    switch (kind) {
    case SampleKind::Planning:
        return "planning";
    case SampleKind::CorrectionSuboptimal:
        return "correction_suboptimal";
    case SampleKind::CorrectionPerfect:
        return "correction_perfect";
    }
    return "planning";
}

SampleKind parse_sample_kind(std::string_view tag)
{
    if (tag == "planning")
        return SampleKind::Planning;
    if (tag == "correction_suboptimal")
        return SampleKind::CorrectionSuboptimal;
    if (tag == "correction_perfect")
        return SampleKind::CorrectionPerfect;
    throw Error(Errc::MalformedInput, fmt::format("unknown sample kind '{}'", tag));
}

namespace {

// Runs body(i) for i in [0, n) on up to `workers` threads. The exception of the
// lowest failing index is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F body)
{
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    std::vector<std::exception_ptr> errors(n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next {0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

bool quarantinable(const Error& e)
{
    return e.code() == Errc::AnnotatorUnavailable || e.code() == Errc::SchemaViolation;
}

json context_json(const VisualContext& ctx)
{
    json arr = json::array();
    for (auto const& img : ctx.images)
        arr.push_back(to_json(img));
    return arr;
}

VisualContext context_from_json(const json& j)
{
    VisualContext ctx;
    for (auto const& img : j)
        ctx.images.push_back(image_from_json(img));
    return ctx;
}

} // namespace

PlanningBuild build_planning(const std::vector<RawTriple>& triples, AnnotatorClient& annotator,
                             const BuildOptions& options)
{
    std::vector<std::optional<PlanningSample>> done(triples.size());
    std::vector<std::optional<QuarantineRecord>> failed(triples.size());
    parallel_for(triples.size(), options.concurrency, [&](std::size_t i) {
        auto const& t = triples[i];
        try {
            auto plan = annotator.annotate_plan(t.prompt, t.context);
            done[i] = PlanningSample {t.prompt, t.context, std::move(plan), t.final_gt};
        } catch (const Error& e) {
            if (!quarantinable(e))
                throw;
            failed[i] = QuarantineRecord {i, "plan", std::string(e.name()), e.what()};
        }
    });

    PlanningBuild out;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (done[i])
            out.samples.push_back(std::move(*done[i]));
        else
            out.quarantine.push_back(std::move(*failed[i]));
    }
    return out;
}

CorrectionBuild build_correction(const std::vector<PlanningSample>& planning, DegradedGenerator& degrader,
                                 AnnotatorClient& annotator, const CorrectionOptions& options)
{
    if (!(options.perfect_fraction >= 0.0 && options.perfect_fraction <= 1.0))
        throw Error(Errc::InvalidConfig, "perfect_fraction must lie in [0, 1]");

    std::vector<std::optional<CorrectionSample>> subopt(planning.size());
    std::vector<std::optional<QuarantineRecord>> failed(planning.size());
    parallel_for(planning.size(), options.concurrency, [&](std::size_t k) {
        auto const& s = planning[k];
        auto const variation = hash64(fmt::format("negative:{}:{}", options.seed, k));
        auto negative = degrader.generate_negative(s.prompt, s.context, s.final_gt, variation);
        try {
            auto eval = annotator.annotate_eval(s.prompt, s.context, s.plan_gt, negative, s.final_gt);
            subopt[k] = CorrectionSample {CorrectionKind::Suboptimal, s.prompt, s.context, s.plan_gt,
                                          std::move(negative), std::move(eval), s.final_gt};
        } catch (const Error& e) {
            if (!quarantinable(e))
                throw;
            failed[k] = QuarantineRecord {k, "eval", std::string(e.name()), e.what()};
        }
    });

    CorrectionBuild out;
    for (std::size_t k = 0; k < planning.size(); ++k) {
        auto const& s = planning[k];
        if (subopt[k])
            out.samples.push_back(std::move(*subopt[k]));
        else
            out.quarantine.push_back(std::move(*failed[k]));

        std::mt19937_64 rng(hash64(fmt::format("perfect:{}:{}", options.seed, k)));
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < options.perfect_fraction) {
            out.samples.push_back(CorrectionSample {CorrectionKind::Perfect, s.prompt, s.context, s.plan_gt,
                                                    s.final_gt, EvalFeedback::all_satisfied(s.plan_gt),
                                                    s.final_gt});
        }
    }
    return out;
}

json to_json(const RawTriple& t)
{
    return {{"kind", "raw"}, {"prompt", t.prompt.text()}, {"context", context_json(t.context)},
            {"final_gt", to_json(t.final_gt)}};
}

json to_json(const PlanningSample& s)
{
    return {{"kind", "planning"},          {"prompt", s.prompt.text()}, {"context", context_json(s.context)},
            {"plan", to_json(s.plan_gt)}, {"final_gt", to_json(s.final_gt)}};
}

json to_json(const CorrectionSample& s)
{
    return {{"kind", s.kind == CorrectionKind::Suboptimal ? "correction_suboptimal" : "correction_perfect"},
            {"prompt", s.prompt.text()},
            {"context", context_json(s.context)},
            {"plan", to_json(s.plan)},
            {"negative", to_json(s.negative)},
            {"eval", to_json(s.eval_gt)},
            {"final_gt", to_json(s.final_gt)}};
}

json to_json(const QuarantineRecord& r)
{
    return {{"index", r.index}, {"stage", r.stage}, {"error", r.error}, {"reason", r.reason}};
}

RawTriple raw_triple_from_json(const json& j)
{
    try {
        return RawTriple {Prompt(j.at("prompt").get<std::string>()), context_from_json(j.at("context")),
                          image_from_json(j.at("final_gt"))};
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, fmt::format("raw triple: {}", e.what()));
    }
}

TrainingSample training_sample_from_json(const json& j)
{
    try {
        auto const kind = j.at("kind").get<std::string>();
        Prompt prompt(j.at("prompt").get<std::string>());
        auto ctx = context_from_json(j.at("context"));
        auto plan = checklist_from_json(j.at("plan"));
        auto gt = image_from_json(j.at("final_gt"));
        if (kind == "planning")
            return PlanningSample {std::move(prompt), std::move(ctx), std::move(plan), std::move(gt)};
        if (kind != "correction_suboptimal" && kind != "correction_perfect")
            throw Error(Errc::MalformedInput, fmt::format("unknown sample kind '{}'", kind));
        auto eval = feedback_from_json(j.at("eval"));
        check_feedback_against(eval, plan);
        return CorrectionSample {kind == "correction_perfect" ? CorrectionKind::Perfect : CorrectionKind::Suboptimal,
                                 std::move(prompt),
                                 std::move(ctx),
                                 std::move(plan),
                                 image_from_json(j.at("negative")),
                                 std::move(eval),
                                 std::move(gt)};
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, fmt::format("corpus record: {}", e.what()));
    }
}

namespace {

template <class F>
auto parse_lines(std::string_view jsonl, F parse_one)
{
    std::vector<decltype(parse_one(json {}))> out;
    std::istringstream in {std::string(jsonl)};
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            out.push_back(parse_one(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(Errc::MalformedInput, fmt::format("line {}: {}", lineno + 1, e.what()), lineno);
        } catch (const Error& e) {
            throw Error(e.code(), fmt::format("line {}: {}", lineno + 1, e.what()), lineno);
        }
    }
    return out;
}

} // namespace

std::vector<RawTriple> parse_raw_triples(std::string_view jsonl)
{
    return parse_lines(jsonl, raw_triple_from_json);
}

std::vector<TrainingSample> parse_corpus(std::string_view jsonl)
{
    return parse_lines(jsonl, training_sample_from_json);
}

json to_json(const SftMetadata& m)
{
    return {{"optimizer", m.optimizer},
            {"learning_rate", m.learning_rate},
            {"warmup_steps", m.warmup_steps},
            {"gpus", m.gpus},
            {"pack_budget", m.pack_budget}};
}

Tokenizer whitespace_tokenizer()
{
    return [](std::string_view text) {
        std::size_t n = 0;
        bool in_word = false;
        for (char c : text) {
            bool const space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
            if (!space && !in_word)
                ++n;
            in_word = !space;
        }
        return n;
    };
}

namespace {

struct SequenceBuilder {
    const Tokenizer& tokenizer;
    std::size_t image_cost;
    TrainingSequence seq;

    void text(std::string s, bool loss)
    {
        std::size_t n = 0;
        try {
            n = tokenizer(s);
        } catch (const std::exception& e) {
            throw Error(Errc::TokenizerFailure, e.what(), seq.segments.size());
        }
        seq.total_tokens += n;
        seq.segments.push_back({Modality::Text, loss, std::move(s), {}, n});
    }

    void image(const ImageRef& img, bool loss)
    {
        seq.total_tokens += image_cost;
        seq.segments.push_back({Modality::Image, loss, {}, img, image_cost});
    }
};

} // namespace

TrainingSequence to_training_sequence(const TrainingSample& sample, const Tokenizer& tokenizer,
                                      std::size_t image_token_cost)
{
    SequenceBuilder b {tokenizer, image_token_cost, {}};
    if (auto const* p = std::get_if<PlanningSample>(&sample)) {
        b.seq.kind = SampleKind::Planning;
        b.text(p->prompt.text(), false);
        for (auto const& img : p->context.images)
            b.image(img, false);
        b.text(to_json(p->plan_gt).dump(), true);
        b.image(p->final_gt, true);
        return std::move(b.seq);
    }
    auto const& c = std::get<CorrectionSample>(sample);
    b.text(c.prompt.text(), false);
    for (auto const& img : c.context.images)
        b.image(img, false);
    b.text(to_json(c.plan).dump(), false);
    if (c.kind == CorrectionKind::Suboptimal) {
        b.seq.kind = SampleKind::CorrectionSuboptimal;
        b.image(c.negative, false);
        b.text(to_json(c.eval_gt).dump(), true);
        b.image(c.final_gt, true);
    } else {
        b.seq.kind = SampleKind::CorrectionPerfect;
        b.image(c.final_gt, false);
        b.text(to_json(c.eval_gt).dump(), true);
    }
    return std::move(b.seq);
}

json to_json(const TrainingSequence& seq)
{
    json segs = json::array();
    for (auto const& s : seq.segments) {
        json j = {{"modality", s.modality == Modality::Text ? "text" : "image"},
                  {"need_loss", s.need_loss},
                  {"token_length", s.token_length}};
        if (s.modality == Modality::Text)
            j["text"] = s.text;
        else
            j["image"] = to_json(s.image);
        segs.push_back(std::move(j));
    }
    return {{"sample_kind", to_string(seq.kind)}, {"total_tokens", seq.total_tokens}, {"segments", std::move(segs)}};
}

TrainingSequence training_sequence_from_json(const json& j)
{
    try {
        TrainingSequence seq;
        seq.kind = parse_sample_kind(j.at("sample_kind").get<std::string>());
        seq.total_tokens = j.at("total_tokens").get<std::size_t>();
        std::size_t sum = 0;
        for (auto const& s : j.at("segments")) {
            TrainingSegment seg;
            auto const modality = s.at("modality").get<std::string>();
            seg.need_loss = s.at("need_loss").get<bool>();
            seg.token_length = s.at("token_length").get<std::size_t>();
            if (modality == "text") {
                seg.modality = Modality::Text;
                seg.text = s.at("text").get<std::string>();
            } else if (modality == "image") {
                seg.modality = Modality::Image;
                seg.image = image_from_json(s.at("image"));
            } else {
                throw Error(Errc::MalformedInput, fmt::format("unknown modality '{}'", modality));
            }
            sum += seg.token_length;
            seq.segments.push_back(std::move(seg));
        }
        if (sum != seq.total_tokens)
            throw Error(Errc::MalformedInput, "total_tokens does not match segment lengths");
        return seq;
    } catch (const json::exception& e) {
        throw Error(Errc::MalformedInput, fmt::format("training sequence: {}", e.what()));
    }
}

} // namespace vacot
