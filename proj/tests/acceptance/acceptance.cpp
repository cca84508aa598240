// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, each under its time limit.
// Exit status is non-zero when any criterion fails.

#include "support.hpp"

#include "vacot/annotator.hpp"
#include "vacot/flow_matching.hpp"
#include "vacot/mock_suite.hpp"
#include "vacot/packing.hpp"
#include "vacot/sim_backend.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>

using namespace vacot;
using nlohmann::json;
using vacot::testing::Gen;

namespace {

class Failures {
public:
    void check(bool ok, std::string what)
    {
        if (!ok && list_.size() < 5)
            list_.push_back(std::move(what));
        failed_ = failed_ || !ok;
    }
    void note(std::string what) { notes_.push_back(std::move(what)); }

    bool failed() const { return failed_; }
    std::string summary() const
    {
        std::string out;
        for (auto const& s : notes_)
            out += (out.empty() ? "" : "; ") + s;
        for (auto const& s : list_)
            out += (out.empty() ? "" : "; ") + std::string("FAILED ") + s;
        return out;
    }

private:
    bool failed_ = false;
    std::vector<std::string> list_;
    std::vector<std::string> notes_;
};

struct Criterion {
    int id;
    const char* title;
    double limit_seconds;
    std::function<void(Failures&)> body;
};

double mean_of(const Vec& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_std(const Vec& v)
{
    double const m = mean_of(v);
    double s = 0.0;
    for (double x : v)
        s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

void advantage_law(Failures& f)
{
    Gen gen(101);
    double worst_mean = 0.0, worst_std = 0.0, worst_affine = 0.0;
    for (int g = 0; g < 1000; ++g) {
        Vec r(gen.index(2, 16));
        double const scale = gen.real(0.01, 100.0);
        for (auto& x : r)
            x = gen.normal(scale) + gen.real(-10, 10);
        if (pop_std(r) <= 1e-8)
            continue;
        auto const a = group_advantages(r);
        worst_mean = std::max(worst_mean, std::abs(mean_of(a)));
        worst_std = std::max(worst_std, std::abs(pop_std(a) - 1.0));

        double const mul = gen.real(0.01, 100.0), add = gen.real(-100, 100);
        Vec s = r;
        for (auto& x : s)
            x = mul * x + add;
        auto const b = group_advantages(s);
        for (std::size_t i = 0; i < a.size(); ++i)
            worst_affine = std::max(worst_affine, std::abs(a[i] - b[i]));
    }
    f.check(worst_mean < 1e-9, fmt::format("mean {:.3g}", worst_mean));
    f.check(worst_std < 1e-9, fmt::format("std {:.3g}", worst_std));
    f.check(worst_affine < 1e-9, fmt::format("affine {:.3g}", worst_affine));
    f.note(fmt::format("max |mean| {:.2g}, max |std-1| {:.2g}, max affine {:.2g}", worst_mean, worst_std,
                       worst_affine));
}

void objective_identity(Failures& f)
{
    ToyFlowEnv const env;
    Gen gen(202);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        GrpoConfig config;
        config.group_size = gen.index(2, 8);
        auto const p = env.initial_policy().with_params(vacot::testing::random_params(env.initial_policy(), gen, 0.5));
        auto const groups = vacot::testing::random_groups(env, p, gen.index(1, 4), config.group_size, gen);
        worst = std::max(worst, std::abs(grpo_objective(groups, p, p, p, config)));
    }
    f.check(worst < 1e-9, fmt::format("identity {:.3g}", worst));

    // One step, sigma 1, mean shift b = 1: log ratio of 0 -> y is y - 1/2.
    PolicyShape const shape {1, 0, 0};
    GaussianStepPolicy const old_policy(shape, NoiseSchedule::constant(1, 1.0), Vec {0.0, 0.0});
    GaussianStepPolicy const new_policy(shape, NoiseSchedule::constant(1, 1.0), Vec {0.0, 1.0});
    auto const traj = [](double ratio) { return Trajectory {{{0.0}, {std::log(ratio) + 0.5}}}; };
    TrajectoryGroup const group {{traj(1.5), traj(0.5)}, {1.0, 0.0}, {}};
    GrpoConfig config;
    config.group_size = 2;
    config.num_steps = 1;
    double const two = grpo_objective(std::span(&group, 1), new_policy, old_policy, old_policy, config);
    f.check(std::abs(two - 0.2) < 1e-12, fmt::format("two-trajectory {:.17g}", two));
    f.note(fmt::format("max |J| {:.2g}, two-trajectory {:.15g}", worst, two));
}

void gradient_check(Failures& f)
{
    double worst = 0.0;
    for (double beta : {0.0, 0.1}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto const r = vacot::testing::grpo_gradient_check(seed, beta, 1e-7);
            worst = std::max(worst, r.max_rel_error);
            f.check(r.max_rel_error < 1e-4, fmt::format("seed {} beta {} rel {:.3g}", seed, beta, r.max_rel_error));
        }
    }
    f.note(fmt::format("max relative error {:.2g}", worst));
}

double l2_distance(const Vec& a, const Vec& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

void toy_convergence(Failures& f)
{
    ToyFlowEnv const env;
    ToyTrainOptions options;
    options.seed = 0;
    auto const reward = default_reward(env);

    auto policy = env.initial_policy();
    auto const run = train_toy(env, policy, GrpoConfig {}, OptimizerSettings {}, options, reward);
    f.check(run.rows.size() == 200, "200 rows");
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < 10; ++i) {
        first += run.rows[i].mean_reward / 10.0;
        last += run.rows[run.rows.size() - 1 - i].mean_reward / 10.0;
    }
    double const probe_ratio = run.final_eval_reward / run.initial_eval_reward;
    double const batch_ratio = last / first;
    f.check(probe_ratio >= 1.5, fmt::format("probe ratio {:.3f}", probe_ratio));
    f.check(batch_ratio >= 1.5, fmt::format("batch ratio {:.3f}", batch_ratio));

    GrpoConfig anchored;
    anchored.kl_beta = 1e3;
    auto held = env.initial_policy();
    auto const pinned = train_toy(env, held, anchored, OptimizerSettings {}, options, reward);
    double const drift = l2_distance(pinned.final_params, pinned.initial_params);
    double const free_drift = l2_distance(run.final_params, run.initial_params);
    f.check(drift < 0.25, fmt::format("drift {:.4f}", drift));
    f.check(drift < 0.05 * free_drift, fmt::format("drift {:.4f} vs free {:.4f}", drift, free_drift));
    f.note(fmt::format("probe {:.4f} -> {:.4f} ({:.2f}x), batch {:.4f} -> {:.4f} ({:.2f}x), drift {:.3f} "
                       "(beta 0: {:.3f})",
                       run.initial_eval_reward, run.final_eval_reward, probe_ratio, first, last, batch_ratio, drift,
                       free_drift));
}

void flow_sanity(Failures& f)
{
    auto policy = ToyFlowEnv {}.initial_policy();
    auto const report = train_flow_matching(policy, circle_dataset(256, 0), FlowTrainOptions {});
    double const ratio = report.initial_loss / report.final_loss;
    f.check(ratio >= 10.0, fmt::format("reduction {:.2f}x", ratio));
    f.note(fmt::format("loss {:.4f} -> {:.5f} ({:.1f}x)", report.initial_loss, report.final_loss, ratio));
}

void control_flow(Failures& f)
{
    VisualContext const ref {{ImageRef::from_vector({1.0, 0.0})}};
    Prompt const prompt("keep the subject of image_1");
    int scripts = 0;
    for (int n = 1; n <= 4; ++n) {
        EngineConfig config;
        config.max_iterations = n;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            std::vector<bool> script(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k)
                script[static_cast<std::size_t>(k)] = (mask >> k) & 1u;
            auto const first = std::find(script.begin(), script.end(), true);
            bool const hit = first != script.end();
            std::size_t const expected = hit ? static_cast<std::size_t>(first - script.begin()) + 1 : n;

            vacot::testing::ScriptedBackend b(script);
            auto const t = run_episode(b, prompt, ref, config);
            auto const tag = fmt::format("N={} mask={}", n, mask);
            f.check(b.plan_calls == 1, tag + " plan calls");
            f.check(b.refine_calls == expected, tag + " refine calls");
            f.check(b.refine_calls >= 1 && b.refine_calls <= static_cast<std::size_t>(n), tag + " range");
            f.check(t.steps.size() == expected, tag + " steps");
            f.check(t.terminated_by == (hit ? Termination::Satisfied : Termination::MaxIterations), tag + " end");
            f.check(t.final_image == (t.steps.empty() ? t.initial_image : t.steps.back().image), tag + " final");
            ++scripts;
        }
    }
    vacot::testing::ScriptedBackend never({});
    auto const cut = run_episode(never, prompt, ref, EngineConfig {});
    f.check(cut.steps.size() == 3 && never.refine_calls == 3 && cut.terminated_by == Termination::MaxIterations,
            "default cut at 3");

    Gen gen(606);
    std::size_t steps = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SimSpec spec;
        spec.seed = seed;
        spec.noise_scale = gen.real(0.2, 2.0);
        spec.refinement_rate = gen.real(0.05, 1.0);
        spec.satisfaction_threshold = gen.real(0.5, 0.999);
        auto backend = simulated_backend(spec);
        VisualContext const one {{ImageRef::from_vector(gen.vec(2))}};
        EngineConfig config;
        config.max_iterations = 8;
        auto const t = run_episode(*backend, prompt, one, config);
        auto const& v = one.images[0].vector();
        double prev = cosine(t.initial_image.vector(), v);
        for (auto const& s : t.steps) {
            double const c = cosine(s.image.vector(), v);
            f.check(c >= prev - 1e-12, fmt::format("seed {} cosine {:.6f} < {:.6f}", seed, c, prev));
            prev = c;
            ++steps;
        }
    }
    f.note(fmt::format("{} scripts, {} simulated steps over 100 seeds", scripts, steps));
}

void reward_algebra(Failures& f)
{
    Gen gen(707);
    MockSuite const suite(7);
    for (int i = 0; i < 1000; ++i) {
        auto const n = gen.index(1, 3);
        int const kind = static_cast<int>(gen.index(0, 1));
        auto const ctx = gen.context(n, kind);
        auto const plan = gen.checklist(n);
        RewardWeights w;
        w.w_visual = gen.real(0, 3);
        w.w_text = gen.real(0, 3);
        if (gen.coin())
            w.extras["pick"] = gen.real(0, 3);
        auto const b = total_reward(plan, ctx, gen.image(3, kind), gen.nonempty_phrase(), suite, w);
        f.check(b.r_total == combine(w, b.r_visual, b.r_text, b.extra_scores), fmt::format("identity #{}", i));
    }
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        auto const img = gen.image(gen.index(1, 8));
        worst = std::max(worst, std::abs(object_similarity(suite, img, img, gen.nonempty_phrase()).score - 1.0));
    }
    f.check(worst <= 1e-6, fmt::format("self-similarity {:.3g}", worst));
    auto const img = gen.image();
    auto const miss = object_similarity(suite, img, img, "ABSENT hat");
    f.check(miss.score == 0.0 && miss.detail == "detection-miss", "detection miss");

    auto const doc = json::parse(read_file(vacot::testing::fixture("preference_pairs.json")));
    auto const report = preference_validation(vacot::testing::load_preference_pairs(doc), suite);
    double const oracle = vacot::testing::brute_force_preference(doc);
    f.check(report.fraction == oracle, fmt::format("preference {} vs oracle {}", report.fraction, oracle));
    f.note(fmt::format("preference {} (oracle {}), self-similarity error {:.2g}", report.fraction, oracle, worst));
}

std::vector<bool> expected_mask(SampleKind kind, std::size_t images)
{
    std::vector<bool> m(1 + images, false);
    switch (kind) {
    case SampleKind::Planning: m.insert(m.end(), {true, true}); break;
    case SampleKind::CorrectionSuboptimal: m.insert(m.end(), {false, false, true, true}); break;
    case SampleKind::CorrectionPerfect: m.insert(m.end(), {false, false, true}); break;
    }
    return m;
}

// Consecutive fill: start a new batch whenever the next length would overflow.
std::size_t greedy_batch_count(const std::vector<std::size_t>& lengths, std::size_t budget)
{
    std::size_t batches = 0, used = 0;
    for (auto l : lengths) {
        if (batches == 0 || used + l > budget) {
            ++batches;
            used = 0;
        }
        used += l;
    }
    return batches;
}

void dataset_pipeline(Failures& f)
{
    auto const triples = parse_raw_triples(read_file(vacot::testing::fixture("triples50.jsonl")));
    f.check(triples.size() == 50, "50 triples");
    vacot::testing::TempDir dir("acceptance");
    {
        auto const cache = std::make_shared<AnnotationCache>(dir.path());
        ServiceAnnotator recorder(caching_transport(mock_annotator_service(), cache, CacheMode::ReadWrite));
        auto const planned = build_planning(triples, recorder);
        MockDegrader degrader;
        build_correction(planned.samples, degrader, recorder, {});
    }
    auto replay = [&] {
        int upstream = 0;
        JsonTransport const offline = [&](const json&) -> json {
            ++upstream;
            throw Error(Errc::TransportFailure, "offline");
        };
        auto const cache = std::make_shared<AnnotationCache>(dir.path());
        ServiceAnnotator annotator(caching_transport(offline, cache, CacheMode::ReplayOnly));
        auto const planned = build_planning(triples, annotator, {4});
        MockDegrader degrader;
        auto const corrected = build_correction(planned.samples, degrader, annotator, {0.2, 0, 4});
        f.check(upstream == 0, "replay stayed offline");
        f.check(planned.quarantine.empty() && corrected.quarantine.empty(), "replay had no misses");
        return to_jsonl(planned.samples) + to_jsonl(corrected.samples);
    };
    auto const a = replay();
    auto const b = replay();
    f.check(!a.empty() && a == b, "replay byte-identical");

    Gen gen(808);
    auto const tok = whitespace_tokenizer();
    std::array<int, 3> kinds {};
    for (int i = 0; i < 500; ++i) {
        auto const sample = gen.sample();
        auto const seq = std::visit([&](auto const& s) { return to_training_sequence(s, tok, 64); }, sample);
        auto const images = std::visit([](auto const& s) { return s.context.size(); }, sample);
        std::vector<bool> mask;
        std::size_t total = 0;
        for (auto const& seg : seq.segments) {
            mask.push_back(seg.need_loss);
            total += seg.token_length;
        }
        f.check(mask == expected_mask(seq.kind, images), fmt::format("mask #{}", i));
        f.check(total == seq.total_tokens, fmt::format("total #{}", i));
        f.check(seq.segments.back().modality == (seq.kind == SampleKind::CorrectionPerfect ? Modality::Text
                                                                                            : Modality::Image),
                fmt::format("final modality #{}", i));
        ++kinds[static_cast<std::size_t>(seq.kind)];
    }
    f.check(kinds[0] > 0 && kinds[1] > 0 && kinds[2] > 0, "all kinds drawn");

    std::size_t batches_seen = 0;
    for (int round = 0; round < 10; ++round) {
        std::vector<TrainingSequence> seqs(1000);
        std::vector<std::size_t> lengths(seqs.size());
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            lengths[i] = gen.coin(0.1) ? gen.index(16000, 32000) : gen.index(1, 8000);
            seqs[i].kind = SampleKind::Planning;
            seqs[i].segments.push_back({Modality::Text, true, "t", {}, lengths[i]});
            seqs[i].total_tokens = lengths[i];
        }
        auto const batches = pack(seqs, kDefaultPackBudget);
        std::vector<std::size_t> seen;
        for (auto const& batch : batches) {
            std::size_t sum = 0;
            for (auto i : batch.indices) {
                seen.push_back(i);
                sum += lengths[i];
            }
            f.check(sum == batch.total_tokens && sum <= kDefaultPackBudget, "batch within budget");
        }
        std::sort(seen.begin(), seen.end());
        std::vector<std::size_t> all(seqs.size());
        std::iota(all.begin(), all.end(), 0);
        f.check(seen == all, "multiset conserved");
        f.check(batches.size() == greedy_batch_count(lengths, kDefaultPackBudget), "greedy count");
        batches_seen += batches.size();
    }
    f.note(fmt::format("replay {} bytes, kinds {}/{}/{}, {} batches over 10x1000 sequences", a.size(), kinds[0],
                       kinds[1], kinds[2], batches_seen));
}

constexpr const char* kDancingPlan = R"({
  "origin": "ground_truth_annotation",
  "items": [
    {"check_type": "identity",
     "source": {"image_id": "image_1", "description": "the woman"},
     "target": {"image_id": "GENERATED", "description": "the woman"}},
    {"check_type": "style",
     "source": {"image_id": "image_2", "description": "artistic style"},
     "target": {"image_id": "GENERATED", "description": "artistic style"}}
  ]
})";

void schema_round_trip(Failures& f)
{
    Gen gen(909);
    for (int i = 0; i < 1000; ++i) {
        auto const plan = gen.checklist(gen.index(1, 5));
        f.check(parse_checklist(serialize(plan)) == plan, fmt::format("checklist #{}", i));
        auto const fb = gen.feedback(plan);
        f.check(parse_feedback(serialize(fb)) == fb, fmt::format("feedback #{}", i));
    }
    auto const types = [](const Checklist& c) {
        std::vector<CheckType> t;
        for (auto const& item : c.items())
            t.push_back(item.check_type);
        return t;
    };
    std::vector<CheckType> const expected {CheckType::Identity, CheckType::Style};
    auto const parsed = parse_checklist(kDancingPlan);
    f.check(types(parsed) == expected, "document types");
    f.check(parsed.items()[0].source.image_id == ImageId::input(1) &&
                parsed.items()[1].source.image_id == ImageId::input(2),
            "document sources");

    Prompt const prompt("the woman in image_1 is dancing, in the artistic style of image_2");
    VisualContext const ctx {{ImageRef::from_vector({1, 0.2, 0}), ImageRef::from_vector({0, 0.3, 1})}};
    ServiceAnnotator annotator(mock_annotator_service());
    auto const annotated = annotator.annotate_plan(prompt, ctx);
    f.check(types(annotated) == expected, "annotated types");
    f.check(parse_checklist(serialize(annotated)) == annotated, "annotated round trip");
    f.note("1000 checklists and feedbacks, dancing-woman plan {identity, style}");
}

} // namespace

int main()
{
    std::vector<Criterion> const criteria {
        {1, "advantage normalisation", 1.0, advantage_law},
        {2, "objective identity", 1.0, objective_identity},
        {3, "gradient check", 30.0, gradient_check},
        {4, "toy GRPO convergence", 120.0, toy_convergence},
        {5, "flow-matching sanity", 60.0, flow_sanity},
        {6, "refinement control flow", 5.0, control_flow},
        {7, "reward algebra", 5.0, reward_algebra},
        {8, "dataset pipeline", 10.0, dataset_pipeline},
        {9, "schema round trip", 2.0, schema_round_trip},
    };
    int failed = 0;
    for (auto const& c : criteria) {
        Failures f;
        auto const start = std::chrono::steady_clock::now();
        try {
            c.body(f);
        } catch (const std::exception& e) {
            f.check(false, std::string("threw: ") + e.what());
        }
        double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool const slow = secs >= c.limit_seconds;
        if (slow)
            f.check(false, fmt::format("over {:.0f} s limit", c.limit_seconds));
        bool const pass = !f.failed();
        failed += pass ? 0 : 1;
        std::cout << fmt::format("{} {}. {} ({:.3f} s < {:.0f} s): {}\n", pass ? "PASS" : "FAIL", c.id, c.title, secs,
                                 c.limit_seconds, f.summary());
    }
    std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
