// SPDX-License-Identifier: Apache-2.0
#include "vacot/cli.hpp"

#include "vacot/annotator.hpp"
#include "vacot/config.hpp"
#include "vacot/dataset.hpp"
#include "vacot/engine.hpp"
#include "vacot/error.hpp"
#include "vacot/http_backend.hpp"
#include "vacot/http_scorer.hpp"
#include "vacot/mock_suite.hpp"
#include "vacot/packing.hpp"
#include "vacot/report.hpp"
#include "vacot/sim_backend.hpp"
#include "vacot/toy_env.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <optional>

namespace vacot::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Files ending in .vec or .txt hold feature vectors; anything else is an
// opaque image file passed by path.
ImageRef load_image(const std::string& path)
{
    auto const ext = fs::path(path).extension().string();
    if (ext == ".vec" || ext == ".txt")
        return load_vector_image(path);
    if (!fs::exists(path))
        throw Error(Errc::IoFailure, "no such file: " + path);
    return ImageRef::from_path(path);
}

VisualContext load_context(const std::vector<std::string>& paths)
{
    VisualContext ctx;
    for (auto const& p : paths)
        ctx.images.push_back(load_image(p));
    return ctx;
}

JsonTransport service_transport(const std::string& url, const std::string& token, const char* what)
{
    if (url.empty())
        throw Error(Errc::InvalidConfig, fmt::format("no {} endpoint configured", what));
    return with_retries(http_transport({url, token, 30}), RetryPolicy {});
}

std::unique_ptr<ScorerSuite> make_suite(const std::string& kind, const AppConfig& cfg)
{
    if (kind == "mock")
        return std::make_unique<MockSuite>(cfg.engine.seed);
    std::vector<std::string> extras;
    for (auto const& [name, _] : cfg.weights.extras)
        extras.push_back(name);
    return std::make_unique<HttpScorerSuite>(service_transport(cfg.scorer_url, cfg.scorer_token, "scorer"),
                                             std::move(extras));
}

void write_output(const fs::path& path, std::string_view contents)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    write_file_atomic(path, contents);
}

std::unique_ptr<AnnotatorClient> make_annotator(const std::string& kind, const AppConfig& cfg,
                                                const std::string& cache_dir, bool replay_only)
{
    JsonTransport upstream = kind == "mock"
                                 ? mock_annotator_service()
                                 : service_transport(cfg.annotator_url, cfg.annotator_token, "annotator");
    if (!cache_dir.empty())
        upstream = caching_transport(std::move(upstream), std::make_shared<AnnotationCache>(cache_dir),
                                     replay_only ? CacheMode::ReplayOnly : CacheMode::ReadWrite);
    else if (replay_only)
        throw Error(Errc::InvalidConfig, "--replay-only needs --cache");
    return std::make_unique<ServiceAnnotator>(std::move(upstream));
}

std::string quarantine_jsonl(const std::vector<QuarantineRecord>& q)
{
    return to_jsonl(q);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app {"Visual-aware chain-of-thought generation toolkit", "vacot"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

    // infer
    auto* infer = app.add_subcommand("infer", "Run one plan / evaluate / refine episode");
    std::string prompt_text, backend = "sim", trace_out, suite = "mock";
    std::vector<std::string> context_paths;
    std::optional<int> max_iter;
    std::optional<std::uint64_t> seed;
    bool record_rewards = false;
    infer->add_option("--prompt", prompt_text, "Text prompt")->required();
    infer->add_option("--context", context_paths, "Reference images (.vec/.txt = feature vectors)");
    infer->add_option("--max-iter", max_iter, "Maximum refinement iterations")->check(CLI::PositiveNumber);
    infer->add_option("--backend", backend, "Generation backend")->check(CLI::IsMember({"sim", "http"}));
    infer->add_option("--seed", seed, "Random seed");
    infer->add_option("--trace-out", trace_out, "Trace output file")->required();
    infer->add_flag("--record-rewards", record_rewards, "Score every step (never affects control flow)");
    infer->add_option("--suite", suite, "Scorer suite for --record-rewards")->check(CLI::IsMember({"mock", "http"}));

    // score
    auto* score = app.add_subcommand("score", "Score a generated image against a plan");
    std::string plan_path, image_path, weights_path, score_out;
    std::vector<std::string> score_context;
    std::string score_prompt;
    score->add_option("--plan", plan_path, "Checklist document")->required()->check(CLI::ExistingFile);
    score->add_option("--context", score_context, "Reference images");
    score->add_option("--image", image_path, "Generated image")->required();
    score->add_option("--prompt", score_prompt, "Text prompt")->required();
    score->add_option("--suite", suite, "Scorer suite")->check(CLI::IsMember({"mock", "http"}));
    score->add_option("--weights", weights_path, "Reward weights document")->check(CLI::ExistingFile);
    score->add_option("--out", score_out, "Write the breakdown here instead of stdout");

    // dataset
    auto* dataset = app.add_subcommand("dataset", "Build and pack training data");
    dataset->require_subcommand(1);
    std::string in_path, out_dir, cache_dir, annotator_kind = "mock";
    bool replay_only = false;
    std::optional<std::size_t> concurrency;
    std::optional<double> perfect_fraction;
    std::optional<std::size_t> budget, image_cost;

    auto* build_planning_cmd = dataset->add_subcommand("build-planning", "Annotate raw triples with plans");
    auto* build_correction_cmd = dataset->add_subcommand("build-correction", "Derive correction samples");
    for (auto* cmd : {build_planning_cmd, build_correction_cmd}) {
        cmd->add_option("--in", in_path, "Input JSONL")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "Output directory")->required();
        cmd->add_option("--cache", cache_dir, "Annotation record/replay cache directory");
        cmd->add_flag("--replay-only", replay_only, "Never contact the annotator; cache misses quarantine");
        cmd->add_option("--annotator", annotator_kind, "Annotator")->check(CLI::IsMember({"mock", "http"}));
        cmd->add_option("--concurrency", concurrency, "Parallel annotator requests")->check(CLI::PositiveNumber);
    }
    build_correction_cmd->add_option("--perfect-fraction", perfect_fraction, "Share of Perfect samples")
        ->check(CLI::Range(0.0, 1.0));
    build_correction_cmd->add_option("--seed", seed, "Random seed");

    auto* pack_cmd = dataset->add_subcommand("pack", "Render samples to sequences and pack them");
    pack_cmd->add_option("--in", in_path, "Corpus or sequence JSONL")->required()->check(CLI::ExistingFile);
    pack_cmd->add_option("--out", out_dir, "Output directory")->required();
    pack_cmd->add_option("--budget", budget, "Tokens per batch")->check(CLI::PositiveNumber);
    pack_cmd->add_option("--image-tokens", image_cost, "Tokens per image")->check(CLI::PositiveNumber);

    // train-grpo-toy
    auto* train = app.add_subcommand("train-grpo-toy", "Train the toy flow policy with GRPO");
    train->add_option("--seed", seed, "Random seed");
    train->add_option("--out", out_dir, "Output directory")->required();

    // report
    auto* report = app.add_subcommand("report", "Summarise traces and training runs");
    std::vector<std::string> trace_paths;
    std::string training_path;
    report->add_option("--trace", trace_paths, "Trace files (single document or JSONL)")->check(CLI::ExistingFile);
    report->add_option("--training", training_path, "Training TSV")->check(CLI::ExistingFile);
    report->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        if (e.get_name() == "ExtrasError" || e.get_name() == "RequiredError")
            err << app.help();
        return kExitUsage;
    }

    try {
        auto cfg = load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path));

        if (*infer) {
            if (max_iter)
                cfg.engine.max_iterations = *max_iter;
            if (seed) {
                cfg.engine.seed = *seed;
                cfg.sim.seed = *seed;
            }
            cfg.engine.record_rewards = record_rewards;
            cfg.engine.validate();
            Prompt const prompt(prompt_text);
            auto const ctx = load_context(context_paths);
            std::unique_ptr<GenerationBackend> gen;
            if (backend == "sim")
                gen = simulated_backend(cfg.sim);
            else
                gen = std::make_unique<HttpGenerationBackend>(
                    service_transport(cfg.backend_url, "", "generation backend"));
            std::unique_ptr<ScorerSuite> scorer_suite;
            std::optional<RewardEvaluator> evaluator;
            if (record_rewards) {
                scorer_suite = make_suite(suite, cfg);
                evaluator.emplace(*scorer_suite, cfg.weights);
            }
            auto const trace = run_episode(*gen, prompt, ctx, cfg.engine, evaluator ? &*evaluator : nullptr);
            write_output(trace_out, serialize(trace));
            out << fmt::format("{} after {} step(s)\n", to_string(trace.terminated_by), trace.steps.size());
            return kExitOk;
        }

        if (*score) {
            if (!weights_path.empty())
                cfg.weights = weights_from_json(json::parse(read_file(weights_path)));
            auto const plan = parse_checklist(read_file(plan_path));
            auto const ctx = load_context(score_context);
            auto const image = load_image(image_path);
            auto const scorer_suite = make_suite(suite, cfg);
            RewardEvaluator const evaluator(*scorer_suite, cfg.weights);
            auto const breakdown = evaluator(plan, ctx, image, Prompt(score_prompt).text());
            auto const doc = to_json(breakdown).dump(2) + "\n";
            if (score_out.empty())
                out << doc;
            else
                write_output(score_out, doc);
            return kExitOk;
        }

        if (*build_planning_cmd) {
            auto const triples = parse_raw_triples(read_file(in_path));
            auto annotator = make_annotator(annotator_kind, cfg, cache_dir, replay_only);
            auto const build = build_planning(triples, *annotator, {concurrency.value_or(cfg.concurrency)});
            fs::create_directories(out_dir);
            write_file_atomic(fs::path(out_dir) / "planning.jsonl", to_jsonl(build.samples));
            write_file_atomic(fs::path(out_dir) / "quarantine.jsonl", quarantine_jsonl(build.quarantine));
            json meta = {{"sft", to_json(SftMetadata {})},
                         {"samples", build.samples.size()},
                         {"quarantined", build.quarantine.size()}};
            write_file_atomic(fs::path(out_dir) / "metadata.json", meta.dump(2) + "\n");
            out << fmt::format("{} planning samples, {} quarantined\n", build.samples.size(),
                               build.quarantine.size());
            return kExitOk;
        }

        if (*build_correction_cmd) {
            std::vector<PlanningSample> planning;
            for (auto& s : parse_corpus(read_file(in_path))) {
                if (auto* p = std::get_if<PlanningSample>(&s))
                    planning.push_back(std::move(*p));
                else
                    throw Error(Errc::MalformedInput, "build-correction expects planning samples");
            }
            auto annotator = make_annotator(annotator_kind, cfg, cache_dir, replay_only);
            MockDegrader degrader;
            CorrectionOptions opts;
            opts.perfect_fraction = perfect_fraction.value_or(cfg.perfect_fraction);
            opts.seed = seed.value_or(cfg.engine.seed);
            opts.concurrency = concurrency.value_or(cfg.concurrency);
            auto const build = build_correction(planning, degrader, *annotator, opts);
            std::size_t perfect = 0;
            for (auto const& c : build.samples)
                perfect += c.kind == CorrectionKind::Perfect;
            fs::create_directories(out_dir);
            write_file_atomic(fs::path(out_dir) / "correction.jsonl", to_jsonl(build.samples));
            write_file_atomic(fs::path(out_dir) / "quarantine.jsonl", quarantine_jsonl(build.quarantine));
            json meta = {{"sft", to_json(SftMetadata {})},
                         {"suboptimal", build.samples.size() - perfect},
                         {"perfect", perfect},
                         {"quarantined", build.quarantine.size()},
                         {"perfect_fraction", opts.perfect_fraction},
                         {"seed", opts.seed}};
            write_file_atomic(fs::path(out_dir) / "metadata.json", meta.dump(2) + "\n");
            out << fmt::format("{} correction samples ({} perfect), {} quarantined\n", build.samples.size(), perfect,
                               build.quarantine.size());
            return kExitOk;
        }

        if (*pack_cmd) {
            auto const tokenizer = whitespace_tokenizer();
            auto const cost = image_cost.value_or(cfg.image_token_cost);
            std::vector<TrainingSequence> sequences;
            auto const text = read_file(in_path);
            std::istringstream lines(text);
            std::size_t lineno = 0;
            for (std::string line; std::getline(lines, line); ++lineno) {
                if (line.find_first_not_of(" \t\r") == std::string::npos)
                    continue;
                try {
                    auto const j = json::parse(line);
                    if (j.contains("sample_kind"))
                        sequences.push_back(training_sequence_from_json(j));
                    else
                        sequences.push_back(to_training_sequence(training_sample_from_json(j), tokenizer, cost));
                } catch (const json::exception& e) {
                    throw Error(Errc::MalformedInput, fmt::format("line {}: {}", lineno + 1, e.what()), lineno);
                }
            }
            auto const batches = pack(sequences, budget.value_or(cfg.pack_budget));
            fs::create_directories(out_dir);
            json index = json::array();
            for (std::size_t b = 0; b < batches.size(); ++b) {
                std::string body;
                for (auto i : batches[b].indices)
                    body += to_json(sequences[i]).dump() + "\n";
                auto const name = fmt::format("batch_{:04d}.jsonl", b);
                write_file_atomic(fs::path(out_dir) / name, body);
                auto entry = to_json(batches[b]);
                entry["file"] = name;
                index.push_back(std::move(entry));
            }
            write_file_atomic(fs::path(out_dir) / "batches.json", index.dump(2) + "\n");
            out << fmt::format("{} sequences in {} batch(es)\n", sequences.size(), batches.size());
            return kExitOk;
        }

        if (*train) {
            if (seed)
                cfg.toy_train.seed = *seed;
            auto policy = cfg.toy_env.initial_policy();
            auto const report_rows =
                train_toy(cfg.toy_env, policy, cfg.grpo, cfg.optimizer, cfg.toy_train, default_reward(cfg.toy_env));
            fs::create_directories(out_dir);
            write_file_atomic(fs::path(out_dir) / "training.tsv", to_tsv(report_rows.rows));
            write_file_atomic(fs::path(out_dir) / "policy.json", to_json(policy).dump(2) + "\n");
            json summary = {{"initial_eval_reward", report_rows.initial_eval_reward},
                            {"final_eval_reward", report_rows.final_eval_reward},
                            {"iterations", report_rows.rows.size()},
                            {"config", to_json(cfg)}};
            write_file_atomic(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
            out << fmt::format("eval reward {:.4f} -> {:.4f}\n", report_rows.initial_eval_reward,
                               report_rows.final_eval_reward);
            return kExitOk;
        }

        if (*report) {
            std::vector<EpisodeTrace> traces;
            for (auto const& p : trace_paths) {
                auto more = load_traces(read_file(p));
                traces.insert(traces.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
            }
            fs::create_directories(out_dir);
            auto const hist = termination_histogram(traces);
            write_file_atomic(fs::path(out_dir) / "termination_histogram.tsv", to_tsv(hist));
            write_file_atomic(fs::path(out_dir) / "termination_histogram.svg", render_histogram_svg(hist));
            write_file_atomic(fs::path(out_dir) / "per_iteration_reward.tsv", to_tsv(per_iteration_rewards(traces)));
            if (!training_path.empty()) {
                auto const rows = parse_training_tsv(read_file(training_path));
                write_file_atomic(fs::path(out_dir) / "grpo_summary.tsv", to_tsv(summarize_curve(rows)));
                write_file_atomic(fs::path(out_dir) / "grpo_curve.svg", render_curve_svg(rows));
            }
            out << fmt::format("{} episode(s) summarised\n", traces.size());
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.name() << ": " << e.what() << "\n";
        return kExitDomainError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << errc_name(Errc::MalformedInput) << ": " << e.what() << "\n";
        return kExitDomainError;
    } catch (const std::exception& e) {
        err << "error: " << errc_name(Errc::IoFailure) << ": " << e.what() << "\n";
        return kExitDomainError;
    }
    err << app.help();
    return kExitUsage;
}

} // namespace vacot::cli
