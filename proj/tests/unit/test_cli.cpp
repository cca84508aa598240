// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include "vacot/cli.hpp"

#include <doctest.h>

#include <sstream>

using namespace vacot;
using vacot::testing::fixture;
using vacot::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run vacot_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "vacot");
    std::vector<const char*> argv;
    for (auto const& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    int const code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

} // namespace

TEST_CASE("usage errors exit 2")
{
    auto const unknown = vacot_cli({"frobnicate"});
    CHECK(unknown.code == cli::kExitUsage);
    CHECK(unknown.err.find("Usage") != std::string::npos);
    CHECK(vacot_cli({}).code == cli::kExitUsage);
    auto const missing = vacot_cli({"infer", "--prompt", "x"});
    CHECK(missing.code == cli::kExitUsage);
    CHECK(missing.err.find("--trace-out") != std::string::npos);
    auto const bad_value = vacot_cli({"infer", "--prompt", "x", "--trace-out", "t", "--backend", "gpu"});
    CHECK(bad_value.code == cli::kExitUsage);
    CHECK(bad_value.err.find("--backend") != std::string::npos);
    CHECK(vacot_cli({"dataset"}).code == cli::kExitUsage);
}

TEST_CASE("infer is replay-deterministic")
{
    TempDir dir("infer");
    write_file_atomic(dir / "a.vec", "1 0");
    write_file_atomic(dir / "b.vec", "0 1");
    std::vector<std::string> args {"infer",  "--backend", "sim",      "--seed",          "7",
                                   "--max-iter", "3",      "--prompt", "keep the subject", "--context",
                                   (dir / "a.vec").string(), (dir / "b.vec").string(), "--record-rewards",
                                   "--trace-out"};
    auto a = args, b = args;
    a.push_back((dir / "t1.json").string());
    b.push_back((dir / "t2.json").string());
    auto const r1 = vacot_cli(a);
    REQUIRE(r1.code == 0);
    REQUIRE(vacot_cli(b).code == 0);
    CHECK(read_file(dir / "t1.json") == read_file(dir / "t2.json"));
    auto const trace = parse_trace(read_file(dir / "t1.json"));
    CHECK(trace.steps.size() == 3);
    CHECK(trace.steps[0].reward.has_value());
}

TEST_CASE("domain errors exit 1 with the error name")
{
    TempDir dir("domain");
    auto const r = vacot_cli({"infer", "--prompt", "x", "--context", (dir / "missing.vec").string(), "--trace-out",
                              (dir / "t.json").string()});
    CHECK(r.code == cli::kExitDomainError);
    CHECK(r.err.find("IoFailure") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "t.json"));

    write_file_atomic(dir / "bad.json", R"({"engine": {"max_iterations": 0}})");
    auto const c = vacot_cli({"--config", (dir / "bad.json").string(), "infer", "--prompt", "x", "--trace-out",
                              (dir / "t.json").string()});
    CHECK(c.code == cli::kExitDomainError);
    CHECK(c.err.find("InvalidConfig") != std::string::npos);

    write_file_atomic(dir / "big.jsonl", R"({"sample_kind": "planning", "total_tokens": 40000, "segments": [
        {"modality": "text", "need_loss": false, "token_length": 40000, "text": "x"}]})"
                                             "\n");
    // The document above spans two lines and is not JSONL.
    auto const m = vacot_cli({"dataset", "pack", "--in", (dir / "big.jsonl").string(), "--out", (dir / "p").string()});
    CHECK(m.code == cli::kExitDomainError);
    CHECK(m.err.find("MalformedInput") != std::string::npos);

    write_file_atomic(dir / "big1.jsonl",
                      R"({"sample_kind": "planning", "total_tokens": 40000, "segments": [{"modality": "text", "need_loss": false, "token_length": 40000, "text": "x"}]})"
                      "\n");
    auto const o = vacot_cli({"dataset", "pack", "--in", (dir / "big1.jsonl").string(), "--out", (dir / "q").string()});
    CHECK(o.code == cli::kExitDomainError);
    CHECK(o.err.find("SequenceExceedsBudget") != std::string::npos);
}

TEST_CASE("dataset pack writes one file per batch")
{
    TempDir dir("pack");
    auto const r = vacot_cli({"dataset", "pack", "--budget", "32000", "--in", fixture("three_sequences.jsonl").string(),
                              "--out", (dir / "out").string()});
    REQUIRE(r.code == 0);
    std::size_t batch_files = 0;
    for (auto const& e : fs::directory_iterator(dir / "out"))
        batch_files += e.path().filename().string().rfind("batch_", 0) == 0;
    CHECK(batch_files == 2);
    auto const index = nlohmann::json::parse(read_file(dir / "out" / "batches.json"));
    CHECK(index[0]["indices"] == nlohmann::json::array({0, 1}));
    CHECK(index[1]["indices"] == nlohmann::json::array({2}));
}

TEST_CASE("dataset build, replay, correction, pack")
{
    TempDir dir("build");
    auto const in = fixture("triples50.jsonl").string();
    auto const cache = (dir / "cache").string();
    REQUIRE(vacot_cli({"dataset", "build-planning", "--in", in, "--out", (dir / "a").string(), "--cache", cache}).code ==
            0);
    REQUIRE(vacot_cli({"dataset", "build-planning", "--in", in, "--out", (dir / "b").string(), "--cache", cache,
                       "--replay-only", "--concurrency", "3"})
                .code == 0);
    CHECK(read_file(dir / "a" / "planning.jsonl") == read_file(dir / "b" / "planning.jsonl"));
    CHECK(read_file(dir / "b" / "quarantine.jsonl").empty());
    auto const meta = nlohmann::json::parse(read_file(dir / "a" / "metadata.json"));
    CHECK(meta["sft"]["learning_rate"] == 2e-5);
    CHECK(meta["sft"]["warmup_steps"] == 500);
    CHECK(meta["sft"]["gpus"] == 8);

    auto const planning = (dir / "a" / "planning.jsonl").string();
    REQUIRE(vacot_cli({"dataset", "build-correction", "--in", planning, "--out", (dir / "c").string(), "--cache", cache,
                       "--seed", "3", "--perfect-fraction", "0.5"})
                .code == 0);
    auto const corpus = parse_corpus(read_file(dir / "c" / "correction.jsonl"));
    CHECK(corpus.size() >= 50);

    auto const p = vacot_cli(
        {"dataset", "pack", "--in", (dir / "c" / "correction.jsonl").string(), "--out", (dir / "packed").string()});
    REQUIRE(p.code == 0);
    CHECK(fs::exists(dir / "packed" / "batch_0000.jsonl"));
}

TEST_CASE("train, then report")
{
    TempDir dir("train");
    write_file_atomic(dir / "c.json", R"({"toy_train": {"iterations": 12}})");
    auto const t = vacot_cli({"--config", (dir / "c.json").string(), "train-grpo-toy", "--seed", "2", "--out",
                              (dir / "run").string()});
    REQUIRE(t.code == 0);
    auto const rows = parse_training_tsv(read_file(dir / "run" / "training.tsv"));
    CHECK(rows.size() == 12);

    write_file_atomic(dir / "a.vec", "1 0");
    REQUIRE(vacot_cli({"infer", "--prompt", "p", "--context", (dir / "a.vec").string(), "--trace-out",
                       (dir / "t.json").string(), "--record-rewards"})
                .code == 0);
    auto const r = vacot_cli({"report", "--trace", (dir / "t.json").string(), "--training",
                              (dir / "run" / "training.tsv").string(), "--out", (dir / "rep").string()});
    REQUIRE(r.code == 0);
    for (auto const* name : {"termination_histogram.tsv", "termination_histogram.svg", "per_iteration_reward.tsv",
                             "grpo_summary.tsv", "grpo_curve.svg"})
        CHECK(fs::exists(dir / "rep" / name));
    CHECK(read_file(dir / "rep" / "termination_histogram.tsv").find("1\t1\n") != std::string::npos);

    write_file_atomic(dir / "junk.tsv", "iter\tmean_reward\n1\t2\n");
    auto const bad = vacot_cli({"report", "--training", (dir / "junk.tsv").string(), "--out", (dir / "r2").string()});
    CHECK(bad.code == cli::kExitDomainError);
    CHECK(bad.err.find("MalformedInput") != std::string::npos);
}

TEST_CASE("score")
{
    TempDir dir("score");
    write_file_atomic(dir / "ref.vec", "1 0");
    write_file_atomic(dir / "gen.vec", "1 0");
    write_file_atomic(dir / "plan.json", R"({"origin": "model_generated", "items": [{"check_type": "identity",
        "source": {"image_id": "image_1", "description": "dog"}, "target": {"image_id": "GENERATED", "description": "dog"}}]})");
    write_file_atomic(dir / "w.json", R"({"w_visual": 1.0, "w_text": 0.0})");
    auto const r = vacot_cli({"score", "--plan", (dir / "plan.json").string(), "--context", (dir / "ref.vec").string(),
                              "--image", (dir / "gen.vec").string(), "--prompt", "a dog", "--weights",
                              (dir / "w.json").string()});
    REQUIRE(r.code == 0);
    auto const b = breakdown_from_json(nlohmann::json::parse(r.out));
    CHECK(b.r_visual == doctest::Approx(1.0));
    CHECK(b.r_total == b.r_visual);
}
